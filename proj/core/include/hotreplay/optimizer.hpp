#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hotreplay/image.hpp"
#include "hotreplay/rng.hpp"

namespace hotreplay::opt {

struct Flag {
  enum class Kind : uint8_t { Boolean, Enumerated };
  std::string name;
  Kind kind = Kind::Boolean;
  std::vector<std::string> values;  // enumerated domains; booleans use off/on
  std::string default_value;

  std::vector<std::string> domain() const {
    if (kind == Kind::Boolean) return {"off", "on"};
    return values;
  }
};

// Total assignment over the flag space. `drawn` records whether the
// sampler included the flag (drew its value) or left the default; it is
// not part of the set's identity.
struct Assignment {
  std::string flag;
  std::string value;
  bool drawn = false;
};

struct TransformationSet {
  std::vector<Assignment> assignments;  // flag-space order

  const std::string& value_of(const std::string& flag) const;
  bool enabled(const std::string& flag) const { return value_of(flag) == "on"; }
  // Order-independent identity: assignments sorted by flag name.
  std::string canonical_text() const;
};

struct FlagSpace {
  std::vector<Flag> flags;
  std::vector<std::string> helper_routines;  // symbols passes may introduce

  const Flag* find(const std::string& name) const;
};

// The bundled 12-flag space.
FlagSpace default_flag_space();

// JSON form so experiments can swap spaces without rebuilds. Flag names
// must name passes this library implements.
FlagSpace flag_space_from_json(const std::string& json_text);
std::string flag_space_to_json(const FlagSpace& space);

// Randomness the sampler consumes; tests can force the coin stream.
struct SampleSource {
  virtual ~SampleSource() = default;
  virtual bool coin() = 0;
  virtual uint64_t below(uint64_t n) = 0;
};

// Per flag: a fair coin decides inclusion; included flags draw a uniform
// parameter, excluded flags keep their default.
TransformationSet sample_set(const FlagSpace& space, SampleSource& src);
TransformationSet sample_set(const FlagSpace& space, Rng& rng);
TransformationSet defaults_set(const FlagSpace& space);
// The reference pipeline speedups are reported against.
TransformationSet baseline_pipeline(const FlagSpace& space);
// "flag=value,flag=value" (unlisted flags take defaults).
TransformationSet set_from_text(const FlagSpace& space, const std::string& text);

struct SpaceSize {
  double boolean_only;  // 2^N for N flags
  double full;          // product of per-flag option counts
};
SpaceSize space_size(const FlagSpace& space);

// Helper routine bodies (div_fast, memfill_fast) and the never-executed
// caller that pins their call-table slots in every link.
std::vector<FunctionObject> helper_objects(const FlagSpace& space);
FunctionObject make_dummy_caller(const FlagSpace& space);

// Applies the enabled passes in flag-space order. Pure function of
// (object, set); throws Error::PassInternal when a pass fails internally.
FunctionObject apply(const FunctionObject& hot, const TransformationSet& set,
                     const FlagSpace& space);

}  // namespace hotreplay::opt
