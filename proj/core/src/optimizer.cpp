#include "hotreplay/optimizer.hpp"

#include <algorithm>

#include <json.hpp>

#include "hotreplay/asm.hpp"
#include "hotreplay/passes.hpp"

namespace hotreplay::opt {

const std::string& TransformationSet::value_of(const std::string& flag) const {
  for (const auto& a : assignments) {
    if (a.flag == flag) return a.value;
  }
  throw Error(Error::Code::Internal, "no assignment for flag " + flag);
}

std::string TransformationSet::canonical_text() const {
  std::vector<std::pair<std::string, std::string>> kv;
  kv.reserve(assignments.size());
  for (const auto& a : assignments) kv.emplace_back(a.flag, a.value);
  std::sort(kv.begin(), kv.end());
  std::string out;
  for (const auto& [k, v] : kv) {
    if (!out.empty()) out += ',';
    out += k;
    out += '=';
    out += v;
  }
  return out;
}

const Flag* FlagSpace::find(const std::string& name) const {
  for (const auto& f : flags) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

FlagSpace default_flag_space() {
  FlagSpace s;
  auto boolean = [&](const char* name) {
    s.flags.push_back({name, Flag::Kind::Boolean, {}, "off"});
  };
  boolean("const-fold");
  boolean("dead-code-elim");
  boolean("strength-reduce");
  boolean("peephole-combine");
  boolean("redundant-load-elim");
  boolean("fast-helper-substitution");
  boolean("branch-straighten");
  s.flags.push_back({"loop-unroll", Flag::Kind::Enumerated, {"1", "2", "4", "8"}, "1"});
  s.flags.push_back({"scheduling", Flag::Kind::Enumerated, {"naive", "greedy"}, "naive"});
  boolean("spill-heavy-alloc");
  boolean("code-align-pad");
  boolean("bounds-check-hoist");
  s.helper_routines = {"div_fast", "memfill_fast"};
  return s;
}

FlagSpace flag_space_from_json(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  FlagSpace s;
  for (const auto& f : j.at("flags")) {
    Flag flag;
    flag.name = f.at("name").get<std::string>();
    std::string kind = f.at("kind").get<std::string>();
    if (kind == "bool") {
      flag.kind = Flag::Kind::Boolean;
      flag.default_value = f.value("default", "off");
    } else if (kind == "enum") {
      flag.kind = Flag::Kind::Enumerated;
      for (const auto& v : f.at("values")) flag.values.push_back(v.get<std::string>());
      if (flag.values.empty()) {
        throw Error(Error::Code::Usage, "enum flag with empty domain: " + flag.name);
      }
      for (size_t i = 0; i < flag.values.size(); ++i) {
        for (size_t k = i + 1; k < flag.values.size(); ++k) {
          if (flag.values[i] == flag.values[k]) {
            throw Error(Error::Code::Usage, "duplicate enum value in " + flag.name);
          }
        }
      }
      flag.default_value = f.value("default", flag.values.front());
    } else {
      throw Error(Error::Code::Usage, "unknown flag kind: " + kind);
    }
    s.flags.push_back(std::move(flag));
  }
  if (j.contains("helpers")) {
    for (const auto& h : j.at("helpers")) s.helper_routines.push_back(h.get<std::string>());
  }
  return s;
}

std::string flag_space_to_json(const FlagSpace& space) {
  nlohmann::json j;
  j["flags"] = nlohmann::json::array();
  for (const auto& f : space.flags) {
    nlohmann::json e;
    e["name"] = f.name;
    e["kind"] = f.kind == Flag::Kind::Boolean ? "bool" : "enum";
    if (f.kind == Flag::Kind::Enumerated) e["values"] = f.values;
    e["default"] = f.default_value;
    j["flags"].push_back(std::move(e));
  }
  j["helpers"] = space.helper_routines;
  return j.dump(2);
}

TransformationSet sample_set(const FlagSpace& space, SampleSource& src) {
  TransformationSet set;
  for (const auto& f : space.flags) {
    Assignment a;
    a.flag = f.name;
    if (src.coin()) {
      a.drawn = true;
      std::vector<std::string> domain = f.domain();
      a.value = domain[src.below(domain.size())];
    } else {
      a.drawn = false;
      a.value = f.default_value;
    }
    set.assignments.push_back(std::move(a));
  }
  return set;
}

TransformationSet sample_set(const FlagSpace& space, Rng& rng) {
  struct RngSource : SampleSource {
    Rng& rng;
    explicit RngSource(Rng& r) : rng(r) {}
    bool coin() override { return rng.coin(); }
    uint64_t below(uint64_t n) override { return rng.below(n); }
  } src(rng);
  return sample_set(space, src);
}

TransformationSet defaults_set(const FlagSpace& space) {
  TransformationSet set;
  for (const auto& f : space.flags) set.assignments.push_back({f.name, f.default_value, false});
  return set;
}

TransformationSet baseline_pipeline(const FlagSpace& space) {
  TransformationSet set = defaults_set(space);
  auto put = [&](const std::string& flag, const std::string& value) {
    for (auto& a : set.assignments) {
      if (a.flag == flag) {
        a.value = value;
        return;
      }
    }
  };
  put("const-fold", "on");
  put("dead-code-elim", "on");
  put("strength-reduce", "on");
  put("peephole-combine", "on");
  put("redundant-load-elim", "on");
  put("loop-unroll", "2");
  put("scheduling", "greedy");
  return set;
}

TransformationSet set_from_text(const FlagSpace& space, const std::string& text) {
  TransformationSet set = defaults_set(space);
  size_t pos = 0;
  while (pos < text.size()) {
    size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    std::string item = text.substr(pos, comma - pos);
    pos = comma + 1;
    if (item.empty()) continue;
    size_t eq = item.find('=');
    if (eq == std::string::npos) throw Error(Error::Code::Usage, "expected flag=value: " + item);
    std::string flag = item.substr(0, eq);
    std::string value = item.substr(eq + 1);
    const Flag* f = space.find(flag);
    if (!f) throw Error(Error::Code::Usage, "unknown flag: " + flag);
    std::vector<std::string> domain = f->domain();
    if (std::find(domain.begin(), domain.end(), value) == domain.end()) {
      throw Error(Error::Code::Usage, "value " + value + " not in domain of " + flag);
    }
    for (auto& a : set.assignments) {
      if (a.flag == flag) a.value = value;
    }
  }
  return set;
}

SpaceSize space_size(const FlagSpace& space) {
  SpaceSize out{1.0, 1.0};
  for (const auto& f : space.flags) {
    out.boolean_only *= 2.0;
    out.full *= double(f.domain().size());
  }
  return out;
}

std::vector<FunctionObject> helper_objects(const FlagSpace& space) {
  std::vector<FunctionObject> out;
  for (const auto& name : space.helper_routines) {
    if (name == "div_fast") {
      // r0 = r1 / r2 via the hardware divider; callers guarantee r2 != 0.
      FunctionBuilder b("div_fast");
      b.div(0, 1, 2);
      b.ret();
      out.push_back(b.finish());
    } else if (name == "memfill_fast") {
      // r1 = dst, r2 = value, r3 = word count; unrolled by four.
      FunctionBuilder b("memfill_fast");
      auto head = b.make_label();
      auto main4 = b.make_label();
      auto rem = b.make_label();
      auto rbody = b.make_label();
      auto done = b.make_label();
      b.mov(4, 1);
      b.ldi(5, 0);
      b.bind(head);
      b.addi(0, 5, 3);
      b.blt(0, 3, main4);
      b.jmp(rem);
      b.bind(main4);
      b.st(2, 4, 0);
      b.st(2, 4, 8);
      b.st(2, 4, 16);
      b.st(2, 4, 24);
      b.addi(4, 4, 32);
      b.addi(5, 5, 4);
      b.jmp(head);
      b.bind(rem);
      b.blt(5, 3, rbody);
      b.jmp(done);
      b.bind(rbody);
      b.st(2, 4, 0);
      b.addi(4, 4, 8);
      b.addi(5, 5, 1);
      b.jmp(rem);
      b.bind(done);
      b.mov(0, 3);
      b.ret();
      out.push_back(b.finish());
    } else {
      throw Error(Error::Code::Usage, "unknown helper routine: " + name);
    }
  }
  return out;
}

FunctionObject make_dummy_caller(const FlagSpace& space) {
  // Never executed; its calls force every optimizer-introducible helper
  // into the call table so variant links never shift addresses.
  FunctionBuilder b(kDummyCallerSymbol);
  for (const auto& name : space.helper_routines) b.callt(name);
  b.ret();
  return b.finish();
}

FunctionObject apply(const FunctionObject& hot, const TransformationSet& set,
                     const FlagSpace& space) {
  try {
    IrProgram ir = ir_decode(hot);
    for (const auto& f : space.flags) {
      const std::string& v = set.value_of(f.name);
      if (f.name == "const-fold" && v == "on") {
        pass_const_fold(ir);
      } else if (f.name == "dead-code-elim" && v == "on") {
        pass_dead_code_elim(ir);
      } else if (f.name == "strength-reduce" && v == "on") {
        pass_strength_reduce(ir);
      } else if (f.name == "peephole-combine" && v == "on") {
        pass_peephole(ir);
      } else if (f.name == "redundant-load-elim" && v == "on") {
        pass_redundant_load_elim(ir);
      } else if (f.name == "fast-helper-substitution" && v == "on") {
        pass_fast_helper(ir);
      } else if (f.name == "branch-straighten" && v == "on") {
        pass_branch_straighten(ir);
      } else if (f.name == "loop-unroll" && v != "1") {
        pass_loop_unroll(ir, std::stoi(v));
      } else if (f.name == "scheduling" && v == "greedy") {
        pass_schedule_greedy(ir);
      } else if (f.name == "spill-heavy-alloc" && v == "on") {
        pass_spill_heavy(ir);
      } else if (f.name == "code-align-pad" && v == "on") {
        pass_code_align_pad(ir);
      } else if (f.name == "bounds-check-hoist" && v == "on") {
        pass_bounds_check_hoist(ir);
      }
    }
    return ir_encode(ir, hot.name);
  } catch (const Error& e) {
    if (e.code() == Error::Code::PassInternal) throw;
    throw Error(Error::Code::PassInternal, std::string("pass failure: ") + e.what());
  } catch (const std::exception& e) {
    throw Error(Error::Code::PassInternal, std::string("pass failure: ") + e.what());
  }
}

}  // namespace hotreplay::opt
