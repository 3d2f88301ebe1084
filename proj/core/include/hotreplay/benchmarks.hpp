#pragma once

#include <string>
#include <vector>

#include "hotreplay/image.hpp"

namespace hotreplay::bench {

// Bundled compute benchmarks. Each manifest carries the guest objects, the
// declared hot function, input bytes derived from a seed, and the
// observable output window that defines semantic equality.
std::vector<std::string> bundled_names();
bool is_bundled(const std::string& name);
// The two benchmarks constructed with a large mapped heap and a small hot
// working set (the storage-saving measurement targets).
bool is_large_heap(const std::string& name);

BenchmarkManifest make_benchmark(const std::string& name, uint64_t input_seed);

}  // namespace hotreplay::bench
