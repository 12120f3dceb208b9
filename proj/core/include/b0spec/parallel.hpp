#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace b0spec {

/// Worker count: B0SPEC_THREADS if set (≥1), else hardware concurrency.
std::size_t worker_count();

/// Runs body(i) for i in [0, n) on up to worker_count() threads. Callers write
/// results into index-addressed slots so output order never depends on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// splitmix64 mixing of a base seed and a stream index.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace b0spec
