#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>

namespace fracsim {

/// Worker count: FRACSIM_THREADS when set to a positive integer, otherwise
/// the hardware concurrency.
int thread_count();

/// Runs body(i) for i in [0, n) on up to thread_count() threads. Results must
/// be written to per-index slots. After a failure no new indices start, and
/// the exception from the lowest failing index is rethrown once workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Independent stream for a (seed, a, b) triple.
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

}  // namespace fracsim
