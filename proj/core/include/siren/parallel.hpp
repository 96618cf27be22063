#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string_view>

namespace siren {

// Derives a child seed from a parent seed and a stage label. Stable across
// platforms and runs; every stochastic stage takes its seed from here.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view label);
std::uint64_t derive_seed(std::uint64_t parent, std::string_view label,
                          std::uint64_t index);

// Global cap on worker threads (the CLI's --jobs). 0 means hardware
// concurrency.
void set_max_jobs(std::size_t jobs);
std::size_t max_jobs();

// Runs body(i) for i in [0, n). Work is split over at most max_jobs()
// threads; exceptions from the body are rethrown (first one wins). Results
// must be written to per-index slots so the outcome does not depend on
// scheduling. Nested calls from inside a worker run serially.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace siren
