#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>

namespace hudcalib {

// Worker-thread cap. Resolution order: set_thread_cap() override, then the
// HUDCALIB_THREADS environment variable, then hardware concurrency.
// 0 means auto.
std::size_t thread_cap();
void set_thread_cap(std::size_t cap);

// Runs body(begin, end) over contiguous chunks of [0, n), possibly on
// multiple threads. Chunks are disjoint, so bodies writing to distinct
// indices of a shared buffer need no synchronization.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

// Pairwise (cascade) summation; the reduction tree depends only on the
// element order, never on thread count.
double pairwise_sum(std::span<const double> xs);

double mean(std::span<const double> xs);

// Index of the equal-width bin over [0,1] containing x; the last bin is
// right-inclusive at 1.0.
std::size_t uniform_bin(double x, std::size_t bins);

// printf("%.*g")-style formatting used by the CSV writers.
std::string format_sig(double value, int significant_digits = 6);

// Deterministic RNG: a splitmix64 stream. Unlike the std:: distributions,
// every draw below is pinned to an exact algorithm, so seeded output is
// reproducible across standard-library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();
  double next_double();                              // [0, 1)
  std::size_t next_below(std::size_t bound);         // uniform over [0, bound)
  double next_gaussian();                            // Box-Muller, mean 0, sd 1
  std::size_t pick_weighted(std::span<const double> weights);

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Stateless mix of two 64-bit values; used to derive per-sample seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace hudcalib
