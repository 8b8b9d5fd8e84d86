#include "hudcalib/util.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <stdexcept>
#include <thread>
#include <vector>

namespace hudcalib {

namespace {

std::atomic<std::size_t> g_thread_cap{SIZE_MAX};  // SIZE_MAX = not overridden

std::size_t env_thread_cap() {
  const char* env = std::getenv("HUDCALIB_THREADS");
  if (env == nullptr || *env == '\0') return 0;
  char* end = nullptr;
  const unsigned long v = std::strtoul(env, &end, 10);
  if (end == nullptr || *end != '\0') return 0;
  return static_cast<std::size_t>(v);
}

}  // namespace

std::size_t thread_cap() {
  std::size_t cap = g_thread_cap.load(std::memory_order_relaxed);
  if (cap == SIZE_MAX) cap = env_thread_cap();
  if (cap == 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    cap = hw == 0 ? 1 : hw;
  }
  return cap;
}

void set_thread_cap(std::size_t cap) {
  g_thread_cap.store(cap == 0 ? SIZE_MAX : cap, std::memory_order_relaxed);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
  if (n == 0) return;
  const std::size_t workers = std::min(thread_cap(), n);
  if (workers <= 1) {
    body(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&body, begin, end] { body(begin, end); });
  }
  for (auto& t : pool) t.join();
}

namespace {

double pairwise_sum_impl(const double* xs, std::size_t n) {
  if (n <= 32) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += xs[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum_impl(xs, half) + pairwise_sum_impl(xs + half, n - half);
}

}  // namespace

double pairwise_sum(std::span<const double> xs) {
  return pairwise_sum_impl(xs.data(), xs.size());
}

double mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean of empty range");
  return pairwise_sum(xs) / static_cast<double>(xs.size());
}

std::size_t uniform_bin(double x, std::size_t bins) {
  if (bins == 0) throw std::invalid_argument("uniform_bin: bins must be >= 1");
  const auto idx = static_cast<long long>(std::floor(x * static_cast<double>(bins)));
  if (idx < 0) return 0;
  if (static_cast<std::size_t>(idx) >= bins) return bins - 1;
  return static_cast<std::size_t>(idx);
}

std::string format_sig(double value, int significant_digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", significant_digits, value);
  return buf;
}

std::uint64_t Rng::next_u64() {
  // splitmix64 (Steele, Lea, Flood 2014)
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::size_t Rng::next_below(std::size_t bound) {
  if (bound == 0) throw std::invalid_argument("next_below: bound must be >= 1");
  // Rejection sampling to remove modulo bias.
  const std::uint64_t b = bound;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % b;
  std::uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return static_cast<std::size_t>(v % b);
}

double Rng::next_gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1;
  do {
    u1 = next_double();
  } while (u1 <= 0.0);
  const double u2 = next_double();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::size_t Rng::pick_weighted(std::span<const double> weights) {
  if (weights.empty()) throw std::invalid_argument("pick_weighted: empty weights");
  double total = 0.0;
  for (double w : weights) total += w;
  double r = next_double() * total;
  for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
    if (r < weights[i]) return i;
    r -= weights[i];
  }
  return weights.size() - 1;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  Rng mixer(seed ^ (stream * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL));
  return mixer.next_u64();
}

}  // namespace hudcalib
