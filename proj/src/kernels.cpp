#include "hudcalib/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace hudcalib::kernels {

namespace {

std::atomic<const Ops*> g_forced{nullptr};

const Ops* lookup(const std::string& name) {
  if (name == "scalar") return &scalar_ops();
  if (name == "avx2") {
#if defined(HUDCALIB_HAVE_AVX2_BUILD)
    if (avx2_supported()) return &avx2_ops();
#endif
    throw std::invalid_argument("avx2 kernels are not available on this cpu");
  }
  throw std::invalid_argument("unknown kernel backend '" + name + "'");
}

const Ops* detect() {
  if (const char* env = std::getenv("HUDCALIB_KERNELS"); env && *env) {
    return lookup(env);
  }
#if defined(HUDCALIB_HAVE_AVX2_BUILD)
  if (avx2_supported()) return &avx2_ops();
#endif
  return &scalar_ops();
}

}  // namespace

bool avx2_supported() {
#if defined(HUDCALIB_HAVE_AVX2_BUILD) && defined(__GNUC__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Ops& active() {
  if (const Ops* forced = g_forced.load(std::memory_order_acquire)) {
    return *forced;
  }
  static const Ops* table = detect();
  return *table;
}

Backend active_backend() {
  return &active() == &scalar_ops() ? Backend::scalar : Backend::avx2;
}

void force_backend(const char* name) {
  g_forced.store(name ? lookup(name) : nullptr, std::memory_order_release);
}

}  // namespace hudcalib::kernels
