#pragma once

#include <cstddef>
#include <string>

// Array kernels behind the softmax/temperature hot loops. Each operation has
// a scalar reference implementation and, on x86-64, an AVX2+FMA variant; the
// active table is picked at runtime from CPU capabilities and can be forced
// via HUDCALIB_KERNELS=scalar|avx2 or force_backend() (the equivalence tests
// run both tables side by side).
//
// Divergence math over aligned supports (entropy, KL) is not here: supports
// are 2-10 labels long, so those loops stay scalar in the metrics module.
// All kernels expect finite inputs.

namespace hudcalib::kernels {

enum class Backend { scalar, avx2 };

struct Ops {
  const char* name;

  // Maximum of x[0..n); n must be >= 1.
  double (*reduce_max)(const double* x, std::size_t n);

  // Index of the maximum, lowest index on ties; n must be >= 1.
  std::size_t (*argmax)(const double* x, std::size_t n);

  // sum_i exp((x[i] - shift) * inv_t)
  double (*exp_sum)(const double* x, std::size_t n, double shift, double inv_t);

  // out[i] = exp((x[i] - shift) * inv_t); returns the sum of out.
  double (*exp_store_sum)(const double* x, std::size_t n, double shift, double inv_t,
                          double* out);

  // x[i] *= s
  void (*scale)(double* x, std::size_t n, double s);

  // 0.5 * sum_i |p[i] - q[i]|
  double (*half_abs_diff_sum)(const double* p, const double* q, std::size_t n);
};

const Ops& scalar_ops();

#if defined(__x86_64__) || defined(_M_X64)
// AVX2 table; valid to call only when avx2_supported(). The vector exp is a
// Cephes-style rational approximation, accurate to a few ulp for |x| <= 708
// (arguments outside that range are clamped, which softmax never produces
// after max subtraction).
const Ops& avx2_ops();
#endif

bool avx2_supported();

// The dispatched table. First use probes the CPU and HUDCALIB_KERNELS.
const Ops& active();
Backend active_backend();

// Force a backend by name ("scalar", "avx2") or restore auto-detection with
// nullptr. Throws std::invalid_argument for unknown or unsupported names.
void force_backend(const char* name);

}  // namespace hudcalib::kernels
