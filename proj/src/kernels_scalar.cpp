#include "hudcalib/kernels.hpp"

#include <cmath>

namespace hudcalib::kernels {

namespace {

double reduce_max_scalar(const double* x, std::size_t n) {
  double m = x[0];
  for (std::size_t i = 1; i < n; ++i) {
    if (x[i] > m) m = x[i];
  }
  return m;
}

std::size_t argmax_scalar(const double* x, std::size_t n) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (x[i] > x[best]) best = i;
  }
  return best;
}

double exp_sum_scalar(const double* x, std::size_t n, double shift, double inv_t) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s += std::exp((x[i] - shift) * inv_t);
  }
  return s;
}

double exp_store_sum_scalar(const double* x, std::size_t n, double shift,
                            double inv_t, double* out) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp((x[i] - shift) * inv_t);
    s += out[i];
  }
  return s;
}

void scale_scalar(double* x, std::size_t n, double s) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= s;
}

double half_abs_diff_sum_scalar(const double* p, const double* q, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s += std::fabs(p[i] - q[i]);
  }
  return 0.5 * s;
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops = {
      "scalar",          reduce_max_scalar, argmax_scalar,
      exp_sum_scalar,    exp_store_sum_scalar,
      scale_scalar,      half_abs_diff_sum_scalar,
  };
  return ops;
}

}  // namespace hudcalib::kernels
