#include "slrtm/kernels.hpp"

#include <cmath>

namespace slrtm::kern::detail {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scal_scalar(double a, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

double sq_sum_scalar(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
  return s;
}

double vmax_scalar(const double* x, std::size_t n) {
  double m = x[0];
  for (std::size_t i = 1; i < n; ++i)
    if (x[i] > m) m = x[i];
  return m;
}

void adagrad_ascend_scalar(double* p, double* acc, const double* g,
                           std::size_t n, double lr, double eps) {
  for (std::size_t i = 0; i < n; ++i) {
    acc[i] += g[i] * g[i];
    p[i] += lr * g[i] / (std::sqrt(acc[i]) + eps);
  }
}

}  // namespace slrtm::kern::detail
