#pragma once

// Dispatched inner-loop kernels. Every kernel has a scalar reference
// implementation and an AVX2 variant selected once at startup, or forced
// through SLRTM_KERNELS=scalar|avx2 / force_isa().
//
// Contract checked by the equivalence tests: elementwise kernels (axpy,
// scal, adagrad_ascend) are bit-identical across variants; reductions
// (dot, sq_sum) may differ by association order only; vmax is exact.

#include <cstddef>

namespace slrtm::kern {

enum class Isa { scalar, avx2 };

Isa active_isa();
void force_isa(Isa isa);
const char* isa_name(Isa isa);
bool have_avx2();

// x . y
double dot(const double* x, const double* y, std::size_t n);
// y += a * x
void axpy(double a, const double* x, double* y, std::size_t n);
// x *= a
void scal(double a, double* x, std::size_t n);
// sum_i x_i^2
double sq_sum(const double* x, std::size_t n);
// max_i x_i, n >= 1
double vmax(const double* x, std::size_t n);
// acc_i += g_i^2; p_i += lr * g_i / (sqrt(acc_i) + eps)
void adagrad_ascend(double* p, double* acc, const double* g, std::size_t n,
                    double lr, double eps);

namespace detail {
double dot_scalar(const double* x, const double* y, std::size_t n);
void axpy_scalar(double a, const double* x, double* y, std::size_t n);
void scal_scalar(double a, double* x, std::size_t n);
double sq_sum_scalar(const double* x, std::size_t n);
double vmax_scalar(const double* x, std::size_t n);
void adagrad_ascend_scalar(double* p, double* acc, const double* g,
                           std::size_t n, double lr, double eps);
}  // namespace detail

}  // namespace slrtm::kern
