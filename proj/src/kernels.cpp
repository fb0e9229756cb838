#include "slrtm/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace slrtm::kern {

namespace detail {
#if SLRTM_KERNELS_AVX2
double dot_avx2(const double*, const double*, std::size_t);
void axpy_avx2(double, const double*, double*, std::size_t);
void scal_avx2(double, double*, std::size_t);
double sq_sum_avx2(const double*, std::size_t);
double vmax_avx2(const double*, std::size_t);
void adagrad_ascend_avx2(double*, double*, const double*, std::size_t, double,
                         double);
#endif
}  // namespace detail

namespace {

struct Table {
  Isa isa;
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*scal)(double, double*, std::size_t);
  double (*sq_sum)(const double*, std::size_t);
  double (*vmax)(const double*, std::size_t);
  void (*adagrad_ascend)(double*, double*, const double*, std::size_t, double,
                         double);
};

constexpr Table kScalar = {
    Isa::scalar,          detail::dot_scalar,  detail::axpy_scalar,
    detail::scal_scalar,  detail::sq_sum_scalar, detail::vmax_scalar,
    detail::adagrad_ascend_scalar,
};

#if SLRTM_KERNELS_AVX2
constexpr Table kAvx2 = {
    Isa::avx2,          detail::dot_avx2,  detail::axpy_avx2,
    detail::scal_avx2,  detail::sq_sum_avx2, detail::vmax_avx2,
    detail::adagrad_ascend_avx2,
};
#endif

Table pick_default() {
  const char* env = std::getenv("SLRTM_KERNELS");
  if (env != nullptr) {
    if (std::strcmp(env, "scalar") == 0) return kScalar;
#if SLRTM_KERNELS_AVX2
    if (std::strcmp(env, "avx2") == 0 && have_avx2()) return kAvx2;
#endif
    return kScalar;
  }
#if SLRTM_KERNELS_AVX2
  if (have_avx2()) return kAvx2;
#endif
  return kScalar;
}

Table& table() {
  static Table t = pick_default();
  return t;
}

}  // namespace

bool have_avx2() {
#if SLRTM_KERNELS_AVX2
  return __builtin_cpu_supports("avx2") != 0;
#else
  return false;
#endif
}

Isa active_isa() { return table().isa; }

void force_isa(Isa isa) {
  if (isa == Isa::scalar) {
    table() = kScalar;
    return;
  }
#if SLRTM_KERNELS_AVX2
  if (isa == Isa::avx2 && have_avx2()) {
    table() = kAvx2;
    return;
  }
#endif
  throw std::runtime_error("requested kernel ISA is not available");
}

const char* isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
  }
  return "?";
}

double dot(const double* x, const double* y, std::size_t n) {
  return table().dot(x, y, n);
}
void axpy(double a, const double* x, double* y, std::size_t n) {
  table().axpy(a, x, y, n);
}
void scal(double a, double* x, std::size_t n) { table().scal(a, x, n); }
double sq_sum(const double* x, std::size_t n) { return table().sq_sum(x, n); }
double vmax(const double* x, std::size_t n) { return table().vmax(x, n); }
void adagrad_ascend(double* p, double* acc, const double* g, std::size_t n,
                    double lr, double eps) {
  table().adagrad_ascend(p, acc, g, n, lr, eps);
}

}  // namespace slrtm::kern
