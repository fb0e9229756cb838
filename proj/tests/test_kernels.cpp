#include <doctest.h>

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "slrtm/kernels.hpp"
#include "slrtm/numerics.hpp"

using namespace slrtm;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed,
                               double scale = 2.0) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-scale, scale);
  return v;
}

const std::size_t kSizes[] = {1, 3, 4, 7, 8, 15, 16, 33, 100, 1023};

struct IsaGuard {
  kern::Isa saved;
  IsaGuard() : saved(kern::active_isa()) {}
  ~IsaGuard() { kern::force_isa(saved); }
};

}  // namespace

TEST_CASE("scalar and avx2 variants agree") {
  if (!kern::have_avx2()) {
    MESSAGE("avx2 unavailable; equivalence suite skipped");
    return;
  }
  IsaGuard guard;
  for (std::size_t n : kSizes) {
    auto x = random_vec(n, 11 * n + 1);
    auto y = random_vec(n, 13 * n + 2);

    // Reductions: association order may differ, bound the relative gap.
    kern::force_isa(kern::Isa::scalar);
    const double dot_s = kern::dot(x.data(), y.data(), n);
    const double sq_s = kern::sq_sum(x.data(), n);
    const double max_s = kern::vmax(x.data(), n);
    kern::force_isa(kern::Isa::avx2);
    const double dot_v = kern::dot(x.data(), y.data(), n);
    const double sq_v = kern::sq_sum(x.data(), n);
    const double max_v = kern::vmax(x.data(), n);
    CHECK(std::abs(dot_s - dot_v) <=
          1e-13 * std::max(1.0, std::abs(dot_s)) * static_cast<double>(n));
    CHECK(std::abs(sq_s - sq_v) <= 1e-13 * sq_s * static_cast<double>(n));
    CHECK(max_s == max_v);

    // Elementwise kernels are bit-identical across variants.
    auto y1 = y, y2 = y;
    kern::detail::axpy_scalar(0.37, x.data(), y1.data(), n);
    kern::axpy(0.37, x.data(), y2.data(), n);
    CHECK(std::memcmp(y1.data(), y2.data(), n * sizeof(double)) == 0);

    auto s1 = x, s2 = x;
    kern::detail::scal_scalar(-1.7, s1.data(), n);
    kern::scal(-1.7, s2.data(), n);
    CHECK(std::memcmp(s1.data(), s2.data(), n * sizeof(double)) == 0);

    auto p1 = random_vec(n, 5 * n + 3), p2 = p1;
    auto a1 = random_vec(n, 7 * n + 4, 0.5);
    for (double& a : a1) a = std::abs(a);
    auto a2 = a1;
    kern::detail::adagrad_ascend_scalar(p1.data(), a1.data(), x.data(), n,
                                        0.05, 1e-8);
    kern::adagrad_ascend(p2.data(), a2.data(), x.data(), n, 0.05, 1e-8);
    CHECK(std::memcmp(p1.data(), p2.data(), n * sizeof(double)) == 0);
    CHECK(std::memcmp(a1.data(), a2.data(), n * sizeof(double)) == 0);
  }
}

TEST_CASE("dispatch override") {
  IsaGuard guard;
  kern::force_isa(kern::Isa::scalar);
  CHECK(kern::active_isa() == kern::Isa::scalar);
  if (kern::have_avx2()) {
    kern::force_isa(kern::Isa::avx2);
    CHECK(kern::active_isa() == kern::Isa::avx2);
  }
  CHECK(std::string(kern::isa_name(kern::Isa::scalar)) == "scalar");
}

TEST_CASE("matvec layer matches naive loops") {
  Rng rng(99);
  DenseMatrix a(7, 5);
  for (double& x : a.v) x = rng.uniform(-1, 1);
  std::vector<double> x = random_vec(5, 3), y(7, 0.0), want(7, 0.0);
  for (std::size_t r = 0; r < 7; ++r)
    for (std::size_t c = 0; c < 5; ++c) want[r] += a(r, c) * x[c];

  matvec(a, x.data(), y.data());
  for (std::size_t r = 0; r < 7; ++r)
    CHECK(y[r] == doctest::Approx(want[r]).epsilon(1e-12));

  std::vector<double> xt = random_vec(7, 4), yt(5, 0.0), want_t(5, 0.0);
  for (std::size_t r = 0; r < 7; ++r)
    for (std::size_t c = 0; c < 5; ++c) want_t[c] += a(r, c) * xt[r];
  matvec_t_acc(a, xt.data(), yt.data());
  for (std::size_t c = 0; c < 5; ++c)
    CHECK(yt[c] == doctest::Approx(want_t[c]).epsilon(1e-12));

  DenseMatrix g(7, 5);
  ger_acc(g, xt.data(), x.data());
  for (std::size_t r = 0; r < 7; ++r)
    for (std::size_t c = 0; c < 5; ++c)
      CHECK(g(r, c) == doctest::Approx(xt[r] * x[c]).epsilon(1e-12));
}
