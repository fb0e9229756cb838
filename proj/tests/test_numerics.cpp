#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "slrtm/numerics.hpp"

using namespace slrtm;

TEST_CASE("digamma matches high-precision reference values") {
  // Frozen from a 30-digit series/asymptotic evaluation.
  const struct {
    double x, psi;
  } table[] = {
      {0.001, -1000.5755719318103005},
      {0.01, -100.5608854578686745},
      {0.1, -10.423754940411076795},
      {0.25, -4.2274535333762654081},
      {0.5, -1.9635100260214234794},
      {1.0, -0.57721566490153286061},
      {2.0, 0.42278433509846713939},
      {3.75, 1.1825373886117962286},
      {6.0, 1.7061176684318004727},
      {10.0, 2.2517525890667211076},
      {25.5, 3.2189424728839197665},
      {100.0, 4.6001618527380874002},
  };
  for (const auto& row : table) {
    const double got = digamma(row.x);
    CHECK(std::abs(got - row.psi) <= 1e-10 * std::abs(row.psi));
  }
}

TEST_CASE("digamma recurrence and domain") {
  CHECK(digamma(2.0) - digamma(1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(digamma(0.0), std::domain_error);
  CHECK_THROWS_AS(digamma(-3.2), std::domain_error);

  Rng rng(123);
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.uniform(1e-6, 50.0);
    CHECK(std::abs(digamma(x + 1.0) - digamma(x) - 1.0 / x) <=
          1e-10 * std::max(1.0, 1.0 / x));
  }
}

TEST_CASE("log_sum_exp") {
  const double v2[] = {0.0, 0.0};
  CHECK(log_sum_exp(v2) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  const double v1[] = {-17.25};
  CHECK(log_sum_exp(v1) == -17.25);
  const double big[] = {1000.0, 1000.0};
  const double lse = log_sum_exp(big);
  CHECK(std::isfinite(lse));
  CHECK(lse == doctest::Approx(1000.0 + std::log(2.0)).epsilon(1e-12));
  const double huge[] = {1e6, -1e6, 5.0};
  CHECK(std::isfinite(log_sum_exp(huge)));
  CHECK_THROWS_AS(log_sum_exp(std::span<const double>{}),
                  std::invalid_argument);

  // Shift invariance and agreement with the naive form.
  Rng rng(7);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> v(1 + rng.next_u64() % 8);
    for (double& x : v) x = rng.uniform(-5, 5);
    double naive = 0.0;
    for (double x : v) naive += std::exp(x);
    naive = std::log(naive);
    CHECK(log_sum_exp(v) == doctest::Approx(naive).epsilon(1e-12));
    const double c = rng.uniform(-3, 3);
    std::vector<double> shifted(v);
    for (double& x : shifted) x += c;
    CHECK(log_sum_exp(shifted) ==
          doctest::Approx(log_sum_exp(v) + c).epsilon(1e-12));
  }
}

TEST_CASE("softmax") {
  const double z[] = {0.0, 0.0, 0.0};
  auto u = softmax(z);
  for (double p : u) CHECK(p == doctest::Approx(1.0 / 3).epsilon(1e-12));

  const double two[] = {0.0, std::log(3.0)};
  auto q = softmax(two);
  CHECK(q[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(q[1] == doctest::Approx(0.75).epsilon(1e-12));

  Rng rng(17);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> v(1 + rng.next_u64() % 10);
    for (double& x : v) x = rng.uniform(-30, 30);
    auto p = softmax(v);
    double sum = 0.0;
    std::size_t argmax_v = 0, argmax_p = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      CHECK(p[i] >= 0.0);
      sum += p[i];
      if (v[i] > v[argmax_v]) argmax_v = i;
      if (p[i] > p[argmax_p]) argmax_p = i;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(argmax_v == argmax_p);

    const double c = rng.uniform(-10, 10);
    std::vector<double> shifted(v);
    for (double& x : shifted) x += c;
    auto p2 = softmax(shifted);
    for (std::size_t i = 0; i < v.size(); ++i)
      CHECK(p2[i] == doctest::Approx(p[i]).epsilon(1e-12));
  }
}

TEST_CASE("orthogonal_matrix") {
  auto check_cols_orthonormal = [](const DenseMatrix& q, double tol) {
    for (std::size_t a = 0; a < q.cols; ++a)
      for (std::size_t b = a; b < q.cols; ++b) {
        double d = 0.0;
        for (std::size_t r = 0; r < q.rows; ++r) d += q(r, a) * q(r, b);
        CHECK(std::abs(d - (a == b ? 1.0 : 0.0)) <= tol);
      }
  };

  auto q4 = orthogonal_matrix(4, 4, 42);
  check_cols_orthonormal(q4, 1e-6);
  auto q63 = orthogonal_matrix(6, 3, 42);
  check_cols_orthonormal(q63, 1e-6);

  auto again = orthogonal_matrix(6, 3, 42);
  CHECK(std::memcmp(q63.v.data(), again.v.data(),
                    q63.v.size() * sizeof(double)) == 0);
  auto other = orthogonal_matrix(6, 3, 43);
  CHECK(std::memcmp(q63.v.data(), other.v.data(),
                    q63.v.size() * sizeof(double)) != 0);

  Rng rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t cols = 1 + rng.next_u64() % 8;
    const std::size_t rows = cols + rng.next_u64() % 8;
    check_cols_orthonormal(orthogonal_matrix(rows, cols, 100 + rep), 1e-6);
  }

  // Wide case: orthonormal rows instead.
  auto wide = orthogonal_matrix(3, 7, 9);
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = a; b < 3; ++b) {
      double d = 0.0;
      for (std::size_t c = 0; c < 7; ++c) d += wide(a, c) * wide(b, c);
      CHECK(std::abs(d - (a == b ? 1.0 : 0.0)) <= 1e-6);
    }
}

TEST_CASE("clip_global_norm") {
  auto mk = [](std::initializer_list<double> a) {
    return std::vector<double>(a);
  };
  // norm 10 < clip 20: untouched
  auto v = mk({6.0, 8.0});
  std::vector<std::span<double>> one = {v};
  CHECK(clip_global_norm(one, 20.0) == doctest::Approx(10.0));
  CHECK(v[0] == 6.0);
  CHECK(v[1] == 8.0);

  // norm 40, clip 20: every entry halved, across blocks
  auto a = mk({24.0}), b = mk({-32.0});
  std::vector<std::span<double>> two = {a, b};
  CHECK(clip_global_norm(two, 20.0) == doctest::Approx(40.0));
  CHECK(a[0] == doctest::Approx(12.0));
  CHECK(b[0] == doctest::Approx(-16.0));

  auto zero = mk({0.0, 0.0, 0.0});
  std::vector<std::span<double>> zs = {zero};
  CHECK(clip_global_norm(zs, 20.0) == 0.0);
  for (double x : zero) CHECK(x == 0.0);

  // Non-finite entries: reported via the returned norm, nothing scaled.
  auto bad = mk({1.0, std::numeric_limits<double>::infinity()});
  std::vector<std::span<double>> bs = {bad};
  CHECK(!std::isfinite(clip_global_norm(bs, 20.0)));
  CHECK(bad[0] == 1.0);

  // Output norm never exceeds clip.
  Rng rng(31);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> g(1 + rng.next_u64() % 16);
    for (double& x : g) x = rng.uniform(-50, 50);
    std::vector<std::span<double>> gs = {g};
    const double clip = rng.uniform(0.1, 30.0);
    clip_global_norm(gs, clip);
    double ss = 0.0;
    for (double x : g) ss += x * x;
    CHECK(std::sqrt(ss) <= clip + 1e-9);
  }
}

TEST_CASE("adagrad_step") {
  auto step = [](std::vector<double>& p, std::vector<double> g,
                 AdagradState& st) {
    std::vector<std::span<double>> ps = {p};
    std::vector<std::span<const double>> gs = {std::span<const double>(g)};
    adagrad_step(ps, gs, st);
  };

  std::vector<double> p = {1.0, -2.0};
  AdagradState st(2, 0.1, 1e-8);
  step(p, {0.0, 0.0}, st);
  CHECK(p[0] == 1.0);
  CHECK(p[1] == -2.0);
  CHECK(st.accum[0] == 0.0);

  // First nonzero step has magnitude ~ lr, in the (ascent) direction of g.
  AdagradState st2(1, 0.1, 1e-12);
  std::vector<double> q = {0.0};
  step(q, {-3.0}, st2);
  CHECK(q[0] == doctest::Approx(-0.1).epsilon(1e-9));

  // A second identical step is strictly smaller.
  const double first = std::abs(q[0]);
  step(q, {-3.0}, st2);
  const double second = std::abs(q[0]) - first;
  CHECK(second > 0.0);
  CHECK(second < first);

  // Accumulators never decrease.
  AdagradState st3(3, 0.05, 1e-8);
  std::vector<double> r = {0.1, 0.2, 0.3};
  std::vector<double> prev = st3.accum;
  Rng rng(77);
  for (int i = 0; i < 10; ++i) {
    std::vector<double> g = {rng.uniform(-1, 1), rng.uniform(-1, 1),
                             rng.uniform(-1, 1)};
    step(r, g, st3);
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(st3.accum[j] >= prev[j]);
      prev[j] = st3.accum[j];
    }
  }

  // Shape mismatch rejected.
  AdagradState st4(2, 0.1, 1e-8);
  std::vector<double> s = {0.0, 0.0};
  std::vector<double> g1 = {1.0};
  std::vector<std::span<double>> ps = {s};
  std::vector<std::span<const double>> gs = {std::span<const double>(g1)};
  CHECK_THROWS_AS(adagrad_step(ps, gs, st4), std::invalid_argument);
}

TEST_CASE("rng determinism and normal moments") {
  Rng a(2024), b(2024);
  for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());
  Rng n(55);
  double mean = 0.0, var = 0.0;
  const int reps = 20000;
  std::vector<double> xs(reps);
  for (int i = 0; i < reps; ++i) {
    xs[i] = n.normal();
    mean += xs[i];
  }
  mean /= reps;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= reps;
  CHECK(std::abs(mean) < 0.05);
  CHECK(std::abs(var - 1.0) < 0.05);
}
