#include "slrtm/numerics.hpp"

#include <cmath>
#include <stdexcept>

#include "slrtm/kernels.hpp"

namespace slrtm {

double digamma(double x) {
  if (!(x > 0.0)) throw std::domain_error("digamma: x must be positive");
  // Recurrence shift into x >= 6, then the asymptotic expansion
  //   Psi(x) ~ ln x - 1/(2x) - sum_n B_{2n} / (2n x^{2n}).
  double result = 0.0;
  while (x < 6.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double t = inv * inv;
  // Horner over B_2..B_14 terms.
  const double series =
      t * (1.0 / 12 -
           t * (1.0 / 120 -
                t * (1.0 / 252 -
                     t * (1.0 / 240 -
                          t * (1.0 / 132 -
                               t * (691.0 / 32760 - t * (1.0 / 12)))))));
  return result + std::log(x) - 0.5 * inv - series;
}

double log_sum_exp(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("log_sum_exp: empty input");
  const double m = kern::vmax(v.data(), v.size());
  if (std::isinf(m) && m < 0) return m;  // all -inf
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

std::vector<double> softmax(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  softmax_inplace(out);
  return out;
}

void softmax_inplace(std::span<double> v) {
  if (v.empty()) throw std::invalid_argument("softmax: empty input");
  const double m = kern::vmax(v.data(), v.size());
  double s = 0.0;
  for (double& x : v) {
    x = std::exp(x - m);
    s += x;
  }
  kern::scal(1.0 / s, v.data(), v.size());
}

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * M_PI * u2;
  spare_ = r * std::sin(a);
  have_spare_ = true;
  return r * std::cos(a);
}

void fill_uniform(std::span<double> out, double lo, double hi, Rng& rng) {
  for (double& x : out) x = rng.uniform(lo, hi);
}

DenseMatrix orthogonal_matrix(std::size_t rows, std::size_t cols,
                              std::uint64_t seed) {
  if (rows == 0 || cols == 0)
    throw std::invalid_argument("orthogonal_matrix: zero dimension");
  const bool wide = cols > rows;
  const std::size_t r = wide ? cols : rows;  // r >= c
  const std::size_t c = wide ? rows : cols;

  Rng rng(seed);
  DenseMatrix g(r, c);
  for (double& x : g.v) x = rng.normal();

  // Modified Gram-Schmidt on columns, two passes per column.
  std::vector<double> col(r), proj(r);
  DenseMatrix q(r, c);
  for (std::size_t j = 0; j < c; ++j) {
    for (std::size_t i = 0; i < r; ++i) col[i] = g(i, j);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t p = 0; p < j; ++p) {
        double d = 0.0;
        for (std::size_t i = 0; i < r; ++i) d += q(i, p) * col[i];
        for (std::size_t i = 0; i < r; ++i) col[i] -= d * q(i, p);
      }
    }
    double nrm = std::sqrt(kern::detail::sq_sum_scalar(col.data(), r));
    if (nrm < 1e-12) {
      // Degenerate draw; replace with a fresh vector and redo this column.
      for (std::size_t i = 0; i < r; ++i) g(i, j) = rng.normal();
      --j;
      continue;
    }
    // Fix the sign so the first nonzero entry is positive.
    double lead = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
      if (col[i] != 0.0) {
        lead = col[i];
        break;
      }
    }
    const double sgn = lead < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < r; ++i) q(i, j) = sgn * col[i] / nrm;
  }

  if (!wide) return q;
  DenseMatrix out(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out(i, j) = q(j, i);
  return out;
}

double clip_global_norm(std::span<const std::span<double>> grads,
                        double clip) {
  if (!(clip > 0.0)) throw std::invalid_argument("clip must be positive");
  double ss = 0.0;
  for (const auto& g : grads) ss += kern::sq_sum(g.data(), g.size());
  const double norm = std::sqrt(ss);
  if (!std::isfinite(norm)) return norm;
  if (norm > clip) {
    const double s = clip / norm;
    for (const auto& g : grads) kern::scal(s, g.data(), g.size());
  }
  return norm;
}

void adagrad_step(std::span<const std::span<double>> params,
                  std::span<const std::span<const double>> grads,
                  AdagradState& state) {
  if (params.size() != grads.size())
    throw std::invalid_argument("adagrad_step: block count mismatch");
  std::size_t total = 0;
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (params[b].size() != grads[b].size())
      throw std::invalid_argument("adagrad_step: block shape mismatch");
    total += params[b].size();
  }
  if (total != state.accum.size())
    throw std::invalid_argument("adagrad_step: accumulator size mismatch");

  double* acc = state.accum.data();
  for (std::size_t b = 0; b < params.size(); ++b) {
    kern::adagrad_ascend(params[b].data(), acc, grads[b].data(),
                         params[b].size(), state.learning_rate,
                         state.epsilon);
    acc += params[b].size();
  }
}

void matvec(const DenseMatrix& a, const double* x, double* y) {
  for (std::size_t r = 0; r < a.rows; ++r)
    y[r] = kern::dot(a.row(r), x, a.cols);
}

void matvec_acc(const DenseMatrix& a, const double* x, double* y) {
  for (std::size_t r = 0; r < a.rows; ++r)
    y[r] += kern::dot(a.row(r), x, a.cols);
}

void matvec_t_acc(const DenseMatrix& a, const double* x, double* y) {
  for (std::size_t r = 0; r < a.rows; ++r)
    kern::axpy(x[r], a.row(r), y, a.cols);
}

void ger_acc(DenseMatrix& a, const double* x, const double* y) {
  for (std::size_t r = 0; r < a.rows; ++r)
    kern::axpy(x[r], y, a.row(r), a.cols);
}

}  // namespace slrtm
