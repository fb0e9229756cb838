#pragma once

// Dense-array support shared by every other module: DenseMatrix, special
// functions, stable normalizers, deterministic initializers, global-norm
// gradient clipping and the Adagrad optimizer. All arithmetic is 64-bit.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace slrtm {

struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> v;  // row-major, rows * cols entries

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c, 0.0) {}

  double* row(std::size_t r) { return v.data() + r * cols; }
  const double* row(std::size_t r) const { return v.data() + r * cols; }
  double& operator()(std::size_t r, std::size_t c) { return v[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return v[r * cols + c];
  }
  std::size_t size() const { return v.size(); }
};

// Psi(x) for x > 0; throws std::domain_error otherwise.
double digamma(double x);

// log sum_i exp(v_i), overflow-safe; throws std::invalid_argument on empty v.
double log_sum_exp(std::span<const double> v);

std::vector<double> softmax(std::span<const double> v);
void softmax_inplace(std::span<double> v);

// Deterministic draws on top of mt19937_64 with a fully specified output
// mapping, so streams do not depend on the standard library's distribution
// implementations (checkpoints stay reproducible across toolchains).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next_u64() { return engine_(); }
  // [0, 1), 53-bit resolution
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();  // standard normal via Box-Muller

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Random matrix with orthonormal columns when rows >= cols (orthonormal rows
// otherwise). Deterministic in (rows, cols, seed).
DenseMatrix orthogonal_matrix(std::size_t rows, std::size_t cols,
                              std::uint64_t seed);

void fill_uniform(std::span<double> out, double lo, double hi, Rng& rng);

// Joint L2 clip over all arrays. Returns the pre-clip global norm; if any
// entry is non-finite nothing is scaled and the returned norm is non-finite
// (callers skip the step).
double clip_global_norm(std::span<const std::span<double>> grads, double clip);

struct AdagradState {
  std::vector<double> accum;  // flat, same total size as the parameter set
  double learning_rate = 0.05;
  double epsilon = 1e-8;

  AdagradState() = default;
  AdagradState(std::size_t total, double lr, double eps)
      : accum(total, 0.0), learning_rate(lr), epsilon(eps) {}
};

// Ascent step (the objective is a lower bound to be maximized):
//   accum_i += g_i^2;  param_i += lr * g_i / (sqrt(accum_i) + eps)
// Throws std::invalid_argument on shape mismatch.
void adagrad_step(std::span<const std::span<double>> params,
                  std::span<const std::span<const double>> grads,
                  AdagradState& state);

// Small matvec layer over the dispatched kernels.
void matvec(const DenseMatrix& a, const double* x, double* y);        // y = A x
void matvec_acc(const DenseMatrix& a, const double* x, double* y);    // y += A x
void matvec_t_acc(const DenseMatrix& a, const double* x, double* y);  // y += A^T x
void ger_acc(DenseMatrix& a, const double* x, const double* y);       // A += x y^T

}  // namespace slrtm
