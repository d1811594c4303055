#pragma once

#include <map>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace frontlab {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class BoundaryKind { Neumann, Dirichlet };

/// Uniform cell-centered grid on [-L, L]: x_i = -L + (i + 1/2) dx.
struct Grid {
  double L = 16.0;
  int N = 320;
  int order = 4;
  double m_cutoff = 10.0;
  BoundaryKind left = BoundaryKind::Neumann;

  static Grid with_spacing(double L, double dx, int order = 4, double m_cutoff = 10.0);

  double dx() const { return 2.0 * L / N; }
  double x(int i) const { return -L + (i + 0.5) * dx(); }
  Vector points() const;

  /// Throws InvalidGrid unless the cutoff is resolved (m dx <= 2) and its
  /// derivatives have decayed at the boundary (exp(-m (L - 2)) < 1e-12).
  void validate() const;
};

/// Centered finite-difference weights (integers) and denominator for d^j at the given order:
///   d^j v(x_i) ~ sum_k w[k] v_{i-s+k} / (den dx^j).
struct Stencil {
  std::vector<double> w;
  double den = 1.0;
  int half() const { return static_cast<int>(w.size()) / 2; }
};
Stencil stencil(int derivative, int order);
int stencil_half_width(int max_derivative, int order);

/// Banded derivative operator with reflection closure.  Rows keep the integer
/// weights so that constants are annihilated exactly.
class DiffOp {
 public:
  DiffOp() = default;
  DiffOp(const Grid& g, int derivative);

  int derivative() const { return derivative_; }
  int size() const { return N_; }
  int half_width() const { return half_; }
  double scale() const { return scale_; }
  const std::vector<std::pair<int, double>>& row(int i) const { return rows_[i]; }

  Vector apply(const Vector& v) const;
  /// out[i*stride + offset] = (D v)_i where v is read with the same stride/offset.
  void apply_strided(const double* v, double* out, int stride, int offset) const;
  double apply_row(const double* v, int i, int stride, int offset) const;
  SparseMatrix to_sparse() const;

 private:
  int derivative_ = 0;
  int N_ = 0;
  int half_ = 0;
  double scale_ = 1.0;
  std::vector<std::vector<std::pair<int, double>>> rows_;
};

struct DiffOps {
  std::map<int, DiffOp> D;
  int half_width = 0;
  const DiffOp& operator[](int j) const { return D.at(j); }
};

/// Throws GridTooSmall when N <= 4 * stencil half width.
DiffOps build_ops(const Grid& g, int max_order);

struct Cutoffs {
  Vector chi_plus;   // ~1 for x >> 0
  Vector chi_minus;  // 1 - chi_plus
  std::vector<Vector> dchi_plus;  // dchi_plus[k] = d^k chi_plus / dx^k, k = 0..max_derivative
};

/// Logistic cutoffs with analytic derivatives up to max_derivative.
Cutoffs cutoffs(const Grid& g, int max_derivative);
/// Value of d^k chi_plus at a single point.
double chi_plus_derivative(double x, double m, int k);

/// Trapezoid weights times exp(-x^2).
Vector gaussian_quadrature_weights(const Grid& g);

}  // namespace frontlab
