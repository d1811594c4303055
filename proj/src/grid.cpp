#include "frontlab/grid.hpp"

#include <cmath>
#include <string>

#include "frontlab/error.hpp"

namespace frontlab {

Grid Grid::with_spacing(double L, double dx, int order, double m_cutoff) {
  Grid g;
  g.L = L;
  g.N = static_cast<int>(std::lround(2.0 * L / dx));
  g.order = order;
  g.m_cutoff = m_cutoff;
  return g;
}

Vector Grid::points() const {
  Vector x(N);
  for (int i = 0; i < N; ++i) x[i] = this->x(i);
  return x;
}

void Grid::validate() const {
  if (!(L > 0.0) || N < 1) throw Error(ErrorKind::InvalidGrid, "L and N must be positive");
  if (order != 2 && order != 4) throw Error(ErrorKind::InvalidGrid, "order must be 2 or 4");
  if (!(m_cutoff > 0.0)) throw Error(ErrorKind::InvalidGrid, "m_cutoff must be positive");
  if (m_cutoff * dx() > 2.0)
    throw Error(ErrorKind::InvalidGrid, "cutoff unresolved: m dx = " + std::to_string(m_cutoff * dx()) + " > 2");
  if (!(std::exp(-m_cutoff * (L - 2.0)) < 1e-12))
    throw Error(ErrorKind::InvalidGrid, "cutoff derivatives do not vanish at the boundary for L = " + std::to_string(L));
}

Stencil stencil(int derivative, int order) {
  if (order == 2) {
    switch (derivative) {
      case 1: return {{-1, 0, 1}, 2};
      case 2: return {{1, -2, 1}, 1};
      case 3: return {{-1, 2, 0, -2, 1}, 2};
      case 4: return {{1, -4, 6, -4, 1}, 1};
    }
  } else if (order == 4) {
    switch (derivative) {
      case 1: return {{1, -8, 0, 8, -1}, 12};
      case 2: return {{-1, 16, -30, 16, -1}, 12};
      case 3: return {{1, -8, 13, 0, -13, 8, -1}, 8};
      case 4: return {{-1, 12, -39, 56, -39, 12, -1}, 6};
    }
  }
  throw Error(ErrorKind::InvalidGrid,
              "no stencil for derivative " + std::to_string(derivative) + " at order " + std::to_string(order));
}

int stencil_half_width(int max_derivative, int order) {
  int s = 0;
  for (int j = 1; j <= max_derivative; ++j) s = std::max(s, stencil(j, order).half());
  return s;
}

DiffOp::DiffOp(const Grid& g, int derivative) : derivative_(derivative), N_(g.N) {
  const Stencil st = stencil(derivative, g.order);
  half_ = st.half();
  const double dx = g.dx();
  scale_ = 1.0 / (st.den * std::pow(dx, derivative));
  rows_.resize(N_);
  for (int i = 0; i < N_; ++i) {
    std::map<int, double> acc;
    for (int k = 0; k < static_cast<int>(st.w.size()); ++k) {
      if (st.w[k] == 0.0) continue;
      int idx = i - half_ + k;
      double sign = 1.0;
      if (idx < 0) {
        idx = -1 - idx;
        if (g.left == BoundaryKind::Dirichlet) sign = -1.0;
      } else if (idx >= N_) {
        idx = 2 * N_ - 1 - idx;
      }
      acc[idx] += sign * st.w[k];
    }
    for (const auto& [col, w] : acc)
      if (w != 0.0) rows_[i].emplace_back(col, w);
  }
}

double DiffOp::apply_row(const double* v, int i, int stride, int offset) const {
  double s = 0.0;
  for (const auto& [col, w] : rows_[i]) s += w * v[col * stride + offset];
  return s * scale_;
}

void DiffOp::apply_strided(const double* v, double* out, int stride, int offset) const {
  for (int i = 0; i < N_; ++i) out[i * stride + offset] = apply_row(v, i, stride, offset);
}

Vector DiffOp::apply(const Vector& v) const {
  Vector out(N_);
  apply_strided(v.data(), out.data(), 1, 0);
  return out;
}

SparseMatrix DiffOp::to_sparse() const {
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < N_; ++i)
    for (const auto& [col, w] : rows_[i]) t.emplace_back(i, col, w * scale_);
  SparseMatrix S(N_, N_);
  S.setFromTriplets(t.begin(), t.end());
  return S;
}

DiffOps build_ops(const Grid& g, int max_order) {
  if (max_order < 1 || max_order > 4) throw Error(ErrorKind::InvalidGrid, "max_order must be in 1..4");
  DiffOps ops;
  ops.half_width = stencil_half_width(max_order, g.order);
  if (g.N <= 4 * ops.half_width)
    throw Error(ErrorKind::GridTooSmall, "N = " + std::to_string(g.N) + " too small for the stencil");
  for (int j = 1; j <= max_order; ++j) ops.D.emplace(j, DiffOp(g, j));
  return ops;
}

namespace {

// d^k/dx^k chi = m^k sum_{a,b} coef * p^a q^b with p = chi, q = 1 - chi.
using PQPoly = std::map<std::pair<int, int>, double>;

std::vector<PQPoly> pq_derivatives(int kmax) {
  std::vector<PQPoly> out(kmax + 1);
  out[0][{1, 0}] = 1.0;
  for (int k = 1; k <= kmax; ++k) {
    // d/dx p^a q^b = m p^a q^b (a q - b p)
    for (const auto& [ab, coef] : out[k - 1]) {
      const auto [a, b] = ab;
      if (a != 0) out[k][{a, b + 1}] += coef * a;
      if (b != 0) out[k][{a + 1, b}] -= coef * b;
    }
  }
  return out;
}

void logistic_pair(double x, double m, double& p, double& q) {
  // numerically stable in both tails
  if (x >= 0.0) {
    const double e = std::exp(-m * x);
    p = 1.0 / (1.0 + e);
    q = e / (1.0 + e);
  } else {
    const double e = std::exp(m * x);
    p = e / (1.0 + e);
    q = 1.0 / (1.0 + e);
  }
}

double eval_pq(const PQPoly& poly, double p, double q) {
  double s = 0.0;
  for (const auto& [ab, coef] : poly) s += coef * std::pow(p, ab.first) * std::pow(q, ab.second);
  return s;
}

}  // namespace

double chi_plus_derivative(double x, double m, int k) {
  const auto polys = pq_derivatives(k);
  double p, q;
  logistic_pair(x, m, p, q);
  return std::pow(m, k) * eval_pq(polys[k], p, q);
}

Cutoffs cutoffs(const Grid& g, int max_derivative) {
  const auto polys = pq_derivatives(max_derivative);
  Cutoffs c;
  c.chi_plus.resize(g.N);
  c.chi_minus.resize(g.N);
  c.dchi_plus.assign(max_derivative + 1, Vector(g.N));
  for (int i = 0; i < g.N; ++i) {
    double p, q;
    logistic_pair(g.x(i), g.m_cutoff, p, q);
    c.chi_plus[i] = p;
    c.chi_minus[i] = 1.0 - p;
    c.dchi_plus[0][i] = p;
    for (int k = 1; k <= max_derivative; ++k) c.dchi_plus[k][i] = std::pow(g.m_cutoff, k) * eval_pq(polys[k], p, q);
  }
  return c;
}

Vector gaussian_quadrature_weights(const Grid& g) {
  Vector w(g.N);
  const double dx = g.dx();
  for (int i = 0; i < g.N; ++i) {
    const double x = g.x(i);
    w[i] = dx * std::exp(-x * x);
  }
  return w;
}

}  // namespace frontlab
