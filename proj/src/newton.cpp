#include "frontlab/newton.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include <Eigen/SparseLU>

#include "frontlab/error.hpp"

namespace frontlab {

Vector full_residual(const FrontProblem& problem, const Vector& x, const FrontState& templ,
                     const LinearConstraint* extra) {
  Vector r = problem.residual(x, templ);
  if (!extra) return r;
  Vector out(r.size() + 1);
  out.head(r.size()) = r;
  out[r.size()] = extra->a.dot(x) - extra->b;
  return out;
}

Eigen::SparseMatrix<double> BorderedJacobian::assemble() const {
  const int nc = static_cast<int>(core.rows());
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(core.nonZeros() + border_cols.size() + border_rows.size());
  for (int k = 0; k < core.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(core, k); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
  for (int i = 0; i < border_cols.rows(); ++i)
    for (int j = 0; j < border_cols.cols(); ++j)
      if (border_cols(i, j) != 0.0) t.emplace_back(i, nc + j, border_cols(i, j));
  for (int i = 0; i < border_rows.rows(); ++i)
    for (int j = 0; j < border_rows.cols(); ++j)
      if (border_rows(i, j) != 0.0) t.emplace_back(nc + i, j, border_rows(i, j));
  Eigen::SparseMatrix<double> A(rows(), cols());
  A.setFromTriplets(t.begin(), t.end());
  return A;
}

Matrix BorderedJacobian::dense() const { return Matrix(assemble()); }

BorderedJacobian assemble_jacobian(const FrontProblem& problem, const Vector& x, const FrontState& templ,
                                   const NewtonConfig& cfg, const LinearConstraint* extra) {
  return assemble_jacobian(problem, x, full_residual(problem, x, templ, extra), templ, cfg, extra);
}

BorderedJacobian assemble_jacobian(const FrontProblem& problem, const Vector& x, const Vector& r0,
                                   const FrontState& templ, const NewtonConfig& cfg,
                                   const LinearConstraint* extra) {
  const int n = problem.n();
  const int N = problem.N();
  const int nc = problem.core_size();
  const int nx = problem.num_unknowns();
  const int ne = static_cast<int>(r0.size());
  const int s = problem.stencil_half_width();
  const int period = 2 * s + 1;

  BorderedJacobian J;
  J.bandwidth = n * period;
  J.border_cols = Matrix::Zero(nc, nx - nc);
  J.border_rows = Matrix::Zero(ne - nc, nx);

  // banded core block by colored differences
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(nc) * J.bandwidth);
  Vector xp = x;
  for (int q = 0; q < period; ++q) {
    for (int k = 0; k < n; ++k) {
      for (int i = q; i < N; i += period) {
        const int col = i * n + k;
        xp[col] = x[col] + cfg.fd_step * (1.0 + std::abs(x[col]));
      }
      const Vector rp = problem.residual(xp, templ);
      for (int i = q; i < N; i += period) {
        const int col = i * n + k;
        const double h = xp[col] - x[col];
        for (int ip = std::max(0, i - s); ip <= std::min(N - 1, i + s); ++ip)
          for (int r = 0; r < n; ++r) {
            const int row = ip * n + r;
            const double v = (rp[row] - r0[row]) / h;
            if (!std::isfinite(v)) throw Error(ErrorKind::NaNInJacobian, "core column " + std::to_string(col));
            if (v != 0.0) trip.emplace_back(row, col, v);
          }
        xp[col] = x[col];
      }
    }
  }
  J.core.resize(nc, nc);
  J.core.setFromTriplets(trip.begin(), trip.end());

  // closure rows are linear in W
  const int ta = problem.tail_anchor();
  const int pa = problem.phase_anchor();
  const int tr = problem.row_transversality() - nc;
  J.border_rows(tr, (N - 1) * n + ta) = problem.transversality_scale();
  J.border_rows(tr, (N - 2) * n + ta) = problem.transversality_scale();
  const int ph = problem.row_phase() - nc;
  const Vector& qw = problem.quad_weights();
  for (int i = 0; i < N; ++i) J.border_rows(ph, i * n + pa) = qw[i];

  // scalar columns
  for (int j = nc; j < nx; ++j) {
    xp[j] = x[j] + cfg.fd_step * (1.0 + std::abs(x[j]));
    const double h = xp[j] - x[j];
    const Vector rp = problem.residual(xp, templ);
    xp[j] = x[j];
    for (int row = 0; row < static_cast<int>(rp.size()); ++row) {
      const double v = (rp[row] - r0[row]) / h;
      if (!std::isfinite(v)) throw Error(ErrorKind::NaNInJacobian, "scalar column " + std::to_string(j));
      if (row < nc)
        J.border_cols(row, j - nc) = v;
      else
        J.border_rows(row - nc, j) = v;
    }
  }
  if (extra) J.border_rows.row(ne - nc - 1) = extra->a.transpose();
  return J;
}

Vector solve_linear(const BorderedJacobian& J, const Vector& rhs) {
  if (J.rows() != J.cols())
    throw Error(ErrorKind::SingularJacobian, "non-square system " + std::to_string(J.rows()) + "x" +
                                                 std::to_string(J.cols()));
  // Raw pivot ratios are not meaningful here: the transversality row is scaled
  // by exp(-nu L).  A factorization is rejected on a zero pivot, a non-finite
  // step, or a large backward error.
  Eigen::SparseMatrix<double> A = J.assemble();
  A.makeCompressed();
  Vector dx;
  if (J.rows() <= 400) {
    const Matrix Ad(A);
    Eigen::PartialPivLU<Matrix> lu(Ad);
    if (lu.matrixLU().diagonal().cwiseAbs().minCoeff() == 0.0)
      throw Error(ErrorKind::SingularJacobian, "zero pivot");
    dx = lu.solve(rhs);
  } else {
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(A);
    lu.factorize(A);
    if (lu.info() != Eigen::Success) throw Error(ErrorKind::SingularJacobian, "sparse LU failed: " + lu.lastErrorMessage());
    dx = lu.solve(rhs);
    if (lu.info() != Eigen::Success) throw Error(ErrorKind::SingularJacobian, "sparse solve failed");
  }
  if (!dx.allFinite()) throw Error(ErrorKind::SingularJacobian, "non-finite Newton step");
  const Vector res = A * dx - rhs;
  double anorm = 0.0;
  for (int k = 0; k < A.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it) anorm = std::max(anorm, std::abs(it.value()));
  const double bound = 1e-8 * (anorm * dx.cwiseAbs().maxCoeff() + rhs.cwiseAbs().maxCoeff());
  if (res.cwiseAbs().maxCoeff() > bound)
    throw Error(ErrorKind::SingularJacobian, "backward error " + std::to_string(res.cwiseAbs().maxCoeff()));
  return dx;
}

NewtonResult solve_newton(FrontProblem& problem, const FrontState& s0, const NewtonConfig& cfg,
                          const LinearConstraint* extra) {
  if (cfg.check_resonance)
    problem.check_state(s0);
  else if ((s0.u_minus - s0.u_plus).cwiseAbs().maxCoeff() < 1e-12)
    throw Error(ErrorKind::FlatProfile, "u_minus equals u_plus");
  problem.set_reference(s0);

  NewtonResult out;
  NewtonReport& rep = out.report;
  Vector x = problem.pack(s0);
  Vector r = full_residual(problem, x, s0, extra);
  double rnorm = r.cwiseAbs().maxCoeff();
  rep.residual_history.push_back(rnorm);

  for (int it = 1; it <= cfg.max_iter; ++it) {
    if (!r.allFinite()) break;
    const BorderedJacobian J = assemble_jacobian(problem, x, r, s0, cfg, extra);
    const Vector dx = solve_linear(J, -r);

    double t = 1.0;
    Vector xt = x + dx;
    Vector rt = full_residual(problem, xt, s0, extra);
    if (cfg.armijo) {
      const double r2 = r.squaredNorm();
      for (int h = 0; h < cfg.max_halvings; ++h) {
        if (rt.allFinite() && rt.squaredNorm() <= (1.0 - 1e-4 * t) * r2) break;
        t *= cfg.backtrack;
        xt = x + t * dx;
        rt = full_residual(problem, xt, s0, extra);
      }
    }
    x = xt;
    r = rt;
    rnorm = r.allFinite() ? r.cwiseAbs().maxCoeff() : std::numeric_limits<double>::infinity();
    const double step = t * dx.cwiseAbs().maxCoeff();
    rep.iterations = it;
    rep.residual_history.push_back(rnorm);
    rep.step_history.push_back(step);
    if (cfg.log) {
      *cfg.log << "newton iter=" << it << " residual=" << std::scientific << std::setprecision(3) << rnorm
               << " step=" << step << " damping=" << std::defaultfloat << t << '\n';
    }
    if (rnorm < cfg.tol_residual && step < cfg.tol_step * (1.0 + x.cwiseAbs().maxCoeff())) {
      rep.converged = true;
      break;
    }
  }
  rep.residual_norm = rnorm;
  if (!rep.converged) {
    std::ostringstream msg;
    msg << "Newton did not converge in " << cfg.max_iter << " iterations, final residual " << std::scientific
        << rnorm;
    throw Error(ErrorKind::NoConvergence, msg.str());
  }
  out.state = s0;
  problem.unpack(x, out.state);
  out.state.newton_iters = rep.iterations;
  out.state.residual_norm = rnorm;
  return out;
}

}  // namespace frontlab
