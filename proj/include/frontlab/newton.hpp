#pragma once

#include <ostream>
#include <vector>

#include <Eigen/Sparse>

#include "frontlab/residual.hpp"

namespace frontlab {

struct NewtonConfig {
  double tol_residual = 1e-10;
  double tol_step = 1e-10;
  int max_iter = 25;
  double fd_step = 1e-7;
  bool armijo = true;
  double backtrack = 0.5;
  int max_halvings = 8;
  bool check_resonance = true;
  std::ostream* log = nullptr;  // line-oriented iteration records
};

/// Extra linear equation a . x = b appended after the problem equations
/// (used for the pseudo-arclength/secant condition).
struct LinearConstraint {
  Vector a;
  double b = 0.0;
};

/// Jacobian split as
///   [ core        | border_cols ]
///   [ border_rows               ]
/// where core is banded over the W unknowns.
struct BorderedJacobian {
  Eigen::SparseMatrix<double> core;
  Matrix border_cols;  // core rows x scalar unknowns
  Matrix border_rows;  // non-core rows x all unknowns
  int bandwidth = 0;   // n * (2 s + 1)

  int rows() const { return static_cast<int>(core.rows() + border_rows.rows()); }
  int cols() const { return static_cast<int>(core.cols() + border_cols.cols()); }
  Eigen::SparseMatrix<double> assemble() const;
  Matrix dense() const;
};

BorderedJacobian assemble_jacobian(const FrontProblem& problem, const Vector& x, const FrontState& templ,
                                   const NewtonConfig& cfg, const LinearConstraint* extra = nullptr);
/// Same, but with the residual at x already known.
BorderedJacobian assemble_jacobian(const FrontProblem& problem, const Vector& x, const Vector& r0,
                                   const FrontState& templ, const NewtonConfig& cfg,
                                   const LinearConstraint* extra = nullptr);

/// Residual including the optional constraint row.
Vector full_residual(const FrontProblem& problem, const Vector& x, const FrontState& templ,
                     const LinearConstraint* extra);

/// Solves J dx = rhs; throws SingularJacobian.
Vector solve_linear(const BorderedJacobian& J, const Vector& rhs);

struct NewtonReport {
  bool converged = false;
  int iterations = 0;
  double residual_norm = 0.0;
  std::vector<double> residual_history;
  std::vector<double> step_history;
};

struct NewtonResult {
  FrontState state;
  NewtonReport report;
};

/// Damped Newton from s0.  Sets the problem's tail reference from s0.
/// Throws FlatProfile, ResonanceAbort, SingularJacobian, NaNInJacobian, NoConvergence.
NewtonResult solve_newton(FrontProblem& problem, const FrontState& s0, const NewtonConfig& cfg = {},
                          const LinearConstraint* extra = nullptr);

}  // namespace frontlab
