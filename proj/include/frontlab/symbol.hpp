#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "frontlab/models.hpp"

namespace frontlab {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Linearization at the invaded state u_+:
///   A(lambda, nu, c) = sum_j P_j nu^j + c nu M + sum_k J_k nu^k - lambda M
/// where J_k = df/d(d^k u) at u_+.
struct SymbolMatrix {
  int n = 1;
  int order = 2;
  std::vector<Matrix> P;   // P[j], j = 0..order
  Vector M;                // mass flags
  std::vector<Matrix> fu;  // J_k, k = 0..jet_order
  int anchor = 0;          // component fixing the kernel normalization

  static SymbolMatrix from_model(const ModelSpec& model, const ParamMap& params);
  static SymbolMatrix from_model(const ModelSpec& model, const ParamMap& params, const Vector& u_plus);

  /// Highest power of nu in any entry.
  int max_power() const;
  /// Degree bound of det A in nu.
  int degree() const { return n * max_power(); }
};

struct DoubleRoot {
  double c_lin = 0.0;
  double nu_lin = 0.0;
  Vector u0;
  Vector u1;
  double d10 = 0.0;  // d/dlambda of the dispersion relation
  double d02 = 0.0;  // half the second nu-derivative
  double scale = 1.0;  // max |coefficient| of d(0, ., c_lin)
};

struct DoubleRootOptions {
  int max_iter = 50;
  double residual_tol = 1e-12;  // relative to scale
  double step_tol = 1e-11;
  double degenerate_tol = 1e-8;  // relative to scale
  /// When false, skip the DegenerateRoot/WrongSign checks (used for diagnostics at
  /// degenerate parameter values, e.g. a triple root).
  bool require_simple = true;
};

CMatrix eval_symbol(const SymbolMatrix& sm, cplx lambda, cplx nu, cplx c);
/// d/dnu of the symbol.
CMatrix eval_symbol_dnu(const SymbolMatrix& sm, cplx lambda, cplx nu, cplx c);

cplx determinant(const CMatrix& A);
cplx dispersion(const SymbolMatrix& sm, cplx lambda, cplx nu, cplx c);

/// Coefficients a_0..a_D of nu -> d(lambda, nu, c), lowest power first.
CVector dispersion_poly(const SymbolMatrix& sm, cplx lambda, cplx c);
cplx poly_eval(const CVector& coeffs, cplx x, int derivative = 0);
/// All roots via companion-matrix eigenvalues; negligible leading coefficients are trimmed.
std::vector<cplx> poly_roots(const CVector& coeffs);

/// Real-argument values of d, d_nu, d_nunu, d_c, d_lambda at lambda = 0.
struct DispersionJet {
  double d = 0, d_nu = 0, d_nunu = 0, d_c = 0, d_c_nu = 0, d_lambda = 0, scale = 1;
};
DispersionJet dispersion_jet(const SymbolMatrix& sm, double nu, double c);

DoubleRoot solve_double_root(const SymbolMatrix& sm, double c_guess, double nu_guess,
                             const DoubleRootOptions& opt = {});

/// The unique real root of d(0, ., c) inside [nu_lo, nu_hi].
double find_decay_root(const SymbolMatrix& sm, double c, double nu_lo, double nu_hi);

enum class ResonanceKind { Hard, Near, WeakerDecay };

struct ResonanceWarning {
  ResonanceKind kind;
  cplx root;
  double distance;
  std::string message;
};

struct ResonanceOptions {
  double hard_tol = 0.02;
  double near_tol = 0.1;
};

std::vector<ResonanceWarning> resonance_check(const SymbolMatrix& sm, const DoubleRoot& dr,
                                              const ResonanceOptions& opt = {});
bool has_hard_resonance(const std::vector<ResonanceWarning>& w);
std::string to_string(ResonanceKind k);

}  // namespace frontlab
