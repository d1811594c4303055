#include "frontlab/symbol.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "frontlab/error.hpp"

namespace frontlab {

namespace {

constexpr double kComplexStep = 1e-20;

cplx ipow(cplx x, int p) {
  cplx r = 1.0;
  for (int i = 0; i < p; ++i) r *= x;
  return r;
}

}  // namespace

SymbolMatrix SymbolMatrix::from_model(const ModelSpec& model, const ParamMap& params) {
  return from_model(model, params, model.u_plus);
}

SymbolMatrix SymbolMatrix::from_model(const ModelSpec& model, const ParamMap& params, const Vector& u_plus) {
  BoundModel bm(model, params);
  SymbolMatrix sm;
  sm.n = model.n;
  sm.order = model.order;
  for (int j = 0; j <= model.order; ++j) sm.P.push_back(bm.P(j));
  sm.M = bm.mass();
  sm.fu = bm.jacobian_at(u_plus);
  sm.anchor = model.tail_anchor;
  return sm;
}

int SymbolMatrix::max_power() const {
  int p = order;
  for (int k = static_cast<int>(fu.size()) - 1; k > p; --k)
    if (fu[k].cwiseAbs().maxCoeff() > 0.0) {
      p = k;
      break;
    }
  return std::max(p, 1);
}

CMatrix eval_symbol(const SymbolMatrix& sm, cplx lambda, cplx nu, cplx c) {
  CMatrix A = CMatrix::Zero(sm.n, sm.n);
  for (std::size_t j = 1; j < sm.P.size(); ++j) A += sm.P[j].cast<cplx>() * ipow(nu, static_cast<int>(j));
  for (std::size_t k = 0; k < sm.fu.size(); ++k) A += sm.fu[k].cast<cplx>() * ipow(nu, static_cast<int>(k));
  for (int i = 0; i < sm.n; ++i) A(i, i) += (c * nu - lambda) * sm.M[i];
  return A;
}

CMatrix eval_symbol_dnu(const SymbolMatrix& sm, cplx /*lambda*/, cplx nu, cplx c) {
  CMatrix A = CMatrix::Zero(sm.n, sm.n);
  for (std::size_t j = 1; j < sm.P.size(); ++j)
    A += sm.P[j].cast<cplx>() * (static_cast<double>(j) * ipow(nu, static_cast<int>(j) - 1));
  for (std::size_t k = 1; k < sm.fu.size(); ++k)
    A += sm.fu[k].cast<cplx>() * (static_cast<double>(k) * ipow(nu, static_cast<int>(k) - 1));
  for (int i = 0; i < sm.n; ++i) A(i, i) += c * sm.M[i];
  return A;
}

cplx determinant(const CMatrix& A) {
  switch (A.rows()) {
    case 1: return A(0, 0);
    case 2: return A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
    case 3:
      return A(0, 0) * (A(1, 1) * A(2, 2) - A(1, 2) * A(2, 1)) -
             A(0, 1) * (A(1, 0) * A(2, 2) - A(1, 2) * A(2, 0)) +
             A(0, 2) * (A(1, 0) * A(2, 1) - A(1, 1) * A(2, 0));
    default: return A.partialPivLu().determinant();
  }
}

cplx dispersion(const SymbolMatrix& sm, cplx lambda, cplx nu, cplx c) {
  return determinant(eval_symbol(sm, lambda, nu, c));
}

CVector dispersion_poly(const SymbolMatrix& sm, cplx lambda, cplx c) {
  const int D = sm.degree();
  const int K = D + 1;
  CVector samples(K);
  for (int k = 0; k < K; ++k) samples[k] = dispersion(sm, lambda, std::polar(1.0, 2.0 * std::numbers::pi * k / K), c);
  CVector a(K);
  for (int j = 0; j < K; ++j) {
    cplx s = 0.0;
    for (int k = 0; k < K; ++k) s += samples[k] * std::polar(1.0, -2.0 * std::numbers::pi * j * k / K);
    a[j] = s / static_cast<double>(K);
  }
  return a;
}

cplx poly_eval(const CVector& a, cplx x, int derivative) {
  cplx r = 0.0;
  for (Eigen::Index j = a.size() - 1; j >= derivative; --j) {
    double f = 1.0;
    for (int q = 0; q < derivative; ++q) f *= static_cast<double>(j - q);
    r = r * x + a[j] * f;
  }
  return r;
}

std::vector<cplx> poly_roots(const CVector& coeffs) {
  const double amax = coeffs.cwiseAbs().maxCoeff();
  Eigen::Index D = coeffs.size() - 1;
  while (D > 0 && std::abs(coeffs[D]) <= 1e-13 * amax) --D;
  if (D < 1) return {};
  CMatrix C = CMatrix::Zero(D, D);
  for (Eigen::Index i = 1; i < D; ++i) C(i, i - 1) = 1.0;
  for (Eigen::Index i = 0; i < D; ++i) C(i, D - 1) = -coeffs[i] / coeffs[D];
  Eigen::ComplexEigenSolver<CMatrix> es(C, false);
  std::vector<cplx> roots(es.eigenvalues().data(), es.eigenvalues().data() + D);
  std::sort(roots.begin(), roots.end(), [](cplx a, cplx b) { return a.real() < b.real(); });
  return roots;
}

DispersionJet dispersion_jet(const SymbolMatrix& sm, double nu, double c) {
  DispersionJet j;
  const CVector a = dispersion_poly(sm, 0.0, c);
  j.scale = a.cwiseAbs().maxCoeff();
  j.d = dispersion(sm, 0.0, nu, c).real();
  j.d_nu = dispersion(sm, 0.0, cplx(nu, kComplexStep), c).imag() / kComplexStep;
  j.d_nunu = poly_eval(a, nu, 2).real();
  j.d_c = dispersion(sm, 0.0, nu, cplx(c, kComplexStep)).imag() / kComplexStep;
  j.d_lambda = dispersion(sm, cplx(0.0, kComplexStep), nu, c).imag() / kComplexStep;
  const double h = 1e-6 * (1.0 + std::abs(c));
  const double dp = dispersion(sm, 0.0, cplx(nu, kComplexStep), c + h).imag() / kComplexStep;
  const double dm = dispersion(sm, 0.0, cplx(nu, kComplexStep), c - h).imag() / kComplexStep;
  j.d_c_nu = (dp - dm) / (2.0 * h);
  return j;
}

namespace {

struct PencilResult {
  Vector u0, u1;
  double c, nu;
};

Vector pencil_residual(const SymbolMatrix& sm, const Vector& z, int anchor) {
  const int n = sm.n;
  const double c = z[2 * n], nu = z[2 * n + 1];
  const Matrix A = eval_symbol(sm, 0.0, nu, c).real();
  const Matrix Anu = eval_symbol_dnu(sm, 0.0, nu, c).real();
  const Vector u0 = z.head(n), u1 = z.segment(n, n);
  Vector r(2 * n + 2);
  r.head(n) = A * u0;
  r.segment(n, n) = Anu * u0 + A * u1;
  r[2 * n] = u0[anchor] - 1.0;
  r[2 * n + 1] = u1[anchor];
  return r;
}

PencilResult solve_pencil(const SymbolMatrix& sm, double c, double nu, int& anchor) {
  const int n = sm.n;
  const Matrix A = eval_symbol(sm, 0.0, nu, c).real();
  const Matrix Anu = eval_symbol_dnu(sm, 0.0, nu, c).real();
  Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeFullV);
  Vector u0 = svd.matrixV().col(n - 1);
  if (std::abs(u0[anchor]) < 1e-8 * u0.cwiseAbs().maxCoeff()) u0.cwiseAbs().maxCoeff(&anchor);
  u0 /= u0[anchor];

  Matrix B(n + 1, n);
  B.topRows(n) = A;
  B.row(n).setZero();
  B(n, anchor) = 1.0;
  Vector rhs(n + 1);
  rhs.head(n) = -Anu * u0;
  rhs[n] = 0.0;
  Vector u1 = B.colPivHouseholderQr().solve(rhs);

  Vector z(2 * n + 2);
  z << u0, u1, c, nu;
  for (int it = 0; it < 20; ++it) {
    const Vector r = pencil_residual(sm, z, anchor);
    Matrix J(2 * n + 2, 2 * n + 2);
    for (int k = 0; k < 2 * n + 2; ++k) {
      Vector zp = z;
      const double h = 1e-7 * (1.0 + std::abs(z[k]));
      zp[k] += h;
      J.col(k) = (pencil_residual(sm, zp, anchor) - r) / h;
    }
    const Vector dz = J.fullPivLu().solve(-r);
    if (!dz.allFinite()) break;
    z += dz;
    if (dz.cwiseAbs().maxCoeff() < 1e-14 * (1.0 + z.cwiseAbs().maxCoeff())) break;
  }
  return {z.head(n), z.segment(n, n), z[2 * n], z[2 * n + 1]};
}

}  // namespace

DoubleRoot solve_double_root(const SymbolMatrix& sm, double c_guess, double nu_guess, const DoubleRootOptions& opt) {
  double c = c_guess, nu = nu_guess;
  bool converged = false;
  DispersionJet jet;
  for (int it = 0; it < opt.max_iter; ++it) {
    jet = dispersion_jet(sm, nu, c);
    Eigen::Vector2d F(jet.d, jet.d_nu);
    Eigen::Matrix2d J;
    J << jet.d_c, jet.d_nu, jet.d_c_nu, jet.d_nunu;
    Eigen::Vector2d step = J.fullPivLu().solve(-F);
    if (!step.allFinite()) break;
    const double fnorm = F.cwiseAbs().maxCoeff();
    if (fnorm < opt.residual_tol * jet.scale &&
        step.cwiseAbs().maxCoeff() < opt.step_tol * (1.0 + std::max(std::abs(c), std::abs(nu)))) {
      converged = true;
      break;
    }
    // halve until the residual does not grow
    double t = 1.0;
    for (int k = 0; k < 10; ++k) {
      const DispersionJet trial = dispersion_jet(sm, nu + t * step[1], c + t * step[0]);
      if (std::max(std::abs(trial.d), std::abs(trial.d_nu)) <= fnorm) break;
      t *= 0.5;
    }
    c += t * step[0];
    nu += t * step[1];
  }
  if (!converged) {
    jet = dispersion_jet(sm, nu, c);
    if (!(std::max(std::abs(jet.d), std::abs(jet.d_nu)) < opt.residual_tol * jet.scale))
      throw Error(ErrorKind::NoConvergence, "double root Newton did not converge from (c, nu) = (" +
                                                std::to_string(c_guess) + ", " + std::to_string(nu_guess) + ")");
  }
  jet = dispersion_jet(sm, nu, c);
  if (!(nu < 0.0)) throw Error(ErrorKind::PositiveNu, "nu_lin = " + std::to_string(nu));

  DoubleRoot dr;
  dr.c_lin = c;
  dr.nu_lin = nu;
  dr.scale = jet.scale;
  dr.d10 = jet.d_lambda;
  dr.d02 = 0.5 * jet.d_nunu;
  if (opt.require_simple) {
    const double tol = opt.degenerate_tol * jet.scale;
    if (std::abs(jet.d_nunu) < tol || std::abs(jet.d_lambda) < tol)
      throw Error(ErrorKind::DegenerateRoot, "d_nunu = " + std::to_string(jet.d_nunu) +
                                                 ", d_lambda = " + std::to_string(jet.d_lambda));
    if (jet.d_nunu * jet.d_lambda >= 0.0)
      throw Error(ErrorKind::WrongSign, "d_nunu * d_lambda >= 0 at the double root");
  }
  int anchor = sm.anchor;
  const PencilResult p = solve_pencil(sm, c, nu, anchor);
  dr.u0 = p.u0;
  dr.u1 = p.u1;
  return dr;
}

double find_decay_root(const SymbolMatrix& sm, double c, double nu_lo, double nu_hi) {
  const CVector a = dispersion_poly(sm, 0.0, c);
  const std::vector<cplx> roots = poly_roots(a);
  std::vector<double> inside;
  for (const cplx& r : roots)
    if (std::abs(r.imag()) < 1e-6 && r.real() >= nu_lo && r.real() <= nu_hi) inside.push_back(r.real());
  if (inside.empty())
    throw Error(ErrorKind::NoRootInBracket, "no real root of d(0, ., " + std::to_string(c) + ") in [" +
                                                std::to_string(nu_lo) + ", " + std::to_string(nu_hi) + "]");
  if (inside.size() > 1)
    throw Error(ErrorKind::MultipleRoots, std::to_string(inside.size()) + " real roots in bracket");
  double nu = inside.front();
  for (int it = 0; it < 20; ++it) {
    const double f = dispersion(sm, 0.0, nu, c).real();
    const double df = dispersion(sm, 0.0, cplx(nu, kComplexStep), c).imag() / kComplexStep;
    if (df == 0.0) break;
    const double step = f / df;
    nu -= step;
    if (std::abs(step) < 1e-15 * (1.0 + std::abs(nu))) break;
  }
  return nu;
}

std::vector<ResonanceWarning> resonance_check(const SymbolMatrix& sm, const DoubleRoot& dr,
                                              const ResonanceOptions& opt) {
  std::vector<cplx> roots = poly_roots(dispersion_poly(sm, 0.0, dr.c_lin));
  // drop the two roots forming the double root
  for (int k = 0; k < 2 && !roots.empty(); ++k) {
    auto it = std::min_element(roots.begin(), roots.end(), [&](cplx a, cplx b) {
      return std::abs(a - dr.nu_lin) < std::abs(b - dr.nu_lin);
    });
    roots.erase(it);
  }
  std::vector<ResonanceWarning> out;
  for (const cplx& r : roots) {
    const double dist = std::abs(r - dr.nu_lin);
    std::ostringstream msg;
    msg << "root " << r.real() << (r.imag() >= 0 ? "+" : "") << r.imag() << "i";
    if (dist < opt.hard_tol) {
      msg << " collides with nu_lin = " << dr.nu_lin << " (distance " << dist << ")";
      out.push_back({ResonanceKind::Hard, r, dist, msg.str()});
    } else if (dist < opt.near_tol) {
      msg << " is near nu_lin = " << dr.nu_lin << " (distance " << dist << ")";
      out.push_back({ResonanceKind::Near, r, dist, msg.str()});
    } else if (r.real() > dr.nu_lin && r.real() < 0.0 && std::abs(r.real()) > 1e-9) {
      msg << " decays more weakly than nu_lin = " << dr.nu_lin;
      out.push_back({ResonanceKind::WeakerDecay, r, dist, msg.str()});
    }
  }
  return out;
}

bool has_hard_resonance(const std::vector<ResonanceWarning>& w) {
  return std::any_of(w.begin(), w.end(), [](const ResonanceWarning& x) { return x.kind == ResonanceKind::Hard; });
}

std::string to_string(ResonanceKind k) {
  switch (k) {
    case ResonanceKind::Hard: return "hard";
    case ResonanceKind::Near: return "near";
    case ResonanceKind::WeakerDecay: return "weaker_decay";
  }
  return "unknown";
}

}  // namespace frontlab
