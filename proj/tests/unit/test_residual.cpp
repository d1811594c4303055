#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "frontlab/error.hpp"
#include "frontlab/residual.hpp"

using namespace frontlab;

namespace {

const double kNu = -1.0 / std::sqrt(2.0);

// u = 1 / (1 + e^{x / sqrt 2}) travels at sqrt(2) (1/2 + mu) for every mu.
double exact_front(double x) { return 1.0 / (1.0 + std::exp(-kNu * x)); }

FrontState exact_pushed(const FrontProblem& p, double mu) {
  FrontState s;
  s.params = p.model().resolve({{"mu", mu}});
  s.c = std::sqrt(2.0) * (0.5 + mu);
  s.nu = kNu;
  s.alpha = 0.0;
  s.beta = 1.0;
  s.u_minus = Vector::Ones(1);
  s.u_plus = Vector::Zero(1);
  s.W.resize(p.N());
  for (int i = 0; i < p.N(); ++i) {
    const double x = p.grid().x(i);
    s.W[i] = exact_front(x) - p.cut().chi_minus[i] - p.cut().chi_plus[i] * std::exp(kNu * x);
  }
  return s;
}

FrontProblem nagumo_problem(ModeKind kind, double L = 16, double dx = 0.1, std::vector<std::string> free = {},
                            double m_cutoff = 10.0) {
  return FrontProblem(builtin("nagumo"), Grid::with_spacing(L, dx, 4, m_cutoff), SystemMode{kind, std::move(free)});
}

// For an exact front W = u - chi_- - chi_+ tail keeps the cutoff's length
// scale 1/m, so truncation checks use a gentle cutoff.
FrontProblem smooth_problem(double dx = 0.1) { return nagumo_problem(ModeKind::Pushed, 16, dx, {}, 2.0); }

// The exact front is not flat at x = -L, which the reflecting closure assumes.
double interior_max(const FrontProblem& p, const Vector& r) {
  double m = 0.0;
  for (int i = 0; i < p.N(); ++i)
    if (std::abs(p.grid().x(i)) < 12.0) m = std::max(m, std::abs(r[i]));
  return m;
}

}  // namespace

TEST(Residual, ReconstructMatchesExactFront) {
  const FrontProblem p = nagumo_problem(ModeKind::Pushed);
  const FrontState s = exact_pushed(p, 0.25);
  const Vector u = p.reconstruct(s);
  for (int i = 0; i < p.N(); ++i) EXPECT_NEAR(u[i], exact_front(p.grid().x(i)), 1e-14);
}

TEST(Residual, ExactPushedFrontIsNearlyAZero) {
  const FrontProblem p = smooth_problem();
  const FrontState s = exact_pushed(p, 0.25);
  // only the finite-difference truncation remains in the core
  EXPECT_LT(interior_max(p, p.core_residual(s)), 1e-4);
  const Vector R = p.residual(s);
  EXPECT_NEAR(R[p.row_closure()], 0.0, 1e-14);      // dispersion relation at (c, nu)
  EXPECT_EQ(R[p.row_closure() + 1], 0.0);            // alpha
  EXPECT_NEAR(R[p.row_phase()], 0.0, 1e-12);         // odd profile about its midpoint
  EXPECT_LT(R.segment(p.idx_u_minus(), 2).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Residual, TruncationErrorIsFourthOrder) {
  const FrontProblem a = smooth_problem(0.1);
  const FrontProblem b = smooth_problem(0.05);
  const double ea = interior_max(a, a.core_residual(exact_pushed(a, 0.25)));
  const double eb = interior_max(b, b.core_residual(exact_pushed(b, 0.25)));
  EXPECT_NEAR(std::log2(ea / eb), 4.0, 0.3);
}

TEST(Residual, PlateauResidualIsLocalized) {
  const FrontProblem p = nagumo_problem(ModeKind::Pulled);
  FrontState s = p.initial_state(p.model().resolve({}), 2.0, -1.0);
  s.W.setZero();
  s.alpha = s.beta = 0.0;
  const Vector r = p.core_residual(s);
  for (int i = 0; i < p.N(); ++i) {
    const double x = p.grid().x(i);
    if (std::abs(x) > 4.0) {
      EXPECT_LT(std::abs(r[i]), 1e-12) << x;
    }
  }
  EXPECT_GT(r.cwiseAbs().maxCoeff(), 1e-2);
}

TEST(Residual, NaiveEqualsCorePlusIdentities) {
  for (const auto& name : builtin_names()) {
    const ModelSpec m = builtin(name);
    const FrontProblem p(m, Grid::with_spacing(12, 0.1, 4), SystemMode{ModeKind::Pulled, {}});
    FrontState s = p.initial_state(m.params, m.guess.c, m.guess.nu);
    s.alpha = 0.3;
    s.beta = -0.2;
    for (int i = 0; i < s.W.size(); ++i) s.W[i] += 0.01 * std::sin(0.37 * i);
    const Vector lhs = p.naive_residual(s);
    const Vector rhs = p.core_residual(s) + p.subtracted_identities(s);
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-9) << name;
  }
}

TEST(Residual, UnknownAndEquationCounts) {
  for (const auto& name : builtin_names()) {
    const ModelSpec m = builtin(name);
    const Grid g = Grid::with_spacing(12, 0.1, 4);
    const std::string p0 = m.param_names.front(), p1 = m.param_names.back();
    const FrontProblem pulled(m, g, SystemMode{ModeKind::Pulled, {}});
    const FrontProblem pushed(m, g, SystemMode{ModeKind::Pushed, {}});
    const FrontProblem pulled1(m, g, SystemMode{ModeKind::Pulled, {p0}});
    const FrontProblem pushed1(m, g, SystemMode{ModeKind::Pushed, {p0}});
    EXPECT_EQ(pulled.num_unknowns(), pulled.num_equations()) << name;
    EXPECT_EQ(pushed.num_unknowns(), pushed.num_equations()) << name;
    EXPECT_EQ(pulled1.num_unknowns(), pulled1.num_equations() + 1) << name;
    EXPECT_EQ(pushed1.num_unknowns(), pushed1.num_equations() + 1) << name;
    if (p0 != p1) {
      const FrontProblem curve(m, g, SystemMode{ModeKind::TransitionCurve, {p0, p1}});
      EXPECT_EQ(curve.num_unknowns(), curve.num_equations() + 1) << name;
    }
  }
}

TEST(Residual, FarFieldIsQuadraticInTheTail) {
  // With W = 0 the profile right of the cutoff is the pure tail; the linear
  // part cancels, leaving the reaction's quadratic and cubic terms.
  const FrontProblem p = nagumo_problem(ModeKind::Pulled);
  FrontState s = p.initial_state(p.model().resolve({{"mu", 1.0}}), 2.0, -1.0);
  s.W.setZero();
  s.alpha = 1.0;
  s.beta = 0.5;
  const Vector r = p.core_residual(s);
  for (int i = 0; i < p.N(); ++i) {
    const double x = p.grid().x(i);
    if (x < 5.0 || x > 14.0) continue;
    const double t = (x + 0.5) * std::exp(-x);
    // f(t) - f'(0) t = (1 - mu) t^2 - t^3 with mu = 1
    EXPECT_NEAR(r[i], -t * t * t, 1e-7 + 1e-6 * t) << x;
  }
}

namespace {

// Largest mismatch between the residual of a profile shifted by `shift` and
// the shifted residual.  The two states split the same grid function
// differently between W and the analytic ansatz, so they agree up to truncation.
double translation_mismatch(double dx, double shift) {
  const FrontProblem p = smooth_problem(dx);
  const FrontState s = exact_pushed(p, 0.25);
  const int k = static_cast<int>(std::lround(shift / dx));
  FrontState t = s;
  t.beta = s.beta * std::exp(-s.nu * shift);
  const Vector u = p.reconstruct(s);
  for (int i = 0; i < p.N(); ++i) {
    const double x = p.grid().x(i);
    const double shifted = i >= k ? u[i - k] : 1.0;
    t.W[i] = shifted - p.cut().chi_minus[i] - p.cut().chi_plus[i] * t.beta * std::exp(s.nu * x);
  }
  const Vector rs = p.naive_residual(s), rt = p.naive_residual(t);
  double m = 0.0;
  for (int i = 0; i < p.N(); ++i)
    if (std::abs(p.grid().x(i)) < 10.0) m = std::max(m, std::abs(rt[i] - rs[i - k]));
  return m;
}

}  // namespace

TEST(Residual, TranslationCovariance) {
  const double a = translation_mismatch(0.1, 0.7), b = translation_mismatch(0.05, 0.7);
  EXPECT_LT(a, 1e-4);
  EXPECT_NEAR(std::log2(a / b), 4.0, 0.5);
}

TEST(Residual, PackUnpackRoundTrip) {
  const FrontProblem p = nagumo_problem(ModeKind::Pulled, 16, 0.1, {"mu"});
  FrontState s = exact_pushed(p, 0.3);
  const Vector x = p.pack(s);
  FrontState t;
  t.params = s.params;
  p.unpack(x, t);
  EXPECT_EQ(p.pack(t), x);
  EXPECT_EQ(t.params.at("mu"), 0.3);
}

TEST(Residual, FlatProfileRejected) {
  const FrontProblem p = nagumo_problem(ModeKind::Pulled);
  FrontState s = p.initial_state(p.model().resolve({}), 2.0, -1.0);
  s.u_minus = s.u_plus;
  try {
    p.check_state(s);
    FAIL() << "no error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::FlatProfile);
  }
}

TEST(Residual, StateJsonRoundTrip) {
  const FrontProblem p = nagumo_problem(ModeKind::Pushed);
  const FrontState s = exact_pushed(p, 0.25);
  const FrontState t = state_from_json(to_json(s, p.grid(), {"mu"}));
  EXPECT_EQ(t.W, s.W);
  EXPECT_EQ(t.c, s.c);
  EXPECT_EQ(t.nu, s.nu);
  EXPECT_EQ(t.params, s.params);
}
