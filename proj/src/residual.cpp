#include "frontlab/residual.hpp"

#include <cmath>

#include "frontlab/error.hpp"

namespace frontlab {

namespace {

double binom(int j, int l) {
  double r = 1.0;
  for (int q = 1; q <= l; ++q) r = r * (j - l + q) / q;
  return r;
}

}  // namespace

std::string to_string(ModeKind k) {
  switch (k) {
    case ModeKind::Pulled: return "pulled";
    case ModeKind::Pushed: return "pushed";
    case ModeKind::TransitionCurve: return "transition";
  }
  return "unknown";
}

ModeKind mode_from_string(const std::string& s) {
  if (s == "pulled") return ModeKind::Pulled;
  if (s == "pushed") return ModeKind::Pushed;
  if (s == "transition") return ModeKind::TransitionCurve;
  throw Error(ErrorKind::ConfigError, "unknown mode '" + s + "'");
}

FrontProblem::FrontProblem(ModelSpec model, Grid grid, SystemMode mode, ProblemOptions opt)
    : model_(std::move(model)), grid_(grid), mode_(std::move(mode)), opt_(opt), n_(model_.n) {
  grid_.validate();
  K_ = model_.max_derivative();
  phase_anchor_ = opt_.phase_anchor >= 0 ? opt_.phase_anchor : model_.anchor;
  tail_anchor_ = opt_.tail_anchor >= 0 ? opt_.tail_anchor : model_.tail_anchor;
  if (phase_anchor_ >= n_ || tail_anchor_ >= n_) throw Error(ErrorKind::ConfigError, "anchor component out of range");
  for (const auto& p : mode_.free_params)
    if (!model_.params.count(p)) throw Error(ErrorKind::ConfigError, "unknown free parameter '" + p + "'");
  ops_ = build_ops(grid_, K_);
  cut_ = cutoffs(grid_, K_);
  quad_ = gaussian_quadrature_weights(grid_);
}

Vector FrontProblem::pack(const FrontState& s) const {
  Vector x(num_unknowns());
  x.head(core_size()) = s.W;
  x.segment(idx_u_minus(), n_) = s.u_minus;
  x.segment(idx_u_plus(), n_) = s.u_plus;
  x[idx_c()] = s.c;
  x[idx_nu()] = s.nu;
  x[idx_alpha()] = s.alpha;
  x[idx_beta()] = s.beta;
  for (std::size_t k = 0; k < mode_.free_params.size(); ++k)
    x[idx_param(static_cast<int>(k))] = s.params.at(mode_.free_params[k]);
  return x;
}

void FrontProblem::unpack(const Vector& x, FrontState& s) const {
  s.W = x.head(core_size());
  s.u_minus = x.segment(idx_u_minus(), n_);
  s.u_plus = x.segment(idx_u_plus(), n_);
  s.c = x[idx_c()];
  s.nu = x[idx_nu()];
  s.alpha = x[idx_alpha()];
  s.beta = x[idx_beta()];
  for (std::size_t k = 0; k < mode_.free_params.size(); ++k)
    s.params[mode_.free_params[k]] = x[idx_param(static_cast<int>(k))];
}

SymbolMatrix FrontProblem::symbol(const FrontState& s) const {
  SymbolMatrix sm = SymbolMatrix::from_model(model_, s.params, s.u_plus);
  sm.anchor = tail_anchor_;
  return sm;
}

namespace {

Vector left_null_vector(const Matrix& A) {
  Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeFullU);
  return svd.matrixU().col(A.rows() - 1);
}

}  // namespace

void FrontProblem::set_reference(const FrontState& s) {
  const SymbolMatrix sm = symbol(s);
  b_ref_ = left_null_vector(eval_symbol(sm, 0.0, s.nu, s.c).real());
  // W may trade against the tail along exp(nu x); only this row sees the trade, at strength exp(nu L)
  t_scale_ = std::exp(-std::min(s.nu, 0.0) * grid_.x(grid_.N - 1));
}

TailVectors FrontProblem::tail_vectors(const FrontState& s) const {
  TailVectors tv;
  const SymbolMatrix sm = symbol(s);
  const Matrix A = eval_symbol(sm, 0.0, s.nu, s.c).real();
  const Matrix Anu = eval_symbol_dnu(sm, 0.0, s.nu, s.c).real();
  const Vector b = b_ref_.size() == n_ ? b_ref_ : left_null_vector(A);
  Matrix B = Matrix::Zero(n_ + 1, n_ + 1);
  B.topLeftCorner(n_, n_) = A;
  B.topRightCorner(n_, 1) = b;
  B(n_, tail_anchor_) = 1.0;
  const auto lu = B.fullPivLu();
  Vector rhs = Vector::Zero(n_ + 1);
  rhs[n_] = 1.0;
  tv.u0 = lu.solve(rhs).head(n_);
  rhs.head(n_) = -Anu * tv.u0;
  rhs[n_] = 0.0;
  tv.u1 = lu.solve(rhs).head(n_);
  tv.v1 = s.alpha * tv.u0;
  tv.v0 = s.beta * tv.u0 + s.alpha * tv.u1;
  return tv;
}

Vector FrontProblem::reconstruct(const FrontState& s) const {
  const TailVectors tv = tail_vectors(s);
  const int N = grid_.N;
  Vector u(core_size());
  for (int i = 0; i < N; ++i) {
    const double x = grid_.x(i);
    const double cp = cut_.chi_plus[i], cm = cut_.chi_minus[i];
    const double e = std::exp(s.nu * x);
    for (int k = 0; k < n_; ++k)
      u[i * n_ + k] = s.u_minus[k] * cm + s.u_plus[k] * cp + cp * (tv.v1[k] * x + tv.v0[k]) * e + s.W[i * n_ + k];
  }
  return u;
}

void FrontProblem::core_terms(const FrontState& s, Vector* cancelled, Vector* naive, Vector* identities) const {
  const int N = grid_.N;
  const int n = n_;
  const int K = K_;
  const int J = model_.jet_order();
  const TailVectors tv = tail_vectors(s);
  const BoundModel bm(model_, s.params);
  const Vector f_minus = bm.reaction_at(s.u_minus);
  const Vector f_plus = bm.reaction_at(s.u_plus);
  const std::vector<Matrix> Jp = bm.jacobian_at(s.u_plus);
  const Vector du = s.u_plus - s.u_minus;
  const Vector& M = bm.mass();
  const double nu = s.nu;

  std::vector<double> nupow(K + 1, 1.0);
  for (int l = 1; l <= K; ++l) nupow[l] = nupow[l - 1] * nu;

  if (cancelled) cancelled->resize(core_size());
  if (naive) naive->resize(core_size());
  if (identities) identities->resize(core_size());

  // per-point scratch: T[l][p], Dw[k][p], jet[k*n+p]
  std::vector<double> T((K + 1) * n), Dw((K + 1) * n), jet((J + 1) * n), fjet(n);
  std::vector<double> far((K + 1) * n);  // analytic part of d^k u without the chi_+ T^{(k)} term
  std::vector<double> tailk((K + 1) * n);  // chi_+ T^{(k)}
  const double* w = s.W.data();

  for (int i = 0; i < N; ++i) {
    const double x = grid_.x(i);
    const double e = std::exp(nu * x);
    for (int l = 0; l <= K; ++l)
      for (int p = 0; p < n; ++p)
        T[l * n + p] = e * (nupow[l] * (tv.v1[p] * x + tv.v0[p]) + (l > 0 ? l * nupow[l - 1] * tv.v1[p] : 0.0));
    for (int p = 0; p < n; ++p) Dw[p] = w[i * n + p];
    for (int k = 1; k <= K; ++k)
      for (int p = 0; p < n; ++p) Dw[k * n + p] = ops_[k].apply_row(w, i, n, p);
    const double chi = cut_.chi_plus[i];
    for (int k = 0; k <= K; ++k) {
      for (int p = 0; p < n; ++p) {
        double v = du[p] * cut_.dchi_plus[k][i];
        for (int l = 0; l < k; ++l) v += binom(k, l) * cut_.dchi_plus[k - l][i] * T[l * n + p];
        far[k * n + p] = v;
        tailk[k * n + p] = chi * T[k * n + p];
      }
    }
    for (int k = 0; k <= J; ++k)
      for (int p = 0; p < n; ++p)
        jet[k * n + p] = (k == 0 ? s.u_minus[p] : 0.0) + far[k * n + p] + tailk[k * n + p] + Dw[k * n + p];
    bm.reaction(jet.data(), fjet.data());

    for (int r = 0; r < n; ++r) {
      // linear operator on the cancelled and tail parts
      double lin_c = 0.0, lin_tail = 0.0;
      for (int j = 1; j <= model_.order; ++j) {
        const Matrix& P = bm.P(j);
        for (int p = 0; p < n; ++p) {
          const double a = P(r, p);
          if (a == 0.0) continue;
          lin_c += a * (far[j * n + p] + Dw[j * n + p]);
          lin_tail += a * tailk[j * n + p];
        }
      }
      if (M[r] != 0.0) {
        lin_c += s.c * M[r] * (far[n + r] + Dw[n + r]);
        lin_tail += s.c * M[r] * tailk[n + r];
      }
      double jt = 0.0;
      for (int k = 0; k < static_cast<int>(Jp.size()); ++k)
        for (int p = 0; p < n; ++p) jt += Jp[k](r, p) * tailk[k * n + p];
      const double ident = cut_.chi_minus[i] * f_minus[r] + chi * f_plus[r] + lin_tail + jt;
      const int row = i * n + r;
      if (cancelled) (*cancelled)[row] = lin_c + fjet[r] - cut_.chi_minus[i] * f_minus[r] - chi * f_plus[r] - jt;
      if (naive) (*naive)[row] = lin_c + lin_tail + fjet[r];
      if (identities) (*identities)[row] = ident;
    }
  }
}

Vector FrontProblem::core_residual(const FrontState& s) const {
  Vector r;
  core_terms(s, &r, nullptr, nullptr);
  return r;
}

Vector FrontProblem::naive_residual(const FrontState& s) const {
  Vector r;
  core_terms(s, nullptr, &r, nullptr);
  return r;
}

Vector FrontProblem::subtracted_identities(const FrontState& s) const {
  Vector r;
  core_terms(s, nullptr, nullptr, &r);
  return r;
}

Vector FrontProblem::residual(const FrontState& s) const {
  Vector R(num_equations());
  Vector core;
  core_terms(s, &core, nullptr, nullptr);
  R.head(core_size()) = core;

  const int n = n_;
  int row = core_size();
  if (model_.pin_equilibria) {
    R.segment(row, n) = s.u_minus - model_.u_minus;
    R.segment(row + n, n) = s.u_plus - model_.u_plus;
  } else {
    const BoundModel bm(model_, s.params);
    R.segment(row, n) = bm.reaction_at(s.u_minus);
    R.segment(row + n, n) = bm.reaction_at(s.u_plus);
  }
  row += 2 * n;

  const SymbolMatrix sm = symbol(s);
  const double d = dispersion(sm, 0.0, s.nu, s.c).real();
  R[row++] = d;
  if (mode_.kind == ModeKind::Pulled || mode_.kind == ModeKind::TransitionCurve) {
    const double h = 1e-20;
    R[row++] = dispersion(sm, 0.0, cplx(s.nu, h), s.c).imag() / h;
  }
  if (mode_.kind == ModeKind::Pushed || mode_.kind == ModeKind::TransitionCurve) R[row++] = s.alpha;

  const int N = grid_.N;
  const int ta = tail_anchor_;
  R[row++] = t_scale_ * (s.W[(N - 1) * n + ta] + s.W[(N - 2) * n + ta]);

  const Vector u = reconstruct(s);
  const int pa = phase_anchor_;
  const double mid = 0.5 * (s.u_minus[pa] + s.u_plus[pa]);
  double ph = 0.0;
  for (int i = 0; i < N; ++i) ph += quad_[i] * (u[i * n + pa] - mid);
  R[row++] = ph;
  return R;
}

Vector FrontProblem::residual(const Vector& x, const FrontState& templ) const {
  FrontState s = templ;
  unpack(x, s);
  return residual(s);
}

void FrontProblem::check_state(const FrontState& s) const {
  if ((s.u_minus - s.u_plus).cwiseAbs().maxCoeff() < 1e-12)
    throw Error(ErrorKind::FlatProfile, "u_minus equals u_plus");
  if (mode_.kind == ModeKind::Pushed) return;
  DoubleRootOptions dro;
  dro.require_simple = false;
  DoubleRoot dr;
  try {
    dr = solve_double_root(symbol(s), s.c, s.nu, dro);
  } catch (const Error&) {
    return;  // no nearby double root; Newton will report its own failure
  }
  const auto warnings = resonance_check(symbol(s), dr, opt_.resonance);
  for (const auto& w : warnings)
    if (w.kind == ResonanceKind::Hard) throw Error(ErrorKind::ResonanceAbort, w.message);
}

FrontState FrontProblem::initial_state(const ParamMap& params, double c, double nu) const {
  FrontState s;
  s.params = params;
  s.c = c;
  s.nu = nu;
  s.u_minus = polish_equilibrium(model_, params, model_.u_minus);
  s.u_plus = polish_equilibrium(model_, params, model_.u_plus);
  s.W.resize(core_size());
  const double rate = nu < 0.0 ? nu : -1.0;
  for (int i = 0; i < grid_.N; ++i) {
    const double x = grid_.x(i);
    const double g = 1.0 / (1.0 + std::exp(rate * x));  // 0 on the left, 1 on the right
    for (int k = 0; k < n_; ++k) {
      const double guess = s.u_minus[k] + (s.u_plus[k] - s.u_minus[k]) * g;
      const double base = s.u_minus[k] * cut_.chi_minus[i] + s.u_plus[k] * cut_.chi_plus[i];
      s.W[i * n_ + k] = guess - base;
    }
  }
  return s;
}

nlohmann::ordered_json to_json(const FrontState& s, const Grid& g, const std::vector<std::string>& param_order) {
  nlohmann::ordered_json j;
  j["params"] = nlohmann::ordered_json::object();
  for (const auto& p : param_order)
    if (s.params.count(p)) j["params"][p] = s.params.at(p);
  for (const auto& [k, v] : s.params)
    if (!j["params"].contains(k)) j["params"][k] = v;
  j["c"] = s.c;
  j["nu"] = s.nu;
  j["alpha"] = s.alpha;
  j["beta"] = s.beta;
  j["u_minus"] = std::vector<double>(s.u_minus.data(), s.u_minus.data() + s.u_minus.size());
  j["u_plus"] = std::vector<double>(s.u_plus.data(), s.u_plus.data() + s.u_plus.size());
  j["newton_iters"] = s.newton_iters;
  j["residual_norm"] = s.residual_norm;
  j["grid"] = {{"L", g.L}, {"N", g.N}, {"dx", g.dx()}, {"order", g.order}, {"m_cutoff", g.m_cutoff}};
  j["W"] = std::vector<double>(s.W.data(), s.W.data() + s.W.size());
  return j;
}

FrontState state_from_json(const nlohmann::ordered_json& j) {
  FrontState s;
  try {
    for (const auto& [k, v] : j.at("params").items()) s.params[k] = v.get<double>();
    s.c = j.at("c").get<double>();
    s.nu = j.at("nu").get<double>();
    s.alpha = j.at("alpha").get<double>();
    s.beta = j.at("beta").get<double>();
    const auto um = j.at("u_minus").get<std::vector<double>>();
    const auto up = j.at("u_plus").get<std::vector<double>>();
    const auto w = j.at("W").get<std::vector<double>>();
    s.u_minus = Eigen::Map<const Vector>(um.data(), static_cast<Eigen::Index>(um.size()));
    s.u_plus = Eigen::Map<const Vector>(up.data(), static_cast<Eigen::Index>(up.size()));
    s.W = Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size()));
    s.newton_iters = j.value("newton_iters", 0);
    s.residual_norm = j.value("residual_norm", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, e.what());
  }
  return s;
}

}  // namespace frontlab
