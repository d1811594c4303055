#include "frontlab/models.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "frontlab/error.hpp"

namespace frontlab {

using nlohmann::ordered_json;

double ParamTerm::evaluate(const ParamMap& params) const {
  double v = coef;
  for (const auto& [name, power] : powers) {
    auto it = params.find(name);
    if (it == params.end()) throw Error(ErrorKind::ConfigError, "unknown parameter '" + name + "'");
    v *= std::pow(it->second, power);
  }
  return v;
}

double evaluate(const ParamExpr& expr, const ParamMap& params) {
  double v = 0.0;
  for (const auto& t : expr) v += t.evaluate(params);
  return v;
}

int ModelSpec::jet_order() const {
  int k_max = 0;
  for (const auto& eq : reaction)
    for (const auto& term : eq)
      for (const auto& row : term.exponents)
        for (int k = 0; k < static_cast<int>(row.size()); ++k)
          if (row[k] != 0) k_max = std::max(k_max, k);
  return k_max;
}

bool ModelSpec::fully_parabolic() const {
  for (int m : mass)
    if (m == 0) return false;
  return true;
}

ParamMap ModelSpec::resolve(const ParamMap& overrides) const {
  ParamMap out = params;
  for (const auto& [name, value] : overrides) {
    if (!out.count(name))
      throw Error(ErrorKind::ConfigError, "model '" + this->name + "' has no parameter '" + name + "'");
    out[name] = value;
  }
  return out;
}

// ---------------------------------------------------------------------------
// BoundModel

BoundModel::BoundModel(const ModelSpec& spec, const ParamMap& params)
    : n_(spec.n),
      order_(spec.order),
      jet_order_(spec.jet_order()),
      analytic_(spec.analytic_jacobian) {
  P_.assign(order_ + 1, Matrix::Zero(n_, n_));
  for (const auto& [j, entries] : spec.P) {
    for (int r = 0; r < n_; ++r)
      for (int c = 0; c < n_; ++c) P_[j](r, c) = evaluate(entries[r * n_ + c], params);
  }
  mass_.resize(n_);
  for (int i = 0; i < n_; ++i) mass_[i] = spec.mass[i];

  terms_.resize(n_);
  for (int i = 0; i < n_; ++i) {
    for (const auto& rt : spec.reaction[i]) {
      Term t{rt.coef.evaluate(params), {}};
      for (int comp = 0; comp < static_cast<int>(rt.exponents.size()); ++comp)
        for (int k = 0; k < static_cast<int>(rt.exponents[comp].size()); ++k)
          if (rt.exponents[comp][k] != 0) t.factors.push_back({k * n_ + comp, rt.exponents[comp][k]});
      terms_[i].push_back(std::move(t));
    }
  }
}

void BoundModel::reaction(const double* jet, double* out) const {
  for (int i = 0; i < n_; ++i) {
    double acc = 0.0;
    for (const auto& t : terms_[i]) {
      double v = t.coef;
      for (const auto& f : t.factors) {
        const double x = jet[f.slot];
        switch (f.power) {
          case 1: v *= x; break;
          case 2: v *= x * x; break;
          case 3: v *= x * x * x; break;
          default: v *= std::pow(x, f.power);
        }
      }
      acc += v;
    }
    out[i] = acc;
  }
}

void BoundModel::jacobian(const double* jet, std::vector<Matrix>& J) const {
  J.assign(jet_order_ + 1, Matrix::Zero(n_, n_));
  if (analytic_)
    analytic_jacobian(jet, J);
  else
    fd_jacobian(jet, J);
}

void BoundModel::analytic_jacobian(const double* jet, std::vector<Matrix>& J) const {
  for (int i = 0; i < n_; ++i) {
    for (const auto& t : terms_[i]) {
      for (std::size_t a = 0; a < t.factors.size(); ++a) {
        const auto& fa = t.factors[a];
        double v = t.coef * fa.power * std::pow(jet[fa.slot], fa.power - 1);
        for (std::size_t b = 0; b < t.factors.size(); ++b)
          if (b != a) v *= std::pow(jet[t.factors[b].slot], t.factors[b].power);
        J[fa.slot / n_](i, fa.slot % n_) += v;
      }
    }
  }
}

void BoundModel::fd_jacobian(const double* jet, std::vector<Matrix>& J) const {
  const int slots = (jet_order_ + 1) * n_;
  std::vector<double> x(jet, jet + slots);
  Vector fp(n_), fm(n_);
  for (int s = 0; s < slots; ++s) {
    const double h = 1e-6 * (1.0 + std::abs(x[s]));
    const double x0 = x[s];
    x[s] = x0 + h;
    reaction(x.data(), fp.data());
    x[s] = x0 - h;
    reaction(x.data(), fm.data());
    x[s] = x0;
    J[s / n_].col(s % n_) = (fp - fm) / (2.0 * h);
  }
}

Vector BoundModel::reaction_at(const Vector& u) const {
  std::vector<double> jet((jet_order_ + 1) * n_, 0.0);
  for (int i = 0; i < n_; ++i) jet[i] = u[i];
  Vector out(n_);
  reaction(jet.data(), out.data());
  return out;
}

std::vector<Matrix> BoundModel::jacobian_at(const Vector& u) const {
  std::vector<double> jet((jet_order_ + 1) * n_, 0.0);
  for (int i = 0; i < n_; ++i) jet[i] = u[i];
  std::vector<Matrix> J;
  jacobian(jet.data(), J);
  return J;
}

// ---------------------------------------------------------------------------
// Builtins

namespace {

ParamTerm pt(double coef, std::map<std::string, int> powers = {}) { return ParamTerm{coef, std::move(powers)}; }

/// Reaction monomial for an n-component model of order `order`; factors are (component, derivative, power).
ReactionTerm rterm(int n, int order, ParamTerm coef, std::initializer_list<std::array<int, 3>> factors) {
  ReactionTerm t{std::move(coef), std::vector<std::vector<int>>(n, std::vector<int>(order + 1, 0))};
  for (const auto& f : factors) t.exponents[f[0]][f[1]] += f[2];
  return t;
}

std::vector<ParamExpr> diag(int n, std::vector<ParamExpr> d) {
  std::vector<ParamExpr> m(n * n);
  for (int i = 0; i < n; ++i) m[i * n + i] = d[i];
  return m;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

ModelSpec nagumo() {
  ModelSpec m;
  m.name = "nagumo";
  m.n = 1;
  m.order = 2;
  m.mass = {1};
  m.P[2] = {{pt(1.0)}};
  // u(1-u)(mu+u) = mu u + (1-mu) u^2 - u^3
  m.reaction = {{rterm(1, 2, pt(1.0, {{"mu", 1}}), {{0, 0, 1}}),
                 rterm(1, 2, pt(1.0), {{0, 0, 2}}),
                 rterm(1, 2, pt(-1.0, {{"mu", 1}}), {{0, 0, 2}}),
                 rterm(1, 2, pt(-1.0), {{0, 0, 3}})}};
  m.param_names = {"mu"};
  m.params = {{"mu", 1.0}};
  m.u_minus = vec({1.0});
  m.u_plus = vec({0.0});
  m.guess = {2.0, -1.0};
  return m;
}

ModelSpec kpp_burgers() {
  ModelSpec m;
  m.name = "kpp_burgers";
  m.n = 1;
  m.order = 2;
  m.mass = {1};
  m.P[2] = {{pt(1.0)}};
  // u - u^2 - mu u u_x  (the advection mu (u u_x) moved to the right-hand side)
  m.reaction = {{rterm(1, 2, pt(1.0), {{0, 0, 1}}),
                 rterm(1, 2, pt(-1.0), {{0, 0, 2}}),
                 rterm(1, 2, pt(-1.0, {{"mu", 1}}), {{0, 0, 1}, {0, 1, 1}})}};
  m.param_names = {"mu"};
  m.params = {{"mu", 4.0}};
  m.u_minus = vec({1.0});
  m.u_plus = vec({0.0});
  m.guess = {2.0, -1.0};
  return m;
}

ModelSpec efkpp() {
  ModelSpec m;
  m.name = "efkpp";
  m.n = 1;
  m.order = 4;
  m.mass = {1};
  m.P[2] = {{pt(1.0)}};
  m.P[4] = {{pt(-1.0, {{"gamma", 1}})}};
  m.reaction = {{rterm(1, 4, pt(1.0), {{0, 0, 1}}),
                 rterm(1, 4, pt(1.0, {{"mu", 1}}), {{0, 0, 2}}),
                 rterm(1, 4, pt(-10.0), {{0, 0, 3}})}};
  m.param_names = {"gamma", "mu"};
  m.params = {{"gamma", 0.05}, {"mu", 1.0}};
  const double mu = 1.0;
  // positive root of 1 + mu u - 10 u^2
  m.u_minus = vec({(mu + std::sqrt(mu * mu + 40.0)) / 20.0});
  m.u_plus = vec({0.0});
  m.guess = {1.94, -1.1};
  return m;
}

ModelSpec autocatalytic() {
  ModelSpec m;
  m.name = "autocatalytic";
  m.n = 2;
  m.order = 2;
  m.mass = {1, 1};
  m.P[2] = diag(2, {{pt(1.0)}, {pt(1.0, {{"sigma", 1}})}});
  m.reaction = {{rterm(2, 2, pt(-1.0), {{0, 0, 1}, {1, 0, 1}}),
                 rterm(2, 2, pt(-1.0, {{"k", 1}}), {{0, 0, 1}, {1, 0, 2}})},
                {rterm(2, 2, pt(1.0), {{0, 0, 1}, {1, 0, 1}}),
                 rterm(2, 2, pt(1.0, {{"k", 1}}), {{0, 0, 1}, {1, 0, 2}})}};
  m.param_names = {"sigma", "k"};
  m.params = {{"sigma", 4.0}, {"k", 1.0}};
  m.u_minus = vec({0.0, 1.0});
  m.u_plus = vec({1.0, 0.0});
  // both equilibria sit on lines of equilibria, so f(u_pm) = 0 does not isolate them
  m.pin_equilibria = true;
  m.anchor = 0;
  m.tail_anchor = 1;
  m.guess = {4.0, -0.5};
  return m;
}

ModelSpec keller_segel() {
  ModelSpec m;
  m.name = "keller_segel";
  m.n = 2;
  m.order = 2;
  m.mass = {1, 0};
  m.P[2] = diag(2, {{pt(1.0)}, {pt(1.0, {{"sigma", 1}})}});
  // u(1-u) + chi (u_x v_x + u v_xx);   u - v
  m.reaction = {{rterm(2, 2, pt(1.0), {{0, 0, 1}}),
                 rterm(2, 2, pt(-1.0), {{0, 0, 2}}),
                 rterm(2, 2, pt(1.0, {{"chi", 1}}), {{0, 1, 1}, {1, 1, 1}}),
                 rterm(2, 2, pt(1.0, {{"chi", 1}}), {{0, 0, 1}, {1, 2, 1}})},
                {rterm(2, 2, pt(1.0), {{0, 0, 1}}),
                 rterm(2, 2, pt(-1.0), {{1, 0, 1}})}};
  m.param_names = {"sigma", "chi"};
  m.params = {{"sigma", 3.5}, {"chi", 0.5}};
  m.u_minus = vec({1.0, 1.0});
  m.u_plus = vec({0.0, 0.0});
  m.guess = {2.0, -1.0};
  return m;
}

ModelSpec lotka_volterra() {
  ModelSpec m;
  m.name = "lotka_volterra";
  m.n = 2;
  m.order = 2;
  m.mass = {1, 1};
  m.P[2] = diag(2, {{pt(1.0)}, {pt(1.0, {{"sigma", 1}})}});
  // u(1 - u - a1 v);   r v (1 - a2 u - v)
  m.reaction = {{rterm(2, 2, pt(1.0), {{0, 0, 1}}),
                 rterm(2, 2, pt(-1.0), {{0, 0, 2}}),
                 rterm(2, 2, pt(-1.0, {{"a1", 1}}), {{0, 0, 1}, {1, 0, 1}})},
                {rterm(2, 2, pt(1.0, {{"r", 1}}), {{1, 0, 1}}),
                 rterm(2, 2, pt(-1.0, {{"r", 1}, {"a2", 1}}), {{0, 0, 1}, {1, 0, 1}}),
                 rterm(2, 2, pt(-1.0, {{"r", 1}}), {{1, 0, 2}})}};
  m.param_names = {"sigma", "a1", "a2", "r"};
  m.params = {{"sigma", 1.0}, {"a1", 0.5}, {"a2", 5.0}, {"r", 0.3}};
  m.u_minus = vec({1.0, 0.0});
  m.u_plus = vec({0.0, 1.0});
  m.guess = {std::sqrt(2.0), -std::sqrt(0.5)};
  return m;
}

// --- document parsing -------------------------------------------------------

[[noreturn]] void parse_fail(const std::string& what) { throw Error(ErrorKind::ParseError, what); }

ParamTerm parse_param_term(const ordered_json& j) {
  if (j.is_number()) return ParamTerm{j.get<double>(), {}};
  if (!j.is_object() || !j.contains("coef")) parse_fail("coefficient must be a number or {coef, params}");
  ParamTerm t{j.at("coef").get<double>(), {}};
  if (j.contains("params")) {
    for (const auto& [name, power] : j.at("params").items()) t.powers[name] = power.get<int>();
  }
  return t;
}

ParamExpr parse_param_expr(const ordered_json& j) {
  ParamExpr e;
  if (j.is_array()) {
    for (const auto& t : j) e.push_back(parse_param_term(t));
  } else {
    ParamTerm t = parse_param_term(j);
    if (t.coef != 0.0 || !t.powers.empty()) e.push_back(t);
  }
  return e;
}

ordered_json param_term_json(const ParamTerm& t) {
  if (t.powers.empty()) return t.coef;
  ordered_json j;
  j["coef"] = t.coef;
  j["params"] = ordered_json::object();
  for (const auto& [name, power] : t.powers) j["params"][name] = power;
  return j;
}

ordered_json param_expr_json(const ParamExpr& e) {
  if (e.empty()) return 0.0;
  if (e.size() == 1) return param_term_json(e.front());
  ordered_json arr = ordered_json::array();
  for (const auto& t : e) arr.push_back(param_term_json(t));
  return arr;
}

Vector parse_vector(const ordered_json& j, int n, const std::string& what) {
  if (!j.is_array() || static_cast<int>(j.size()) != n) parse_fail(what + " must be an array of length n");
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = j[i].get<double>();
  return v;
}

ordered_json vector_json(const Vector& v) {
  ordered_json arr = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

void check_structure(const ModelSpec& m) {
  if (m.n < 1) parse_fail("n must be >= 1");
  if (m.order < 2 || m.order % 2 != 0 || m.order > 4) parse_fail("order must be 2 or 4");
  if (static_cast<int>(m.mass.size()) != m.n) parse_fail("mass must have n entries");
  bool seen_zero = false;
  int ones = 0;
  for (int v : m.mass) {
    if (v != 0 && v != 1) parse_fail("mass flags must be 0 or 1");
    if (v == 1 && seen_zero) parse_fail("mass flags must list parabolic components first");
    if (v == 0) seen_zero = true;
    ones += v;
  }
  if (ones < 1) parse_fail("at least one component must be parabolic");
  if (!m.P.count(m.order)) parse_fail("missing P." + std::to_string(m.order));
  for (const auto& [j, entries] : m.P) {
    if (j < 1 || j > m.order) parse_fail("P." + std::to_string(j) + " outside 1..order");
    if (static_cast<int>(entries.size()) != m.n * m.n) parse_fail("P entries must be n x n");
  }
  if (static_cast<int>(m.reaction.size()) != m.n) parse_fail("reaction must list one term array per equation");
  for (const auto& eq : m.reaction)
    for (const auto& t : eq) {
      if (static_cast<int>(t.exponents.size()) != m.n) parse_fail("exponents must have n rows");
      for (const auto& row : t.exponents) {
        if (static_cast<int>(row.size()) > m.order + 1) parse_fail("exponent row longer than order + 1");
        for (int e : row)
          if (e < 0) parse_fail("negative exponent");
      }
    }
  if (m.anchor < 0 || m.anchor >= m.n || m.tail_anchor < 0 || m.tail_anchor >= m.n)
    parse_fail("anchor out of range");
  for (const auto& p : m.param_names)
    if (!m.params.count(p)) parse_fail("parameter '" + p + "' has no default");
}

}  // namespace

std::vector<std::string> builtin_names() {
  return {"nagumo", "kpp_burgers", "efkpp", "autocatalytic", "keller_segel", "lotka_volterra"};
}

ModelSpec builtin(std::string_view name) {
  if (name == "nagumo") return nagumo();
  if (name == "kpp_burgers") return kpp_burgers();
  if (name == "efkpp") return efkpp();
  if (name == "autocatalytic") return autocatalytic();
  if (name == "keller_segel") return keller_segel();
  if (name == "lotka_volterra") return lotka_volterra();
  throw Error(ErrorKind::UnknownModel, std::string(name));
}

void check_ellipticity(const ModelSpec& model, const ParamMap& params) {
  BoundModel bm(model, params);
  const Matrix& top = bm.P(model.order);
  Eigen::EigenSolver<Matrix> es(top);
  const double sign = (model.order / 2) % 2 == 0 ? 1.0 : -1.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    if (sign * es.eigenvalues()[i].real() >= 0.0)
      throw Error(ErrorKind::EllipticityViolation,
                  "eigenvalue " + std::to_string(es.eigenvalues()[i].real()) + " of P." +
                      std::to_string(model.order) + " has the wrong sign");
  }
}

void check_equilibria(const ModelSpec& model, const ParamMap& params, double tol) {
  BoundModel bm(model, params);
  for (const Vector* u : {&model.u_minus, &model.u_plus}) {
    const double r = bm.reaction_at(*u).cwiseAbs().maxCoeff();
    if (!(r < tol))
      throw Error(ErrorKind::EquilibriumResidual, "declared equilibrium has |f| = " + std::to_string(r));
  }
  if ((model.u_minus - model.u_plus).cwiseAbs().maxCoeff() == 0.0)
    throw Error(ErrorKind::EquilibriumResidual, "u_minus equals u_plus");
}

Vector polish_equilibrium(const ModelSpec& model, const ParamMap& params, const Vector& seed) {
  if (model.pin_equilibria) return seed;
  BoundModel bm(model, params);
  Vector u = seed;
  for (int it = 0; it < 40; ++it) {
    Vector f = bm.reaction_at(u);
    if (f.cwiseAbs().maxCoeff() < 1e-14) break;
    Matrix J = bm.jacobian_at(u)[0];
    Vector du = J.fullPivLu().solve(-f);
    u += du;
    if (du.cwiseAbs().maxCoeff() < 1e-15 * (1.0 + u.cwiseAbs().maxCoeff())) break;
  }
  return u;
}

ModelSpec load_model(const ordered_json& doc, std::vector<std::string>* warnings) {
  ModelSpec m;
  try {
    m.name = doc.value("name", std::string("custom"));
    m.n = doc.at("n").get<int>();
    m.order = doc.at("order").get<int>();
    m.mass = doc.at("mass").get<std::vector<int>>();
    for (const auto& [key, mat] : doc.at("P").items()) {
      const int j = std::stoi(key);
      std::vector<ParamExpr> entries;
      if (!mat.is_array()) parse_fail("P." + key + " must be a row-major matrix");
      for (const auto& row : mat) {
        if (!row.is_array()) parse_fail("P." + key + " rows must be arrays");
        for (const auto& e : row) entries.push_back(parse_param_expr(e));
      }
      m.P[j] = std::move(entries);
    }
    for (const auto& eq : doc.at("reaction")) {
      std::vector<ReactionTerm> terms;
      for (const auto& t : eq) {
        ReactionTerm rt;
        rt.coef = ParamTerm{t.at("coef").get<double>(), {}};
        if (t.contains("params"))
          for (const auto& [name, power] : t.at("params").items()) rt.coef.powers[name] = power.get<int>();
        rt.exponents = t.at("exponents").get<std::vector<std::vector<int>>>();
        for (auto& row : rt.exponents) row.resize(m.order + 1, 0);
        terms.push_back(std::move(rt));
      }
      m.reaction.push_back(std::move(terms));
    }
    if (doc.contains("reaction_jac")) {
      if (doc.at("reaction_jac") != "analytic") parse_fail("reaction_jac must be \"analytic\" when present");
      m.analytic_jacobian = true;
    } else {
      m.analytic_jacobian = false;
      if (warnings) warnings->push_back("reaction_jac not given; Jacobian synthesized by finite differences");
    }
    if (doc.contains("params")) {
      for (const auto& [name, value] : doc.at("params").items()) {
        m.param_names.push_back(name);
        m.params[name] = value.get<double>();
      }
    }
    const auto& eqs = doc.at("equilibria");
    m.u_minus = parse_vector(eqs.at("minus"), m.n, "equilibria.minus");
    m.u_plus = parse_vector(eqs.at("plus"), m.n, "equilibria.plus");
    m.pin_equilibria = eqs.value("pinned", false);
    m.anchor = doc.value("anchor", 0);
    m.tail_anchor = doc.value("tail_anchor", m.anchor);
    if (doc.contains("guess")) {
      m.guess.c = doc.at("guess").at("c").get<double>();
      m.guess.nu = doc.at("guess").at("nu").get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, e.what());
  } catch (const std::invalid_argument& e) {
    throw Error(ErrorKind::ParseError, e.what());
  }
  check_structure(m);
  // parameters referenced by terms must be declared
  try {
    BoundModel probe(m, m.params);
  } catch (const Error& e) {
    throw Error(ErrorKind::ParseError, e.what());
  }
  check_ellipticity(m, m.params);
  check_equilibria(m, m.params);
  return m;
}

ModelSpec load_model_file(const std::string& path, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open model document " + path);
  ordered_json doc;
  try {
    doc = ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, e.what());
  }
  return load_model(doc, warnings);
}

ModelSpec resolve_model(const std::string& name_or_path, std::vector<std::string>* warnings) {
  for (const auto& b : builtin_names())
    if (b == name_or_path) return builtin(b);
  if (name_or_path.find('/') != std::string::npos || name_or_path.find(".json") != std::string::npos)
    return load_model_file(name_or_path, warnings);
  throw Error(ErrorKind::UnknownModel, name_or_path);
}

ordered_json to_json(const ModelSpec& m) {
  ordered_json j;
  j["name"] = m.name;
  j["n"] = m.n;
  j["order"] = m.order;
  j["mass"] = m.mass;
  j["P"] = ordered_json::object();
  for (const auto& [order, entries] : m.P) {
    ordered_json mat = ordered_json::array();
    for (int r = 0; r < m.n; ++r) {
      ordered_json row = ordered_json::array();
      for (int c = 0; c < m.n; ++c) row.push_back(param_expr_json(entries[r * m.n + c]));
      mat.push_back(row);
    }
    j["P"][std::to_string(order)] = mat;
  }
  j["reaction"] = ordered_json::array();
  for (const auto& eq : m.reaction) {
    ordered_json terms = ordered_json::array();
    for (const auto& t : eq) {
      ordered_json tj;
      tj["coef"] = t.coef.coef;
      if (!t.coef.powers.empty()) {
        tj["params"] = ordered_json::object();
        for (const auto& [name, power] : t.coef.powers) tj["params"][name] = power;
      }
      tj["exponents"] = t.exponents;
      terms.push_back(tj);
    }
    j["reaction"].push_back(terms);
  }
  if (m.analytic_jacobian) j["reaction_jac"] = "analytic";
  j["params"] = ordered_json::object();
  for (const auto& name : m.param_names) j["params"][name] = m.params.at(name);
  j["equilibria"] = {{"minus", vector_json(m.u_minus)}, {"plus", vector_json(m.u_plus)}, {"pinned", m.pin_equilibria}};
  j["anchor"] = m.anchor;
  j["tail_anchor"] = m.tail_anchor;
  j["guess"] = {{"c", m.guess.c}, {"nu", m.guess.nu}};
  return j;
}

}  // namespace frontlab
