#include "frontlab/continuation.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "frontlab/error.hpp"

namespace frontlab {

std::string to_string(EventKind k) {
  switch (k) {
    case EventKind::AlphaZero: return "alpha_zero";
    case EventKind::ResonanceAbort: return "resonance_abort";
    case EventKind::Fold: return "fold";
    case EventKind::NewtonFail: return "newton_fail";
  }
  return "unknown";
}

bool Branch::has_event(EventKind k) const {
  for (const auto& e : events)
    if (e.kind == k) return true;
  return false;
}

FrontState solve_fixed(const ModelSpec& model, const Grid& grid, ModeKind kind, const FrontState& guess,
                       const NewtonConfig& ncfg, const std::vector<std::string>& extra_free,
                       const ProblemOptions& popt) {
  FrontProblem p(model, grid, SystemMode{kind, extra_free}, popt);
  return solve_newton(p, guess, ncfg).state;
}

namespace {

Vector secant_weights(const FrontProblem& p) {
  Vector w = Vector::Ones(p.num_unknowns());
  w.head(p.core_size()).setConstant(p.grid().dx());
  return w;
}

FrontState interpolate(const FrontProblem& p, const FrontState& a, const FrontState& b, double theta) {
  const Vector xa = p.pack(a), xb = p.pack(b);
  FrontState s = a;
  p.unpack(xa + theta * (xb - xa), s);
  return s;
}

void log_point(std::ostream* log, const Branch& br) {
  if (!log) return;
  const FrontState& s = br.points.back();
  *log << "point index=" << br.points.size() - 1;
  for (const auto& p : br.mode.free_params) *log << ' ' << p << '=' << s.params.at(p);
  *log << " c=" << s.c << " nu=" << s.nu << " alpha=" << s.alpha << " iters=" << s.newton_iters << '\n';
}

void detect_events(Branch& br) {
  const int k = static_cast<int>(br.points.size()) - 1;
  if (k < 1) return;
  const FrontState& a = br.points[k - 1];
  const FrontState& b = br.points[k];
  if (br.mode.kind == ModeKind::Pulled && a.alpha * b.alpha < 0.0) {
    std::ostringstream msg;
    msg << "alpha changes sign between " << br.param() << "=" << a.params.at(br.param()) << " and "
        << b.params.at(br.param());
    br.events.push_back({k - 1, k, EventKind::AlphaZero, msg.str()});
  }
  if (k >= 2) {
    const std::string& p = br.param();
    const double d1 = a.params.at(p) - br.points[k - 2].params.at(p);
    const double d2 = b.params.at(p) - a.params.at(p);
    if (d1 * d2 < 0.0) br.events.push_back({k - 1, k, EventKind::Fold, "fold in " + p});
  }
}

}  // namespace

Branch continue_branch(const ModelSpec& model, const Grid& grid, const FrontState& start, const SystemMode& mode,
                       const ContinuationConfig& ccfg, const NewtonConfig& ncfg, const ProblemOptions& popt) {
  if (mode.free_params.empty()) throw Error(ErrorKind::ConfigError, "continuation needs a free parameter");
  if (!(ccfg.min_step < ccfg.step0 && ccfg.step0 < ccfg.max_step))
    throw Error(ErrorKind::ConfigError, "step sizes must satisfy min_step < step0 < max_step");
  const std::string param = mode.free_params.back();
  FrontProblem pf(model, grid, mode, popt);
  SystemMode nat = mode;
  nat.free_params.pop_back();
  FrontProblem pn(model, grid, nat, popt);

  Branch br;
  br.mode = mode;
  br.grid = grid;

  auto crosses = [&](double from, double to) {
    return ccfg.target && (to - *ccfg.target) * (from - *ccfg.target) <= 0.0 && to != from;
  };

  FrontState s0;
  try {
    s0 = solve_newton(pn, start, ncfg).state;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ResonanceAbort) throw;
    throw Error(ErrorKind::FirstStepFailure, std::string("start point did not converge: ") + e.what());
  }
  br.points.push_back(s0);
  log_point(ccfg.log, br);
  if (ccfg.target && s0.params.at(param) == *ccfg.target) return br;

  // natural-parameter first step
  double h = ccfg.step0;
  bool landed = false;
  for (;;) {
    FrontState g = s0;
    const double from = s0.params.at(param);
    double to = from + ccfg.direction * h;
    if (crosses(from, to)) {
      to = *ccfg.target;
      landed = true;
    }
    g.params[param] = to;
    try {
      br.points.push_back(solve_newton(pn, g, ncfg).state);
      break;
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::ResonanceAbort) {
        br.events.push_back({0, 0, EventKind::ResonanceAbort, e.what()});
        return br;
      }
      landed = false;
      h *= ccfg.shrink;
      if (h < ccfg.min_step) throw Error(ErrorKind::FirstStepFailure, e.what());
    }
  }
  log_point(ccfg.log, br);
  detect_events(br);
  if (landed) return br;

  const Vector w = secant_weights(pf);
  while (static_cast<int>(br.points.size()) < ccfg.max_points) {
    const FrontState& prev = br.points[br.points.size() - 2];
    const FrontState& cur = br.points.back();
    const Vector xc = pf.pack(cur);
    Vector t = xc - pf.pack(prev);
    t /= std::sqrt(t.cwiseProduct(t).dot(w));

    FrontState next;
    bool ok = false;
    while (!ok) {
      const Vector xp = xc + h * t;
      FrontState pred = cur;
      pf.unpack(xp, pred);
      LinearConstraint sec{w.cwiseProduct(t), 0.0};
      sec.b = sec.a.dot(xp);
      try {
        next = solve_newton(pf, pred, ncfg, &sec).state;
        ok = true;
      } catch (const Error& e) {
        const int k = static_cast<int>(br.points.size()) - 1;
        if (e.kind() == ErrorKind::ResonanceAbort) {
          br.events.push_back({k, k, EventKind::ResonanceAbort, e.what()});
          return br;
        }
        h *= ccfg.shrink;
        if (h < ccfg.min_step) {
          br.events.push_back({k, k, EventKind::NewtonFail, e.what()});
          return br;
        }
      }
    }

    if (crosses(cur.params.at(param), next.params.at(param))) {
      const double theta =
          (*ccfg.target - cur.params.at(param)) / (next.params.at(param) - cur.params.at(param));
      FrontState g = interpolate(pf, cur, next, theta);
      g.params[param] = *ccfg.target;
      try {
        br.points.push_back(solve_newton(pn, g, ncfg).state);
        log_point(ccfg.log, br);
        detect_events(br);
      } catch (const Error& e) {
        const int k = static_cast<int>(br.points.size()) - 1;
        br.events.push_back({k, k,
                             e.kind() == ErrorKind::ResonanceAbort ? EventKind::ResonanceAbort : EventKind::NewtonFail,
                             e.what()});
      }
      return br;
    }

    br.points.push_back(next);
    log_point(ccfg.log, br);
    const std::size_t before = br.events.size();
    detect_events(br);
    if (ccfg.stop_at_alpha_zero)
      for (std::size_t k = before; k < br.events.size(); ++k)
        if (br.events[k].kind == EventKind::AlphaZero) return br;
    if (next.newton_iters <= ccfg.fast_iters) h = std::min(h * ccfg.grow, ccfg.max_step);
  }
  return br;
}

FrontState refine_transition(const ModelSpec& model, const Branch& branch, const BranchEvent& event,
                             const NewtonConfig& ncfg, const ProblemOptions& popt) {
  const FrontState& a = branch.points.at(event.lo);
  const FrontState& b = branch.points.at(event.hi);
  FrontProblem pf(model, branch.grid, branch.mode, popt);
  const double theta = a.alpha / (a.alpha - b.alpha);
  FrontState guess = interpolate(pf, a, b, theta);
  guess.alpha = 0.0;
  FrontProblem pt(model, branch.grid, SystemMode{ModeKind::TransitionCurve, {branch.param()}}, popt);
  return solve_newton(pt, guess, ncfg).state;
}

Branch trace_transition_curve(const ModelSpec& model, const Grid& grid, const FrontState& start,
                              const std::string& param, const std::string& param2, const ContinuationConfig& ccfg,
                              const NewtonConfig& ncfg, const ProblemOptions& popt) {
  return continue_branch(model, grid, start, SystemMode{ModeKind::TransitionCurve, {param, param2}}, ccfg, ncfg,
                         popt);
}

int pushed_side(const ModelSpec& model, const Branch& pulled, const BranchEvent& event) {
  const FrontState& a = pulled.points.at(event.lo);
  const FrontState& b = pulled.points.at(event.hi);
  const int ta = model.tail_anchor;
  const double orient = a.u_minus[ta] - a.u_plus[ta] >= 0.0 ? 1.0 : -1.0;
  const std::string& p = pulled.param();
  const FrontState& wrong = a.alpha * orient < 0.0 ? a : b;
  const FrontState& other = &wrong == &a ? b : a;
  return wrong.params.at(p) > other.params.at(p) ? 1 : -1;
}

DoubleRoot linear_root(const ModelSpec& model, const FrontState& s, bool require_simple) {
  SymbolMatrix sm = SymbolMatrix::from_model(model, s.params, s.u_plus);
  DoubleRootOptions opt;
  opt.require_simple = require_simple;
  try {
    return solve_double_root(sm, s.c, s.nu, opt);
  } catch (const Error&) {
    return solve_double_root(sm, model.guess.c, model.guess.nu, opt);
  }
}

FrontState switch_to_pushed(const ModelSpec& model, const Grid& grid, const FrontState& transition,
                            const std::string& param, int side, double offset, const NewtonConfig& ncfg,
                            const ProblemOptions& popt) {
  FrontState g = transition;
  g.params[param] += side * offset;
  g.u_minus = polish_equilibrium(model, g.params, g.u_minus);
  g.u_plus = polish_equilibrium(model, g.params, g.u_plus);
  const DoubleRoot dr = linear_root(model, g);
  SymbolMatrix sm = SymbolMatrix::from_model(model, g.params, g.u_plus);
  g.c = std::max(transition.c, dr.c_lin) + 0.5 * offset * offset;
  g.nu = find_decay_root(sm, g.c, dr.nu_lin - std::max(1.0, std::abs(dr.nu_lin)), dr.nu_lin);
  g.alpha = 0.0;
  FrontState s = solve_fixed(model, grid, ModeKind::Pushed, g, ncfg, {}, popt);
  if (!(s.c > dr.c_lin)) {
    std::ostringstream msg;
    msg << "pushed speed " << s.c << " does not exceed c_lin " << dr.c_lin << " at " << param << "="
        << s.params.at(param);
    throw Error(ErrorKind::WrongSide, msg.str());
  }
  return s;
}

FrontState initial_front(const ModelSpec& model, const Grid& grid, ModeKind kind, const ParamMap& params,
                         const NewtonConfig& ncfg, const ProblemOptions& popt) {
  const ParamMap full = model.resolve(params);
  FrontProblem p(model, grid, SystemMode{kind, {}}, popt);
  const FrontState seed = p.initial_state(full, model.guess.c, model.guess.nu);
  const DoubleRoot dr = linear_root(model, seed, kind == ModeKind::Pulled);
  if (kind != ModeKind::Pushed) return solve_newton(p, p.initial_state(full, dr.c_lin, dr.nu_lin), ncfg).state;

  // pushed speeds are not known in advance: try a few speeds above c_lin
  const SymbolMatrix sm = SymbolMatrix::from_model(model, full, seed.u_plus);
  std::string last = "no admissible seed";
  for (double factor : {1.1, 1.25, 1.05, 1.5, 2.0}) {
    const double c = dr.c_lin * factor;
    try {
      const double nu = find_decay_root(sm, c, dr.nu_lin - std::max(1.0, std::abs(dr.nu_lin)), dr.nu_lin);
      FrontState s = solve_newton(p, p.initial_state(full, c, nu), ncfg).state;
      if (s.c > dr.c_lin) return s;
      last = "converged to c = " + format_double(s.c) + " <= c_lin";
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::ResonanceAbort) throw;
      last = e.what();
    }
  }
  throw Error(ErrorKind::NoConvergence, "no pushed front found from speeds above c_lin: " + last);
}

TransitionSearch find_transition(const ModelSpec& model, const Grid& grid, const std::string& param,
                                 const ParamMap& start, const ContinuationConfig& ccfg, const NewtonConfig& ncfg,
                                 const ProblemOptions& popt) {
  ContinuationConfig cc = ccfg;
  cc.stop_at_alpha_zero = true;
  TransitionSearch out;
  const FrontState s0 = initial_front(model, grid, ModeKind::Pulled, start, ncfg, popt);
  out.pulled = continue_branch(model, grid, s0, SystemMode{ModeKind::Pulled, {param}}, cc, ncfg, popt);
  for (const auto& e : out.pulled.events) {
    if (e.kind != EventKind::AlphaZero) continue;
    out.event = e;
    out.transition = refine_transition(model, out.pulled, e, ncfg, popt);
    out.side = pushed_side(model, out.pulled, e);
    return out;
  }
  std::string why = "alpha keeps its sign along " + std::to_string(out.pulled.points.size()) + " points";
  for (const auto& e : out.pulled.events)
    if (e.kind == EventKind::ResonanceAbort || e.kind == EventKind::NewtonFail) why = e.message;
  if (out.pulled.has_event(EventKind::ResonanceAbort)) throw Error(ErrorKind::ResonanceAbort, why);
  throw Error(ErrorKind::NoTransition, why);
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string branch_csv(const Branch& branch, const ModelSpec& model) {
  std::ostringstream out;
  out << "index";
  for (const auto& p : model.param_names) out << ',' << p;
  out << ",c,nu,alpha,beta";
  for (int i = 0; i < model.n; ++i) out << ",u_minus[" << i << ']';
  for (int i = 0; i < model.n; ++i) out << ",u_plus[" << i << ']';
  out << ",newton_iters,residual_norm\n";
  for (std::size_t k = 0; k < branch.points.size(); ++k) {
    const FrontState& s = branch.points[k];
    out << k;
    for (const auto& p : model.param_names) out << ',' << format_double(s.params.at(p));
    out << ',' << format_double(s.c) << ',' << format_double(s.nu) << ',' << format_double(s.alpha) << ','
        << format_double(s.beta);
    for (int i = 0; i < model.n; ++i) out << ',' << format_double(s.u_minus[i]);
    for (int i = 0; i < model.n; ++i) out << ',' << format_double(s.u_plus[i]);
    out << ',' << s.newton_iters << ',' << format_double(s.residual_norm) << '\n';
  }
  return out.str();
}

nlohmann::ordered_json branch_json(const Branch& branch, const ModelSpec& model) {
  nlohmann::ordered_json j;
  j["model"] = model.name;
  j["mode"] = to_string(branch.mode.kind);
  j["free_params"] = branch.mode.free_params;
  j["grid"] = {{"L", branch.grid.L},
               {"N", branch.grid.N},
               {"dx", branch.grid.dx()},
               {"order", branch.grid.order},
               {"m_cutoff", branch.grid.m_cutoff}};
  j["events"] = nlohmann::ordered_json::array();
  for (const auto& e : branch.events)
    j["events"].push_back({{"lo", e.lo}, {"hi", e.hi}, {"kind", to_string(e.kind)}, {"message", e.message}});
  j["points"] = nlohmann::ordered_json::array();
  for (const auto& s : branch.points) j["points"].push_back(to_json(s, branch.grid, model.param_names));
  return j;
}

}  // namespace frontlab
