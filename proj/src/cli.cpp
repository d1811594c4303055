#include "frontlab/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#ifndef FRONTLAB_VERSION
#define FRONTLAB_VERSION "dev"
#endif

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace frontlab::cli {

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NoConvergence:
    case ErrorKind::SingularJacobian:
    case ErrorKind::NaNInJacobian:
    case ErrorKind::FirstStepFailure:
      return kNewtonFailure;
    case ErrorKind::ResonanceAbort:
      return kResonanceAbort;
    case ErrorKind::ConfigError:
    case ErrorKind::ParseError:
    case ErrorKind::UnknownModel:
    case ErrorKind::InvalidGrid:
    case ErrorKind::GridTooSmall:
    case ErrorKind::EllipticityViolation:
    case ErrorKind::EquilibriumResidual:
    case ErrorKind::OracleScope:
    case ErrorKind::CFLViolation:
    case ErrorKind::FrontExitedDomain:
      return kConfigError;
    case ErrorKind::NoTransition:
      return kNoTransition;
    default:
      return kFailure;
  }
}

Grid RunConfig::grid() const {
  if (N) {
    Grid g;
    g.L = L;
    g.N = *N;
    g.order = order;
    g.m_cutoff = m_cutoff;
    return g;
  }
  return Grid::with_spacing(L, dx.value_or(0.1), order, m_cutoff);
}

void RunConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorKind::ConfigError, m); };
  if (N && dx) fail("give exactly one of --N and --dx");
  if (N && *N <= 0) fail("--N must be positive");
  if (dx && *dx <= 0.0) fail("--dx must be positive");
  if (!(L > 0.0)) fail("--L must be positive");
  if (order != 2 && order != 4) fail("--order must be 2 or 4");
  if (from && to && from->first != to->first)
    fail("--from and --to name different parameters ('" + from->first + "' vs '" + to->first + "')");
  if (from && to && from->second == to->second) fail("parameter range is empty");
  if (jobs < 1) fail("--jobs must be at least 1");
  if (profile_every < 0) fail("--profile-every must be non-negative");
}

namespace {

std::pair<std::string, double> parse_assignment(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0)
    throw Error(ErrorKind::ConfigError, "expected NAME=VALUE, got '" + s + "'");
  const std::string name = s.substr(0, eq);
  const std::string value = s.substr(eq + 1);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size())
    throw Error(ErrorKind::ConfigError, "value of '" + name + "' is not a number: '" + value + "'");
  return {name, v};
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error(ErrorKind::ConfigError, "cannot write " + p.string());
  f << content;
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw Error(ErrorKind::ConfigError, "cannot read " + p.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

ordered_json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

class Run {
 public:
  Run(RunConfig cfg, std::ostream& out, std::ostream& err) : cfg_(std::move(cfg)), out_(out), err_(err) {
    std::vector<std::string> warnings;
    model_ = resolve_model(cfg_.model_name, &warnings);
    for (const auto& w : warnings) err_ << "warning: " << w << '\n';
    for (const auto& [k, v] : cfg_.params)
      if (!model_.params.count(k)) throw Error(ErrorKind::ConfigError, "model has no parameter '" + k + "'");
    for (const auto* p : {&cfg_.from, &cfg_.to, &cfg_.curve})
      if (*p && !model_.params.count((*p)->first))
        throw Error(ErrorKind::ConfigError, "model has no parameter '" + (*p)->first + "'");
    if (cfg_.verbose) {
      cfg_.newton.log = &err_;
      cfg_.cont.log = &err_;
    }
    popt_.resonance = cfg_.resonance;
    grid_ = cfg_.grid();
    grid_.validate();
    if (cfg_.run_name.empty()) cfg_.run_name = cfg_.command + "-" + model_.name;
    dir_ = fs::path(cfg_.out_dir) / cfg_.run_name;
  }

  int execute() {
    fs::create_directories(dir_);
    write_manifest();
    const std::string& c = cfg_.command;
    if (c == "dispersion") return dispersion();
    if (c == "continue") return cont();
    if (c == "find-transition") return find();
    if (c == "trace-curve") return trace();
    if (c == "validate") return validate();
    if (c == "convergence") return convergence();
    throw Error(ErrorKind::ConfigError, "unknown command '" + c + "'");
  }

  const fs::path& dir() const { return dir_; }

 private:
  ParamMap start_params() const {
    ParamMap p = model_.resolve(cfg_.params);
    if (cfg_.from) p[cfg_.from->first] = cfg_.from->second;
    return p;
  }

  const std::pair<std::string, double>& need_from() const {
    if (!cfg_.from) throw Error(ErrorKind::ConfigError, cfg_.command + " needs --from NAME=VALUE");
    return *cfg_.from;
  }

  ContinuationConfig search_config() const {
    ContinuationConfig cc = cfg_.cont;
    if (cfg_.to) {
      cc.direction = cfg_.to->second > cfg_.from->second ? 1 : -1;
      cc.target = cfg_.to->second;
    }
    return cc;
  }

  void write_manifest() const {
    ordered_json m;
    m["frontlab_version"] = FRONTLAB_VERSION;
    m["command"] = cfg_.command;
    m["argv"] = cfg_.argv;
    ordered_json c;
    c["model"] = cfg_.model_name;
    c["params"] = ordered_json::object();
    for (const auto& [k, v] : model_.resolve(cfg_.params)) c["params"][k] = v;
    c["grid"] = {{"L", grid_.L}, {"N", grid_.N}, {"dx", grid_.dx()}, {"order", grid_.order},
                 {"m_cutoff", grid_.m_cutoff}};
    c["mode"] = cfg_.mode;
    if (cfg_.from) c["from"] = {{cfg_.from->first, cfg_.from->second}};
    if (cfg_.to) c["to"] = {{cfg_.to->first, cfg_.to->second}};
    if (cfg_.curve) c["curve"] = {{cfg_.curve->first, cfg_.curve->second}};
    const NewtonConfig& n = cfg_.newton;
    c["newton"] = {{"tol_residual", n.tol_residual}, {"tol_step", n.tol_step}, {"max_iter", n.max_iter},
                   {"fd_step", n.fd_step}, {"armijo", n.armijo}};
    const ContinuationConfig& k = cfg_.cont;
    c["continuation"] = {{"step0", k.step0}, {"max_step", k.max_step}, {"min_step", k.min_step},
                         {"grow", k.grow}, {"shrink", k.shrink}, {"max_points", k.max_points},
                         {"direction", k.direction}};
    c["resonance"] = {{"hard_tol", popt_.resonance.hard_tol}, {"near_tol", popt_.resonance.near_tol}};
    if (cfg_.command == "validate")
      c["simulation"] = {{"L", cfg_.sim.domain_L}, {"dx", cfg_.sim.dx}, {"dt", cfg_.sim.dt},
                         {"t_final", cfg_.sim.t_final}, {"order", cfg_.sim.order},
                         {"scheme", cfg_.sim.scheme == Scheme::RK4 ? "rk4" : "imex"}};
    if (cfg_.command == "convergence") {
      c["dx_list"] = cfg_.dx_list;
      c["L_list"] = cfg_.L_list;
      if (cfg_.exact) c["exact"] = *cfg_.exact;
      c["jobs"] = cfg_.jobs;
    }
    if (!cfg_.seed_path.empty()) c["seed"] = cfg_.seed_path;
    m["config"] = c;
    m["model"] = to_json(model_);
    write_file(dir_ / "manifest.json", m.dump(2) + "\n");
  }

  void write_branch(const Branch& br) const {
    write_file(dir_ / "branch.csv", branch_csv(br, model_));
    write_file(dir_ / "branch.json", branch_json(br, model_).dump(2) + "\n");
    if (cfg_.profile_every == 0) return;
    const fs::path pdir = dir_ / "profiles";
    fs::create_directories(pdir);
    FrontProblem p(model_, br.grid, br.mode, popt_);
    for (std::size_t k = 0; k < br.points.size(); k += static_cast<std::size_t>(cfg_.profile_every))
      write_profile(p, br.points[k], pdir / point_name(k));
  }

  static std::string point_name(std::size_t k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "point_%04zu.csv", k);
    return buf;
  }

  void write_profile(const FrontProblem& p, const FrontState& s, const fs::path& path) const {
    const Vector u = p.reconstruct(s);
    const int n = p.n();
    std::ostringstream o;
    o << 'x';
    for (int k = 0; k < n; ++k) o << ",u[" << k << ']';
    for (int k = 0; k < n; ++k) o << ",W[" << k << ']';
    o << '\n';
    for (int i = 0; i < p.N(); ++i) {
      o << format_double(p.grid().x(i));
      for (int k = 0; k < n; ++k) o << ',' << format_double(u[i * n + k]);
      for (int k = 0; k < n; ++k) o << ',' << format_double(s.W[i * n + k]);
      o << '\n';
    }
    write_file(path, o.str());
  }

  void write_gnuplot(const std::string& name, const std::string& body) const {
    if (!cfg_.gnuplot) return;
    write_file(dir_ / name, "set datafile separator ','\nset key autotitle columnhead\n" + body);
  }

  int branch_status(const Branch& br) const {
    for (const auto& e : br.events) out_ << "event " << to_string(e.kind) << ": " << e.message << '\n';
    if (br.has_event(EventKind::ResonanceAbort)) return kResonanceAbort;
    if (br.has_event(EventKind::NewtonFail)) return kNewtonFailure;
    return kOk;
  }

  FrontState seed_state() const {
    FrontState s = state_from_json(ordered_json::parse(read_file(cfg_.seed_path)));
    if (s.W.size() != model_.n * grid_.N)
      throw Error(ErrorKind::ConfigError, "seed state has " + std::to_string(s.W.size()) +
                                              " core values; the grid needs " + std::to_string(model_.n * grid_.N));
    for (const auto& [k, v] : model_.params)
      if (!s.params.count(k)) s.params[k] = v;
    return s;
  }

  int dispersion() {
    const ParamMap params = start_params();
    const Vector up = polish_equilibrium(model_, params, model_.u_plus);
    const SymbolMatrix sm = SymbolMatrix::from_model(model_, params, up);
    ordered_json j;
    j["model"] = model_.name;
    j["params"] = ordered_json::object();
    for (const auto& p : model_.param_names) j["params"][p] = params.at(p);
    DoubleRoot dr;
    try {
      dr = solve_double_root(sm, model_.guess.c, model_.guess.nu);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DegenerateRoot) throw;
      DoubleRootOptions o;
      o.require_simple = false;
      dr = solve_double_root(sm, model_.guess.c, model_.guess.nu, o);
      j["note"] = std::string("double root is not simple: ") + e.what();
    }
    j["c_lin"] = dr.c_lin;
    j["nu_lin"] = dr.nu_lin;
    j["u0"] = vec_json(dr.u0);
    j["u1"] = vec_json(dr.u1);
    j["d10"] = dr.d10;
    j["d02"] = dr.d02;
    j["warnings"] = ordered_json::array();
    for (const auto& w : resonance_check(sm, dr, popt_.resonance))
      j["warnings"].push_back({{"kind", to_string(w.kind)},
                               {"root", {w.root.real(), w.root.imag()}},
                               {"distance", w.distance},
                               {"message", w.message}});
    const std::string text = j.dump(2);
    out_ << text << '\n';
    write_file(dir_ / "dispersion.json", text + "\n");
    return kOk;
  }

  int cont() {
    const auto& [param, value] = need_from();
    const ModeKind kind = mode_from_string(cfg_.mode);
    if (kind == ModeKind::TransitionCurve) throw Error(ErrorKind::ConfigError, "use trace-curve for transition curves");
    FrontState start;
    if (!cfg_.seed_path.empty()) {
      start = seed_state();
      start.params[param] = value;
    } else {
      start = initial_front(model_, grid_, kind, start_params(), cfg_.newton, popt_);
    }
    const Branch br =
        continue_branch(model_, grid_, start, SystemMode{kind, {param}}, search_config(), cfg_.newton, popt_);
    write_branch(br);
    out_ << "points " << br.points.size() << ", " << param << " from " << br.points.front().params.at(param)
         << " to " << br.points.back().params.at(param) << '\n';
    write_gnuplot("speed.gp", "set xlabel '" + param + "'\nset ylabel 'c'\nplot 'branch.csv' using \"" + param +
                                  "\":\"c\" with linespoints\n");
    write_gnuplot("tail.gp", "set xlabel '" + param + "'\nplot 'branch.csv' using \"" + param +
                                 "\":\"alpha\" with linespoints, '' using \"" + param +
                                 "\":\"beta\" with linespoints\n");
    return branch_status(br);
  }

  int find() {
    const auto& [param, value] = need_from();
    const TransitionSearch ts = find_transition(model_, grid_, param, start_params(), search_config(), cfg_.newton, popt_);
    write_branch(ts.pulled);
    write_file(dir_ / "transition.json", to_json(ts.transition, grid_, model_.param_names).dump(2) + "\n");
    out_.precision(12);
    out_ << "transition " << param << "=" << ts.transition.params.at(param) << " c=" << ts.transition.c
         << " nu=" << ts.transition.nu << " pushed_side=" << (ts.side > 0 ? "+" : "-") << '\n';
    try {
      const FrontState ps =
          switch_to_pushed(model_, grid_, ts.transition, param, ts.side, cfg_.pushed_offset, cfg_.newton, popt_);
      write_file(dir_ / "pushed.json", to_json(ps, grid_, model_.param_names).dump(2) + "\n");
      out_ << "pushed " << param << "=" << ps.params.at(param) << " c=" << ps.c << " nu=" << ps.nu << '\n';
    } catch (const Error& e) {
      err_ << "warning: no pushed front beyond the transition: " << e.what() << '\n';
    }
    return kOk;
  }

  int trace() {
    const std::string param = need_from().first;
    if (!cfg_.curve) throw Error(ErrorKind::ConfigError, "trace-curve needs --curve NAME=TARGET");
    const auto& [param2, target] = *cfg_.curve;
    if (param2 == param) throw Error(ErrorKind::ConfigError, "--curve must name a second parameter");
    FrontState start;
    if (!cfg_.seed_path.empty()) {
      start = seed_state();
    } else {
      start = find_transition(model_, grid_, param, start_params(), search_config(), cfg_.newton, popt_).transition;
    }
    ContinuationConfig cc = cfg_.cont;
    const double here = start.params.at(param2);
    if (here == target) throw Error(ErrorKind::ConfigError, "curve target equals the start value");
    cc.direction = target > here ? 1 : -1;
    cc.target = target;
    const Branch br = trace_transition_curve(model_, grid_, start, param, param2, cc, cfg_.newton, popt_);
    write_branch(br);
    out_ << "points " << br.points.size() << ", " << param2 << " from " << here << " to "
         << br.points.back().params.at(param2) << '\n';
    write_gnuplot("curve.gp", "set xlabel '" + param2 + "'\nset ylabel '" + param + "'\nplot 'branch.csv' using \"" +
                                  param2 + "\":\"" + param + "\" with linespoints\n");
    return branch_status(br);
  }

  int validate() {
    if (!model_.fully_parabolic())
      throw Error(ErrorKind::OracleScope, "'" + model_.name +
                                              "' has an elliptic component; direct simulation only covers fully "
                                              "parabolic systems");
    const ParamMap params = start_params();
    FrontState front;
    std::string mode = cfg_.mode;
    if (mode == "auto") {
      front = initial_front(model_, grid_, ModeKind::Pulled, params, cfg_.newton, popt_);
      const int ta = model_.tail_anchor;
      const double orient = front.u_minus[ta] - front.u_plus[ta] >= 0.0 ? 1.0 : -1.0;
      mode = "pulled";
      if (front.alpha * orient < 0.0) {
        front = initial_front(model_, grid_, ModeKind::Pushed, params, cfg_.newton, popt_);
        mode = "pushed";
      }
    } else {
      front = initial_front(model_, grid_, mode_from_string(mode), params, cfg_.newton, popt_);
    }
    const SpeedResult sim = measure_speed(model_, params, cfg_.sim);
    std::ostringstream csv;
    csv << "t,X,c\n";
    for (const auto& s : sim.series)
      csv << format_double(s.t) << ',' << format_double(s.X) << ',' << format_double(s.c) << '\n';
    write_file(dir_ / "speed.csv", csv.str());

    ordered_json r;
    r["mode"] = mode;
    r["c_front"] = front.c;
    r["c_simulation"] = sim.c_final;
    r["relative_difference"] = std::abs(sim.c_final - front.c) / front.c;
    r["dt"] = sim.dt;
    out_.precision(10);
    out_ << "front (" << mode << ") c=" << front.c << "  simulation c=" << sim.c_final
         << "  |dc|/c=" << r["relative_difference"].get<double>() << '\n';
    if (mode == "pulled") {
      const double T = sim.series.back().t;
      const PowerLawFit f = fit_power_law(sim.series, front.c, std::max(10.0, 0.1 * T), T);
      r["tail_fit"] = {{"exponent", f.exponent}, {"amplitude", f.amplitude}, {"sign", f.sign}, {"samples", f.samples}};
      out_ << "c(t) - c_lin ~ " << (f.sign < 0 ? "-" : "+") << f.amplitude << " t^-" << f.exponent << '\n';
    }
    write_file(dir_ / "report.json", r.dump(2) + "\n");
    write_gnuplot("speed.gp", "set xlabel 't'\nset ylabel 'c(t)'\nplot 'speed.csv' using \"t\":\"c\" with lines\n");
    return kOk;
  }

  int convergence() {
    const std::string param = need_from().first;
    struct Job {
      std::string sweep;
      double L, dx;
      double value = std::nan("");
      std::string status = "ok";
    };
    std::vector<Job> jobs;
    const double dx0 = cfg_.dx.value_or(grid_.dx());
    for (double dx : cfg_.dx_list) jobs.push_back({"dx", cfg_.L, dx});
    for (double L : cfg_.L_list) jobs.push_back({"L", L, dx0});
    if (jobs.empty()) throw Error(ErrorKind::ConfigError, "convergence needs --dx-list and/or --L-list");

    const ContinuationConfig cc = search_config();
    NewtonConfig nc = cfg_.newton;
    nc.log = nullptr;
    ContinuationConfig quiet = cc;
    quiet.log = nullptr;
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
      for (std::size_t k = next++; k < jobs.size(); k = next++) {
        Job& j = jobs[k];
        try {
          const Grid g = Grid::with_spacing(j.L, j.dx, cfg_.order, cfg_.m_cutoff);
          j.value = find_transition(model_, g, param, start_params(), quiet, nc, popt_).transition.params.at(param);
        } catch (const Error& e) {
          j.status = std::string(to_string(e.kind()));
        }
      }
    };
    std::vector<std::thread> pool;
    const int nthreads = std::min<int>(cfg_.jobs, static_cast<int>(jobs.size()));
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    std::ostringstream csv;
    csv << "sweep,L,dx,order,m_cutoff," << param << "_star,error,status\n";
    for (const Job& j : jobs) {
      csv << j.sweep << ',' << format_double(j.L) << ',' << format_double(j.dx) << ',' << cfg_.order << ','
          << format_double(cfg_.m_cutoff) << ',' << format_double(j.value) << ',';
      if (cfg_.exact) csv << format_double(std::abs(j.value - *cfg_.exact));
      csv << ',' << j.status << '\n';
      out_ << j.sweep << " L=" << j.L << " dx=" << j.dx << " " << param << "*=" << format_double(j.value) << " "
           << j.status << '\n';
    }
    write_file(dir_ / "convergence.csv", csv.str());
    write_gnuplot("convergence_dx.gp",
                  "set logscale xy\nset xlabel 'dx'\nset ylabel 'error'\nplot 'convergence.csv' using "
                  "(strcol(1) eq 'dx' ? $3 : NaN):7 with linespoints title 'error vs dx'\n");
    write_gnuplot("convergence_L.gp",
                  "set logscale y\nset xlabel 'L'\nset ylabel 'error'\nplot 'convergence.csv' using "
                  "(strcol(1) eq 'L' ? $2 : NaN):7 with linespoints title 'error vs L'\n");
    for (const Job& j : jobs)
      if (j.status != "ok") return kNewtonFailure;
    return kOk;
  }

  RunConfig cfg_;
  std::ostream& out_;
  std::ostream& err_;
  ModelSpec model_;
  Grid grid_;
  fs::path dir_;
  ProblemOptions popt_;
};

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) v.push_back(parse_assignment("x=" + item).second);
  return v;
}

int rerun(const std::string& manifest_path, const std::string& name, std::ostream& out, std::ostream& err);

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"frontlab: traveling fronts by far-field/core continuation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", FRONTLAB_VERSION);

  RunConfig cfg;
  std::vector<std::string> params;
  std::string from, to, curve, dx_list, L_list, scheme = "rk4";
  std::optional<int> N;
  std::optional<double> dx;
  std::string manifest, rerun_name;

  auto common = [&](CLI::App* s) {
    s->add_option("--model", cfg.model_name, "builtin model name or path to a model document")->required();
    s->add_option("--param", params, "parameter override NAME=VALUE (repeatable)");
    s->add_option("--L", cfg.L, "half-length of the domain [-L, L]");
    s->add_option("--N", N, "number of grid points");
    s->add_option("--dx", dx, "grid spacing (default 0.1)");
    s->add_option("--order", cfg.order, "finite-difference order, 2 or 4");
    s->add_option("--m-cutoff", cfg.m_cutoff, "steepness of the far-field cutoff");
    s->add_option("--out", cfg.out_dir, "output directory (default $FRONTLAB_OUT, else ./runs)");
    s->add_option("--name", cfg.run_name, "run name (default <command>-<model>)");
    s->add_option("--tol", cfg.newton.tol_residual, "Newton residual tolerance");
    s->add_option("--max-iter", cfg.newton.max_iter, "Newton iteration limit");
    s->add_option("--hard-tol", cfg.resonance.hard_tol, "abort when a spatial root is this close to nu_lin");
    s->add_option("--near-tol", cfg.resonance.near_tol, "warn when a spatial root is this close to nu_lin");
    s->add_flag("--gnuplot", cfg.gnuplot, "write gnuplot scripts next to the CSV files");
    s->add_flag("-v,--verbose", cfg.verbose, "log Newton iterations and branch points to stderr");
  };
  auto continuation = [&](CLI::App* s) {
    s->add_option("--from", from, "parameter and start value NAME=VALUE");
    s->add_option("--to", to, "parameter end value NAME=VALUE");
    s->add_option("--step0", cfg.cont.step0, "first step");
    s->add_option("--max-step", cfg.cont.max_step, "largest secant step");
    s->add_option("--min-step", cfg.cont.min_step, "smallest step before giving up");
    s->add_option("--max-points", cfg.cont.max_points, "branch length limit");
    s->add_option("--seed", cfg.seed_path, "start from a saved state (JSON)");
    s->add_option("--profile-every", cfg.profile_every, "write every k-th profile (0: none)");
  };

  auto* disp = app.add_subcommand("dispersion", "linear spreading speed and resonance warnings");
  common(disp);
  auto* cont = app.add_subcommand("continue", "continue a pulled or pushed branch in one parameter");
  common(cont);
  continuation(cont);
  cont->add_option("--mode", cfg.mode, "pulled or pushed")->check(CLI::IsMember({"pulled", "pushed"}));
  auto* find = app.add_subcommand("find-transition", "locate the pushed-to-pulled transition along a pulled branch");
  common(find);
  continuation(find);
  find->add_option("--pushed-offset", cfg.pushed_offset, "distance past the transition for the pushed front");
  auto* trace = app.add_subcommand("trace-curve", "continue the transition in two parameters");
  common(trace);
  continuation(trace);
  trace->add_option("--curve", curve, "second parameter and its target NAME=VALUE")->required();
  auto* val = app.add_subcommand("validate", "compare with a direct simulation");
  common(val);
  val->add_option("--mode", cfg.mode, "pulled, pushed or auto")->check(CLI::IsMember({"pulled", "pushed", "auto"}));
  val->add_option("--sim-L", cfg.sim.domain_L, "simulation half-length");
  val->add_option("--sim-dx", cfg.sim.dx, "simulation grid spacing");
  val->add_option("--sim-order", cfg.sim.order, "simulation stencil order");
  val->add_option("--t-final", cfg.sim.t_final, "simulated time");
  val->add_option("--dt", cfg.sim.dt, "time step (default: stability limit)");
  val->add_option("--scheme", scheme, "rk4 or imex")->check(CLI::IsMember({"rk4", "imex"}));
  auto* conv = app.add_subcommand("convergence", "transition location over a sweep of grids");
  common(conv);
  continuation(conv);
  conv->add_option("--dx-list", dx_list, "comma-separated spacings at fixed L");
  conv->add_option("--L-list", L_list, "comma-separated half-lengths at fixed dx");
  conv->add_option("--exact", cfg.exact, "reference value for the error column");
  conv->add_option("--jobs", cfg.jobs, "worker threads");
  auto* re = app.add_subcommand("rerun", "repeat a run from its manifest and compare outputs");
  re->add_option("manifest", manifest, "manifest.json of the earlier run")->required();
  re->add_option("--name", rerun_name, "run name (default <original>-rerun)");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << FRONTLAB_VERSION << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    if (re->parsed()) return rerun(manifest, rerun_name, out, err);
    cfg.command = app.get_subcommands().front()->get_name();
    cfg.argv = args;
    cfg.N = N;
    cfg.dx = dx;
    for (const auto& p : params) cfg.params.insert(parse_assignment(p));
    if (!from.empty()) cfg.from = parse_assignment(from);
    if (!to.empty()) cfg.to = parse_assignment(to);
    if (!curve.empty()) cfg.curve = parse_assignment(curve);
    if (!dx_list.empty()) cfg.dx_list = parse_list(dx_list);
    if (!L_list.empty()) cfg.L_list = parse_list(L_list);
    if (cfg.to && !cfg.from) throw Error(ErrorKind::ConfigError, "--to needs --from");
    cfg.sim.scheme = scheme == "imex" ? Scheme::IMEX_CN : Scheme::RK4;
    if (cfg.command == "validate" && cfg.mode == "pulled" && !val->get_option("--mode")->count()) cfg.mode = "auto";
    if (cfg.out_dir.empty()) {
      const char* env = std::getenv("FRONTLAB_OUT");
      cfg.out_dir = env && *env ? env : "runs";
    }
    cfg.validate();
    Run r(cfg, out, err);
    return r.execute();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
}

namespace {

int rerun(const std::string& manifest_path, const std::string& name, std::ostream& out, std::ostream& err) {
  try {
    const fs::path mp(manifest_path);
    const ordered_json m = ordered_json::parse(read_file(mp));
    std::vector<std::string> args = m.at("argv").get<std::vector<std::string>>();
    const fs::path original = mp.parent_path();
    const std::string new_name = name.empty() ? original.filename().string() + "-rerun" : name;
    // drop earlier placement flags, then point the run next to the original
    std::vector<std::string> cleaned;
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (args[i] == "--out" || args[i] == "--name") {
        ++i;
        continue;
      }
      if (args[i].rfind("--out=", 0) == 0 || args[i].rfind("--name=", 0) == 0) continue;
      cleaned.push_back(args[i]);
    }
    const fs::path parent = original.parent_path().empty() ? fs::path(".") : original.parent_path();
    cleaned.insert(cleaned.end(), {"--out", parent.string(), "--name", new_name});
    const int code = run(cleaned, out, err);

    int differ = 0;
    const fs::path fresh = parent / new_name;
    for (const auto& entry : fs::recursive_directory_iterator(original)) {
      if (!entry.is_regular_file() || entry.path().filename() == "manifest.json") continue;
      const fs::path rel = fs::relative(entry.path(), original);
      const fs::path other = fresh / rel;
      if (!fs::exists(other) || read_file(entry.path()) != read_file(other)) {
        out << "differs: " << rel.string() << '\n';
        ++differ;
      }
    }
    out << (differ ? "rerun differs from the original" : "rerun is identical to the original") << '\n';
    if (code != kOk) return code;
    return differ ? kFailure : kOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const nlohmann::json::exception& e) {
    err << "error: invalid manifest: " << e.what() << '\n';
    return kConfigError;
  }
}

}  // namespace

}  // namespace frontlab::cli
