#include "frontlab/oracle.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include "frontlab/error.hpp"

namespace frontlab {

namespace {

void require_parabolic(const ModelSpec& model, const char* what) {
  if (!model.fully_parabolic())
    throw Error(ErrorKind::OracleScope, std::string(what) + " needs a fully parabolic model; '" + model.name +
                                            "' has elliptic components");
}

/// Semi-discrete right-hand side sum_j P_j D_j u + f(jet) on a reflecting grid.
class Rhs {
 public:
  Rhs(const ModelSpec& model, const ParamMap& params, const Grid& g)
      : bm_(model, params), n_(model.n), N_(g.N), K_(model.max_derivative()), ops_(build_ops(g, K_)) {
    jet_.resize(static_cast<std::size_t>((K_ + 1) * n_ * N_));
  }

  void operator()(const Vector& u, Vector& out) {
    const int n = n_, N = N_;
    // jet_[(k * n + comp) * N + i]
    for (int comp = 0; comp < n; ++comp)
      for (int i = 0; i < N; ++i) jet_[static_cast<std::size_t>(comp * N + i)] = u[i * n + comp];
    for (int k = 1; k <= K_; ++k)
      for (int comp = 0; comp < n; ++comp)
        for (int i = 0; i < N; ++i)
          jet_[static_cast<std::size_t>((k * n + comp) * N + i)] = ops_[k].apply_row(u.data(), i, n, comp);
    out.setZero(n * N);
    std::vector<double> pt(static_cast<std::size_t>((bm_.jet_order() + 1) * n));
    std::vector<double> f(static_cast<std::size_t>(n));
    for (int i = 0; i < N; ++i) {
      for (int k = 0; k <= bm_.jet_order(); ++k)
        for (int comp = 0; comp < n; ++comp)
          pt[static_cast<std::size_t>(k * n + comp)] = jet_[static_cast<std::size_t>((k * n + comp) * N + i)];
      bm_.reaction(pt.data(), f.data());
      for (int r = 0; r < n; ++r) {
        double acc = f[static_cast<std::size_t>(r)];
        for (int j = 1; j <= bm_.order(); ++j)
          for (int l = 0; l < n; ++l)
            if (bm_.P(j)(r, l) != 0.0) acc += bm_.P(j)(r, l) * jet_[static_cast<std::size_t>((j * n + l) * N + i)];
        out[i * n + r] = acc;
      }
    }
  }

  /// Explicit part only (the reaction); used by the IMEX scheme.
  void reaction(const Vector& u, Vector& out) {
    const int n = n_, N = N_;
    out.setZero(n * N);
    const int J = bm_.jet_order();
    std::vector<double> pt(static_cast<std::size_t>((J + 1) * n));
    std::vector<double> f(static_cast<std::size_t>(n));
    for (int i = 0; i < N; ++i) {
      for (int comp = 0; comp < n; ++comp) {
        pt[static_cast<std::size_t>(comp)] = u[i * n + comp];
        for (int k = 1; k <= J; ++k)
          pt[static_cast<std::size_t>(k * n + comp)] = ops_[k].apply_row(u.data(), i, n, comp);
      }
      bm_.reaction(pt.data(), f.data());
      for (int r = 0; r < n; ++r) out[i * n + r] = f[static_cast<std::size_t>(r)];
    }
  }

  SparseMatrix linear_matrix() const {
    std::vector<Eigen::Triplet<double>> trip;
    for (int j = 1; j <= bm_.order(); ++j) {
      const DiffOp& D = ops_[j];
      for (int r = 0; r < n_; ++r)
        for (int l = 0; l < n_; ++l) {
          const double p = bm_.P(j)(r, l);
          if (p == 0.0) continue;
          for (int i = 0; i < N_; ++i)
            for (const auto& [col, w] : D.row(i)) trip.emplace_back(i * n_ + r, col * n_ + l, p * w * D.scale());
        }
    }
    SparseMatrix A(n_ * N_, n_ * N_);
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
  }

 private:
  BoundModel bm_;
  int n_;
  int N_;
  int K_;
  DiffOps ops_;
  std::vector<double> jet_;
};

double crossing(const Vector& u, int n, int comp, const Grid& g, double level) {
  for (int i = g.N - 2; i >= 0; --i) {
    const double a = u[i * n + comp] - level;
    const double b = u[(i + 1) * n + comp] - level;
    if (a == 0.0) return g.x(i);
    if (a * b < 0.0) return g.x(i) + g.dx() * a / (a - b);
  }
  return std::nan("");
}

}  // namespace

double cfl_limit(const ModelSpec& model, const ParamMap& params, double dx) {
  const BoundModel bm(model, model.resolve(params));
  const double norm = Eigen::JacobiSVD<Matrix>(bm.P(model.order)).singularValues()(0);
  return 0.2 * std::pow(dx, model.order) / norm;
}

SpeedResult measure_speed(const ModelSpec& model, const ParamMap& overrides, const SimConfig& sim) {
  require_parabolic(model, "direct simulation");
  if (sim.t_final < 1.0 || sim.dx <= 0.0 || sim.domain_L <= sim.step_width)
    throw Error(ErrorKind::ConfigError, "simulation needs t_final >= 1, dx > 0 and L > step_width");
  const ParamMap params = model.resolve(overrides);
  const int n = model.n;
  const Vector um = polish_equilibrium(model, params, model.u_minus);
  const Vector up = polish_equilibrium(model, params, model.u_plus);
  const int comp = model.anchor;
  const double level = sim.tracker_level.value_or(0.5 * (um[comp] + up[comp]));

  Grid g = Grid::with_spacing(sim.domain_L, sim.dx, sim.order);
  Rhs rhs(model, params, g);

  const double limit = cfl_limit(model, params, g.dx());
  double dt = sim.dt > 0.0 ? sim.dt : limit;
  if (sim.scheme == Scheme::RK4 && dt > limit * (1.0 + 1e-12))
    throw Error(ErrorKind::CFLViolation,
                "dt = " + std::to_string(dt) + " exceeds the explicit limit " + std::to_string(limit));
  // an integer number of steps per unit time, so samples land on integer times
  const int per_unit = static_cast<int>(std::ceil(1.0 / dt - 1e-9));
  dt = 1.0 / per_unit;

  Vector u(n * g.N);
  const double edge = -sim.domain_L + sim.step_width;
  for (int i = 0; i < g.N; ++i)
    for (int k = 0; k < n; ++k) u[i * n + k] = g.x(i) < edge ? um[k] : up[k];

  const int NN = n * g.N;
  Vector k1(NN), k2(NN), k3(NN), k4(NN), tmp(NN);
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  Eigen::SparseMatrix<double> Aexp;
  if (sim.scheme == Scheme::IMEX_CN) {
    Eigen::SparseMatrix<double> A = rhs.linear_matrix();
    Eigen::SparseMatrix<double> I(NN, NN);
    I.setIdentity();
    Eigen::SparseMatrix<double> Aimp = I - 0.5 * dt * A;
    Aexp = I + 0.5 * dt * A;
    lu.compute(Aimp);
    if (lu.info() != Eigen::Success) throw Error(ErrorKind::SingularJacobian, "implicit operator factorization failed");
  }

  auto step = [&]() {
    if (sim.scheme == Scheme::RK4) {
      rhs(u, k1);
      tmp = u + 0.5 * dt * k1;
      rhs(tmp, k2);
      tmp = u + 0.5 * dt * k2;
      rhs(tmp, k3);
      tmp = u + dt * k3;
      rhs(tmp, k4);
      u += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    } else {
      rhs.reaction(u, k1);
      tmp = Aexp * u + dt * k1;
      u = lu.solve(tmp);
    }
  };

  SpeedResult res;
  res.dt = dt;
  double X_prev = crossing(u, n, comp, g, level);
  const double margin = 5.0;
  const int T = static_cast<int>(std::floor(sim.t_final + 1e-9));
  for (int t = 1; t <= T; ++t) {
    for (int s = 0; s < per_unit; ++s) step();
    if (!u.allFinite()) throw Error(ErrorKind::CFLViolation, "solution became non-finite at t = " + std::to_string(t));
    const double X = crossing(u, n, comp, g, level);
    if (std::isnan(X)) throw Error(ErrorKind::FrontExitedDomain, "no level crossing at t = " + std::to_string(t));
    if (X > sim.domain_L - margin)
      throw Error(ErrorKind::FrontExitedDomain, "front reached x = " + std::to_string(X) + " at t = " +
                                                    std::to_string(t) + "; enlarge L or shorten t_final");
    res.series.push_back({static_cast<double>(t), X, X - X_prev});
    X_prev = X;
  }
  const std::size_t tail = std::max<std::size_t>(1, res.series.size() / 10);
  double sum = 0.0;
  for (std::size_t i = res.series.size() - tail; i < res.series.size(); ++i) sum += res.series[i].c;
  res.c_final = sum / static_cast<double>(tail);
  return res;
}

PowerLawFit fit_power_law(const std::vector<SpeedSample>& series, double c_ref, double t_lo, double t_hi) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0, ssign = 0;
  int m = 0;
  for (const auto& p : series) {
    if (p.t < t_lo || p.t > t_hi) continue;
    const double d = p.c - c_ref;
    if (d == 0.0) continue;
    const double lx = std::log(p.t), ly = std::log(std::abs(d));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ssign += d > 0 ? 1.0 : -1.0;
    ++m;
  }
  PowerLawFit fit;
  fit.samples = m;
  if (m < 2) return fit;
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  const double icpt = (sy - slope * sx) / m;
  fit.exponent = -slope;
  fit.amplitude = std::exp(icpt);
  fit.sign = ssign / m;
  return fit;
}

double weight_profile(double x) {
  if (x <= -1.0) return 0.0;
  if (x >= 1.0) return x;
  return (x + 1.0) * (x + 1.0) * (x + 1.0) * (3.0 - x) / 16.0;
}

std::vector<cplx> edge_spectrum(const FrontProblem& problem, const FrontState& s, int n_eigs, double nu_weight) {
  const ModelSpec& model = problem.model();
  require_parabolic(model, "edge spectrum");
  const Grid& g = problem.grid();
  const int n = problem.n(), N = g.N, K = problem.max_derivative();
  const BoundModel bm(model, s.params);
  const int J = bm.jet_order();
  const Vector u = problem.reconstruct(s);
  const DiffOps& ops = problem.ops();
  const double eta = -nu_weight;
  auto omega_log = [&](double x) { return eta * weight_profile(x); };

  // coefficient blocks C_k(x_i): n x n multiplying d^k
  std::vector<std::vector<Matrix>> C(static_cast<std::size_t>(N), std::vector<Matrix>(K + 1, Matrix::Zero(n, n)));
  std::vector<double> pt(static_cast<std::size_t>((J + 1) * n));
  std::vector<Matrix> Jac;
  for (int i = 0; i < N; ++i) {
    for (int comp = 0; comp < n; ++comp) {
      pt[static_cast<std::size_t>(comp)] = u[i * n + comp];
      for (int k = 1; k <= J; ++k) pt[static_cast<std::size_t>(k * n + comp)] = ops[k].apply_row(u.data(), i, n, comp);
    }
    bm.jacobian(pt.data(), Jac);
    auto& Ci = C[static_cast<std::size_t>(i)];
    for (int k = 0; k <= J; ++k) Ci[k] += Jac[k];
    for (int j = 1; j <= bm.order(); ++j) Ci[j] += bm.P(j);
    Ci[1] += s.c * bm.mass().asDiagonal().toDenseMatrix();
  }

  // conjugated stencils; ghost points reflect the weighted variable
  Matrix A = Matrix::Zero(n * N, n * N);
  const double dx = g.dx();
  for (int k = 0; k <= K; ++k) {
    const Stencil st = k == 0 ? Stencil{{1.0}, 1.0} : stencil(k, g.order);
    const int h = st.half();
    const double scale = 1.0 / (st.den * std::pow(dx, k));
    for (int i = 0; i < N; ++i) {
      const Matrix& Ck = C[static_cast<std::size_t>(i)][k];
      if (Ck.isZero(0.0)) continue;
      const double li = omega_log(g.x(i));
      for (int q = 0; q < static_cast<int>(st.w.size()); ++q) {
        if (st.w[q] == 0.0) continue;
        const int idx = i - h + q;
        int col = idx;
        if (idx < 0) col = -1 - idx;
        if (idx >= N) col = 2 * N - 1 - idx;
        const double xv = -g.L + (idx + 0.5) * dx;
        const double w = st.w[q] * scale * std::exp(li - omega_log(xv));
        A.block(i * n, col * n, n, n) += w * Ck;
      }
    }
  }
  Eigen::EigenSolver<Matrix> es(A, false);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::NoConvergence, "dense eigenvalue solve failed");
  std::vector<cplx> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(ev.begin(), ev.end(), [](const cplx& a, const cplx& b) { return a.real() > b.real(); });
  if (n_eigs > 0 && static_cast<int>(ev.size()) > n_eigs) ev.resize(static_cast<std::size_t>(n_eigs));
  return ev;
}

}  // namespace frontlab
