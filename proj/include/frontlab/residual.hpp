#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "frontlab/grid.hpp"
#include "frontlab/models.hpp"
#include "frontlab/symbol.hpp"

namespace frontlab {

/// One point on a branch.  W is stored point-major: W[i * n + k].
struct FrontState {
  Vector W;
  Vector u_minus;
  Vector u_plus;
  double c = 0.0;
  double nu = -1.0;
  double alpha = 0.0;
  double beta = 0.0;
  ParamMap params;

  // diagnostics of the solve that produced this state
  int newton_iters = 0;
  double residual_norm = 0.0;
};

/// Far-field coefficients: tail(x) = (v1 x + v0) e^{nu x}.
struct TailVectors {
  Vector v0;
  Vector v1;
  Vector u0;
  Vector u1;
};

enum class ModeKind { Pulled, Pushed, TransitionCurve };
std::string to_string(ModeKind k);
ModeKind mode_from_string(const std::string& s);

struct SystemMode {
  ModeKind kind = ModeKind::Pulled;
  std::vector<std::string> free_params;  // parameters appended to the unknowns
};

struct ProblemOptions {
  int phase_anchor = -1;  // -1: model default
  int tail_anchor = -1;   // -1: model default
  ResonanceOptions resonance;
};

/// The discretized far-field/core system for one model, grid and mode.
///
/// Unknown layout: [W (n N) | u_- (n) | u_+ (n) | c | nu | alpha | beta | free params].
/// Equation layout: [core (n N) | equilibria (2n) | closure (2 or 3) | transversality | phase].
class FrontProblem {
 public:
  FrontProblem(ModelSpec model, Grid grid, SystemMode mode, ProblemOptions opt = {});

  const ModelSpec& model() const { return model_; }
  const Grid& grid() const { return grid_; }
  const DiffOps& ops() const { return ops_; }
  const Cutoffs& cut() const { return cut_; }
  const Vector& quad_weights() const { return quad_; }
  const SystemMode& mode() const { return mode_; }
  int n() const { return n_; }
  int N() const { return grid_.N; }
  int max_derivative() const { return K_; }
  int stencil_half_width() const { return ops_.half_width; }
  int phase_anchor() const { return phase_anchor_; }
  /// Positive factor multiplying the transversality row, exp(-nu_ref x_{N-1}).
  double transversality_scale() const { return t_scale_; }
  int tail_anchor() const { return tail_anchor_; }

  int core_size() const { return n_ * grid_.N; }
  int idx_u_minus() const { return core_size(); }
  int idx_u_plus() const { return core_size() + n_; }
  int idx_c() const { return core_size() + 2 * n_; }
  int idx_nu() const { return idx_c() + 1; }
  int idx_alpha() const { return idx_c() + 2; }
  int idx_beta() const { return idx_c() + 3; }
  int idx_param(int k) const { return idx_c() + 4 + k; }
  int num_unknowns() const { return idx_c() + 4 + static_cast<int>(mode_.free_params.size()); }
  int num_closure() const { return mode_.kind == ModeKind::TransitionCurve ? 3 : 2; }
  int row_closure() const { return core_size() + 2 * n_; }
  int row_transversality() const { return row_closure() + num_closure(); }
  int row_phase() const { return row_transversality() + 1; }
  int num_equations() const { return row_phase() + 1; }

  Vector pack(const FrontState& s) const;
  /// Overwrites the unknown fields of `into`; fixed parameters are kept.
  void unpack(const Vector& x, FrontState& into) const;

  /// Fixes the bordering vector used to normalize the tail eigenvectors.
  void set_reference(const FrontState& s);
  TailVectors tail_vectors(const FrontState& s) const;

  Vector reconstruct(const FrontState& s) const;
  Vector core_residual(const FrontState& s) const;
  /// Raw traveling-wave operator applied to the reconstructed profile (no cancellations).
  Vector naive_residual(const FrontState& s) const;
  /// chi_- f(u_-) + chi_+ f(u_+) + chi_+ L_+[tail], the terms core_residual removes.
  Vector subtracted_identities(const FrontState& s) const;

  Vector residual(const FrontState& s) const;
  Vector residual(const Vector& x, const FrontState& templ) const;

  /// Throws FlatProfile or ResonanceAbort if the state cannot be solved for.
  void check_state(const FrontState& s) const;

  SymbolMatrix symbol(const FrontState& s) const;

  /// Initial state interpolating u_- to u_+ with decay rate nu.
  FrontState initial_state(const ParamMap& params, double c, double nu) const;

 private:
  void core_terms(const FrontState& s, Vector* cancelled, Vector* naive, Vector* identities) const;

  ModelSpec model_;
  Grid grid_;
  SystemMode mode_;
  ProblemOptions opt_;
  int n_;
  int K_;
  int phase_anchor_;
  int tail_anchor_;
  DiffOps ops_;
  Cutoffs cut_;
  Vector quad_;
  Vector b_ref_;
  double t_scale_ = 1.0;
};

nlohmann::ordered_json to_json(const FrontState& s, const Grid& g, const std::vector<std::string>& param_order);
FrontState state_from_json(const nlohmann::ordered_json& j);

}  // namespace frontlab
