#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "frontlab/newton.hpp"

namespace frontlab {

enum class EventKind { AlphaZero, ResonanceAbort, Fold, NewtonFail };
std::string to_string(EventKind k);

struct BranchEvent {
  int lo = 0;  // event lies between points[lo] and points[hi]
  int hi = 0;
  EventKind kind = EventKind::AlphaZero;
  std::string message;
};

struct Branch {
  std::vector<FrontState> points;
  SystemMode mode;
  std::vector<BranchEvent> events;
  Grid grid;

  /// The parameter stepped by the continuation (last free parameter).
  const std::string& param() const { return mode.free_params.back(); }
  bool has_event(EventKind k) const;
};

struct ContinuationConfig {
  double step0 = 0.02;
  double max_step = 0.5;
  double min_step = 1e-5;
  double grow = 1.3;
  double shrink = 0.5;
  int fast_iters = 4;  // grow the step when Newton needs at most this many iterations
  int max_points = 400;
  int direction = -1;  // sign of the first parameter step
  std::optional<double> target;  // stop (landing exactly) when the stepped parameter reaches this value
  bool stop_at_alpha_zero = false;
  std::ostream* log = nullptr;
};

/// Newton at fixed parameter values (no free parameters beyond `extra_free`).
FrontState solve_fixed(const ModelSpec& model, const Grid& grid, ModeKind kind, const FrontState& guess,
                       const NewtonConfig& ncfg, const std::vector<std::string>& extra_free = {},
                       const ProblemOptions& popt = {});

/// Secant continuation of `start` in mode.free_params (the last one is stepped).
/// Throws FirstStepFailure when no second point can be produced.
Branch continue_branch(const ModelSpec& model, const Grid& grid, const FrontState& start, const SystemMode& mode,
                       const ContinuationConfig& ccfg, const NewtonConfig& ncfg, const ProblemOptions& popt = {});

/// Pins alpha = 0 inside the bracket of an AlphaZero event.
FrontState refine_transition(const ModelSpec& model, const Branch& branch, const BranchEvent& event,
                             const NewtonConfig& ncfg, const ProblemOptions& popt = {});

/// Continues the transition system in (param, param2); param2 is stepped.
Branch trace_transition_curve(const ModelSpec& model, const Grid& grid, const FrontState& start,
                              const std::string& param, const std::string& param2, const ContinuationConfig& ccfg,
                              const NewtonConfig& ncfg, const ProblemOptions& popt = {});

/// Direction (+1/-1) in the stepped parameter on which the pulled branch has
/// alpha of the wrong sign, i.e. where pushed fronts exist.
int pushed_side(const ModelSpec& model, const Branch& pulled, const BranchEvent& event);

/// Converged pushed front at param = transition + side * offset.
/// Throws WrongSide if its speed does not exceed the linear speed.
FrontState switch_to_pushed(const ModelSpec& model, const Grid& grid, const FrontState& transition,
                            const std::string& param, int side, double offset, const NewtonConfig& ncfg,
                            const ProblemOptions& popt = {});

/// Converged front at fixed parameters, seeded from the linear spreading data
/// (pulled) or from a speed above it (pushed).
FrontState initial_front(const ModelSpec& model, const Grid& grid, ModeKind kind, const ParamMap& params,
                         const NewtonConfig& ncfg, const ProblemOptions& popt = {});

struct TransitionSearch {
  Branch pulled;
  BranchEvent event;
  FrontState transition;
  int side = 0;  // direction in `param` towards pushed fronts
};

/// Pulled continuation in `param` from `start` until alpha changes sign, then
/// refinement of the crossing.  Throws NoTransition when none is found.
TransitionSearch find_transition(const ModelSpec& model, const Grid& grid, const std::string& param,
                                 const ParamMap& start, const ContinuationConfig& ccfg, const NewtonConfig& ncfg,
                                 const ProblemOptions& popt = {});

/// Linear spreading speed data at the state's parameters, seeded from its (c, nu).
DoubleRoot linear_root(const ModelSpec& model, const FrontState& s, bool require_simple = true);

// serialization
std::string branch_csv(const Branch& branch, const ModelSpec& model);
nlohmann::ordered_json branch_json(const Branch& branch, const ModelSpec& model);
std::string format_double(double v);

}  // namespace frontlab
