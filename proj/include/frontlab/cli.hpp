#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "frontlab/continuation.hpp"
#include "frontlab/error.hpp"
#include "frontlab/oracle.hpp"

namespace frontlab::cli {

/// Process exit statuses.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,  // numerical failure not covered below
  kNewtonFailure = 2,
  kResonanceAbort = 3,
  kConfigError = 4,
  kNoTransition = 5,
};

int exit_code(ErrorKind kind);

/// Everything a run needs, after flag parsing and defaults.
struct RunConfig {
  std::string command;
  std::string model_name;
  ParamMap params;  // overrides of the model defaults
  double L = 16.0;
  std::optional<int> N;
  std::optional<double> dx;
  int order = 4;
  double m_cutoff = 10.0;
  std::string mode = "pulled";  // pulled | pushed | auto (validate)
  std::optional<std::pair<std::string, double>> from;  // continuation parameter and start
  std::optional<std::pair<std::string, double>> to;    // end (continue) or search bound (find-transition)
  std::optional<std::pair<std::string, double>> curve; // second parameter and target (trace-curve)
  std::vector<double> dx_list;
  std::vector<double> L_list;
  std::optional<double> exact;  // reference value for convergence tables
  NewtonConfig newton;
  ContinuationConfig cont;
  SimConfig sim;
  ResonanceOptions resonance;
  double pushed_offset = 0.02;
  std::string out_dir;
  std::string run_name;
  std::string seed_path;
  int jobs = 1;
  int profile_every = 1;
  bool gnuplot = false;
  bool verbose = false;
  std::vector<std::string> argv;  // as given, recorded in the manifest for reruns

  Grid grid() const;
  /// Throws Error(ConfigError) on violated invariants.
  void validate() const;
};

/// Parses and runs one command line (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace frontlab::cli
