#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace frontlab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using ParamMap = std::map<std::string, double>;

/// coef * prod_p params[p]^powers[p]
struct ParamTerm {
  double coef = 0.0;
  std::map<std::string, int> powers;

  double evaluate(const ParamMap& params) const;
  bool operator==(const ParamTerm&) const = default;
};

/// Sum of parameter monomials; an empty expression is zero.
using ParamExpr = std::vector<ParamTerm>;

double evaluate(const ParamExpr& expr, const ParamMap& params);

/// One monomial of the reaction: coefficient times prod (d^k u_i)^exponents[i][k].
struct ReactionTerm {
  ParamTerm coef;
  std::vector<std::vector<int>> exponents;  // [component][derivative order]

  bool operator==(const ReactionTerm&) const = default;
};

struct DefaultGuess {
  double c = 2.0;
  double nu = -1.0;
};

/// A reaction-diffusion(-elliptic) system  M u_t = sum_j P_j d^j u + f(u, u_x, ...; params).
///
/// Every model, builtin or loaded, is stored as polynomial term tables so the
/// same evaluator and serializer serve both.  The leading block of mass flags
/// is 1 (parabolic), the rest 0 (elliptic constraints).
struct ModelSpec {
  std::string name;
  int n = 1;
  int order = 2;  // 2m, highest spatial derivative in the linear part
  std::vector<int> mass;
  std::map<int, std::vector<ParamExpr>> P;  // derivative order j -> row-major n*n entries
  std::vector<std::vector<ReactionTerm>> reaction;  // one term list per equation
  bool analytic_jacobian = true;
  std::vector<std::string> param_names;  // declaration order, used for CSV columns
  ParamMap params;                       // defaults
  Vector u_minus;
  Vector u_plus;
  bool pin_equilibria = false;  // replace f(u_-)=f(u_+)=0 by u_pm = declared values
  int anchor = 0;               // component carrying the phase condition
  int tail_anchor = 0;          // component normalizing the tail vectors
  DefaultGuess guess;

  /// Highest derivative order appearing in the reaction terms.
  int jet_order() const;
  /// Highest derivative order needed anywhere in the residual.
  int max_derivative() const { return std::max(order, jet_order()); }
  bool fully_parabolic() const;

  ParamMap resolve(const ParamMap& overrides) const;
};

/// Numeric view of a model at fixed parameter values.  Cheap to construct;
/// built once per residual evaluation.
class BoundModel {
 public:
  BoundModel(const ModelSpec& spec, const ParamMap& params);

  int n() const { return n_; }
  int order() const { return order_; }
  int jet_order() const { return jet_order_; }
  /// P(j) for j = 0..order (P(0) is zero).
  const Matrix& P(int j) const { return P_[j]; }
  const Vector& mass() const { return mass_; }

  /// jet[k * n + i] = d^k u_i for k = 0..jet_order.
  void reaction(const double* jet, double* out) const;
  /// J[k](i, l) = d f_i / d(d^k u_l), k = 0..jet_order.
  void jacobian(const double* jet, std::vector<Matrix>& J) const;

  Vector reaction_at(const Vector& u) const;
  std::vector<Matrix> jacobian_at(const Vector& u) const;

 private:
  struct Factor {
    int slot;
    int power;
  };
  struct Term {
    double coef;
    std::vector<Factor> factors;
  };

  void analytic_jacobian(const double* jet, std::vector<Matrix>& J) const;
  void fd_jacobian(const double* jet, std::vector<Matrix>& J) const;

  int n_;
  int order_;
  int jet_order_;
  bool analytic_;
  std::vector<Matrix> P_;
  Vector mass_;
  std::vector<std::vector<Term>> terms_;
};

std::vector<std::string> builtin_names();
/// Throws Error(UnknownModel).
ModelSpec builtin(std::string_view name);

/// Parses a model document; validates ellipticity and equilibria.
/// Non-fatal notes (e.g. synthesized Jacobian) are appended to warnings.
ModelSpec load_model(const nlohmann::ordered_json& doc, std::vector<std::string>* warnings = nullptr);
ModelSpec load_model_file(const std::string& path, std::vector<std::string>* warnings = nullptr);
/// Builtin name or path to a document.
ModelSpec resolve_model(const std::string& name_or_path, std::vector<std::string>* warnings = nullptr);
nlohmann::ordered_json to_json(const ModelSpec& model);

void check_ellipticity(const ModelSpec& model, const ParamMap& params);
void check_equilibria(const ModelSpec& model, const ParamMap& params, double tol = 1e-12);

/// Newton polish of f(u) = 0 from a seed; pinned models return the seed unchanged.
Vector polish_equilibrium(const ModelSpec& model, const ParamMap& params, const Vector& seed);

}  // namespace frontlab
