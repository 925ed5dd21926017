#pragma once

#include <Eigen/Dense>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace qpcert::milp {

enum class Relation { le, eq, ge };

struct Variable {
  std::string name;
  double lb = 0.0;
  double ub = 0.0;
  bool is_binary = false;
};

struct LinTerm {
  int var = 0;
  double coeff = 0.0;
};

struct Constraint {
  std::string name;
  std::vector<LinTerm> terms;
  Relation rel = Relation::le;
  double rhs = 0.0;
};

/// Minimization MILP with boxed variables and binary integrality flags.
struct Model {
  std::vector<Variable> vars;
  std::vector<Constraint> cons;
  std::vector<double> objective;  // dense, one coefficient per variable

  int add_var(const std::string& name, double lb, double ub,
              bool is_binary = false);
  void add_constraint(const std::string& name, std::vector<LinTerm> terms,
                      Relation rel, double rhs);
  void set_objective(int var, double coeff);
  int num_binary() const;
  void validate() const;
};

enum class LpStatus { optimal, infeasible, unbounded };

struct LpResult {
  LpStatus status = LpStatus::optimal;
  double objective = 0.0;
  Eigen::VectorXd x;  // structural variables only
  long iterations = 0;
};

/// Solves the LP relaxation (integrality dropped) with a bounded-variable
/// revised simplex. Feasibility residuals at the optimum stay below 1e-7.
LpResult lp_solve(const Model& model);

enum class SolveStatus {
  optimal,
  lower_bound_above_threshold,
  incumbent_below_threshold,
  infeasible,
  node_limit,
};

struct SolveOptions {
  std::optional<double> decide_threshold;
  double gap_tol = 1e-6;
  long node_limit = 200000;
  double int_tol = 1e-6;
  /// Optional feasible starting assignment (full variable vector). The solver
  /// verifies feasibility before adopting it as the first incumbent.
  std::optional<Eigen::VectorXd> initial_incumbent;
};

struct SolveOutcome {
  SolveStatus status = SolveStatus::optimal;
  double best_lower_bound = -std::numeric_limits<double>::infinity();
  std::optional<double> incumbent_value;
  std::optional<Eigen::VectorXd> incumbent;
  long nodes_explored = 0;
};

/// Best-bound branch and bound over LP relaxations, branching on the most
/// fractional binary. With decide_threshold T set it stops as soon as the
/// question "is the optimum > T" is settled, in either direction.
SolveOutcome branch_and_bound(const Model& model, const SolveOptions& options);

/// Writes the model in LP text format (Minimize / Subject To / Bounds /
/// Binaries / End), reals with 17 significant digits, variables in index
/// order. Deterministic byte-for-byte.
void export_lp(const Model& model, const std::string& path);

/// Residual-checked feasibility test used for incumbents.
bool is_feasible(const Model& model, const Eigen::VectorXd& x, double tol);
double objective_value(const Model& model, const Eigen::VectorXd& x);

}  // namespace qpcert::milp
