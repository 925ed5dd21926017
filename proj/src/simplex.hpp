#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace qpcert::milp::detail {

/// Bounded-variable LP in computational form: min c^T x subject to
/// A x REL b with every variable boxed (infinities allowed). Columns are
/// stored sparse; one logical column per row is appended internally.
struct SparseLp {
  int ncols = 0;
  int nrows = 0;
  std::vector<std::vector<std::pair<int, double>>> cols;
  std::vector<double> lb, ub, cost;
  std::vector<double> rhs;
  std::vector<int> rel;  // 0: <=, 1: ==, 2: >=
};

enum class SolveState { optimal, infeasible, unbounded, failed };

struct SimplexResult {
  SolveState state = SolveState::failed;
  double objective = 0.0;
  std::vector<double> x;  // structural part only
  long iterations = 0;
};

/// Two-phase primal simplex for bounded variables with a product-form basis
/// inverse. Deterministic: Dantzig pricing with fixed tie-breaks, Bland's
/// rule after degenerate stalls.
SimplexResult solve_bounded_lp(const SparseLp& lp);

}  // namespace qpcert::milp::detail
