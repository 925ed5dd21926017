#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include "qpcert/errors.hpp"
#include "qpcert/milp.hpp"
#include "simplex.hpp"

namespace qpcert::milp {

namespace detail {
LpResult lp_solve_bounds(const Model& model, const std::vector<double>& lb,
                         const std::vector<double>& ub);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Node {
  double bound;  // parent LP objective, a valid lower bound for the subtree
  long id;
  std::vector<std::pair<int, int>> fixings;  // (binary var, value)
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;  // min-heap on bound
    return a.id > b.id;
  }
};

}  // namespace

SolveOutcome branch_and_bound(const Model& model, const SolveOptions& options) {
  model.validate();
  const int nvars = static_cast<int>(model.vars.size());
  std::vector<int> binaries;
  for (int j = 0; j < nvars; ++j)
    if (model.vars[j].is_binary) binaries.push_back(j);

  std::vector<double> base_lb(nvars), base_ub(nvars);
  for (int j = 0; j < nvars; ++j) {
    base_lb[j] = model.vars[j].lb;
    base_ub[j] = model.vars[j].ub;
  }

  SolveOutcome out;
  auto accept_incumbent = [&](double value, const Eigen::VectorXd& x) {
    if (!out.incumbent_value || value < *out.incumbent_value) {
      out.incumbent_value = value;
      out.incumbent = x;
    }
  };
  if (options.initial_incumbent) {
    const Eigen::VectorXd& x0 = *options.initial_incumbent;
    if (is_feasible(model, x0, 1e-6))
      accept_incumbent(objective_value(model, x0), x0);
  }

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  long next_id = 0;
  open.push({-kInf, next_id++, {}});

  const double int_tol = options.int_tol;
  double last_popped = -kInf;
  std::vector<double> lb(nvars), ub(nvars);

  auto global_lb = [&]() {
    double g = open.empty() ? kInf : open.top().bound;
    if (out.incumbent_value) g = std::min(g, *out.incumbent_value);
    return g;
  };
  auto decided = [&]() -> bool {
    if (!options.decide_threshold) return false;
    const double t = *options.decide_threshold;
    if (out.incumbent_value && *out.incumbent_value <= t) {
      out.status = SolveStatus::incumbent_below_threshold;
      out.best_lower_bound = std::max(out.best_lower_bound, last_popped);
      return true;
    }
    const double g = global_lb();
    if (g > t && std::isfinite(g)) {
      out.status = SolveStatus::lower_bound_above_threshold;
      out.best_lower_bound = g;
      return true;
    }
    return false;
  };

  if (decided()) return out;

  // Rounding heuristic: fix the binaries to the rounded LP values and
  // re-solve; adopt the point when it comes back integral-feasible.
  auto try_rounding = [&](const Eigen::VectorXd& relaxed) {
    for (int j = 0; j < nvars; ++j) {
      lb[j] = base_lb[j];
      ub[j] = base_ub[j];
    }
    for (int b : binaries) {
      const double v = std::round(relaxed[b]);
      lb[b] = v;
      ub[b] = v;
    }
    const LpResult sub = detail::lp_solve_bounds(model, lb, ub);
    if (sub.status == LpStatus::optimal && is_feasible(model, sub.x, 1e-6))
      accept_incumbent(sub.objective, sub.x);
  };

  while (!open.empty()) {
    if (out.nodes_explored >= options.node_limit) {
      out.status = SolveStatus::node_limit;
      out.best_lower_bound = global_lb();
      return out;
    }
    Node node = open.top();
    open.pop();

    // Best-bound selection keeps the popped bounds non-decreasing.
    if (node.bound < last_popped - 1e-9)
      fail(ErrorCode::solver_failure, "node lower bound regressed");
    last_popped = std::max(last_popped, node.bound);
    if (out.incumbent_value &&
        node.bound >= *out.incumbent_value - options.gap_tol)
      break;  // gap closed

    for (int j = 0; j < nvars; ++j) {
      lb[j] = base_lb[j];
      ub[j] = base_ub[j];
    }
    for (const auto& [var, val] : node.fixings) {
      lb[var] = val;
      ub[var] = val;
    }
    const LpResult rel = detail::lp_solve_bounds(model, lb, ub);
    ++out.nodes_explored;
    if (rel.status == LpStatus::infeasible) {
      if (decided()) return out;
      continue;
    }
    if (rel.status == LpStatus::unbounded)
      fail(ErrorCode::solver_failure,
           "LP relaxation unbounded in branch and bound");

    if (out.incumbent_value &&
        rel.objective >= *out.incumbent_value - options.gap_tol) {
      if (decided()) return out;
      continue;
    }

    // Most fractional binary.
    int branch_var = -1;
    double best_frac = int_tol;
    for (int b : binaries) {
      const double f = rel.x[b] - std::floor(rel.x[b]);
      const double dist = std::min(f, 1.0 - f);
      if (dist > best_frac) {
        best_frac = dist;
        branch_var = b;
      }
    }

    if (branch_var < 0) {
      // Integral: snap and accept.
      Eigen::VectorXd x = rel.x;
      for (int b : binaries) x[b] = std::round(x[b]);
      if (is_feasible(model, x, 1e-6))
        accept_incumbent(objective_value(model, x), x);
      else
        accept_incumbent(rel.objective, rel.x);
      if (decided()) return out;
      continue;
    }

    if ((out.nodes_explored & 0xF) == 1) {
      try_rounding(rel.x);
      if (decided()) return out;
    }

    for (int val = 0; val <= 1; ++val) {
      Node child;
      child.bound = rel.objective;
      child.id = next_id++;
      child.fixings = node.fixings;
      child.fixings.emplace_back(branch_var, val);
      open.push(std::move(child));
    }
    if (decided()) return out;
  }

  if (!out.incumbent_value) {
    out.status = SolveStatus::infeasible;
    out.best_lower_bound = kInf;
    return out;
  }
  out.status = SolveStatus::optimal;
  out.best_lower_bound = *out.incumbent_value;
  return out;
}

}  // namespace qpcert::milp
