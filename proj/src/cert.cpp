#include "qpcert/cert.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "qpcert/errors.hpp"

namespace qpcert {

namespace {

// Variable layout of the certification MILP. Row index m stands for the
// test node's Z row.
struct Layout {
  int m;
  int a(int i) const { return i; }
  int u(int i) const { return m + i; }
  int v(int i) const { return 2 * m + i; }
  int s(int i) const { return 3 * m + i; }
  int t(int i) const { return 4 * m + i; }
  int z(int i, int j) const { return 5 * m + i * m + j; }
  int nvars() const { return 5 * m + (m + 1) * m; }
};

}  // namespace

const char* scenario_kind_name(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::PL: return "PL";
    case ScenarioKind::PU: return "PU";
    case ScenarioKind::BL: return "BL";
    case ScenarioKind::BU: return "BU";
  }
  return "?";
}

ScenarioKind scenario_kind_from(const std::string& name) {
  if (name == "PL") return ScenarioKind::PL;
  if (name == "PU") return ScenarioKind::PU;
  if (name == "BL") return ScenarioKind::BL;
  if (name == "BU") return ScenarioKind::BU;
  fail(ErrorCode::config_error, "unknown scenario kind: " + name);
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::certified: return "certified";
    case Verdict::not_certified: return "not-certified";
    case Verdict::undecided: return "undecided-node-limit";
  }
  return "?";
}

void CertKernelInterval::validate() const {
  train.validate();
  if (train.lower.rows() != train.lower.cols())
    fail(ErrorCode::invalid_interval, "train block is not square");
  if (row_lower.size() != train.lower.rows() ||
      row_upper.size() != train.lower.rows())
    fail(ErrorCode::invalid_interval, "test row length != m");
  if (((row_upper - row_lower).array() < -1e-12).any())
    fail(ErrorCode::invalid_interval, "test row has lower > upper");
}

BigM big_m(const Eigen::VectorXd& y, const IntervalMatrix& train, double c) {
  train.validate();
  const int m = static_cast<int>(y.size());
  if (train.lower.rows() != m)
    fail(ErrorCode::dimension_mismatch, "big-M inputs disagree in size");
  BigM out;
  out.mu.resize(m);
  out.mv.resize(m);
  for (int i = 0; i < m; ++i) {
    double mu = -1.0, mv = 1.0;
    for (int j = 0; j < m; ++j) {
      const bool same = y[i] * y[j] > 0.0;
      const double up = train.upper(i, j);
      const double lo = train.lower(i, j);
      if (same) {
        if (up >= 0.0) mu += c * up;
        if (lo <= 0.0) mv -= c * lo;
      } else {
        if (lo <= 0.0) mu -= c * lo;
        if (up >= 0.0) mv += c * up;
      }
    }
    if (mu < 0.0) {
      mu = 0.0;
      ++out.clamped;
    }
    if (mv < 0.0) {
      mv = 0.0;
      ++out.clamped;
    }
    out.mu[i] = mu;
    out.mv[i] = mv;
  }
  return out;
}

milp::Model build_certification_milp(int sign_pt, const Eigen::VectorXd& y,
                                     double c, const CertKernelInterval& q,
                                     const BigM& m) {
  if (sign_pt != 1 && sign_pt != -1)
    fail(ErrorCode::invalid_parameter, "sign_pt must be +-1");
  q.validate();
  const int mm = static_cast<int>(y.size());
  if (q.train.lower.rows() != mm || m.mu.size() != mm)
    fail(ErrorCode::dimension_mismatch, "certification inputs disagree in size");
  Layout lay{mm};
  milp::Model model;
  for (int i = 0; i < mm; ++i)
    model.add_var("a" + std::to_string(i), 0.0, c);
  for (int i = 0; i < mm; ++i)
    model.add_var("u" + std::to_string(i), 0.0, m.mu[i]);
  for (int i = 0; i < mm; ++i)
    model.add_var("v" + std::to_string(i), 0.0, m.mv[i]);
  for (int i = 0; i < mm; ++i)
    model.add_var("s" + std::to_string(i), 0.0, 1.0, /*is_binary=*/true);
  for (int i = 0; i < mm; ++i)
    model.add_var("t" + std::to_string(i), 0.0, 1.0, /*is_binary=*/true);
  auto bound_at = [&](int i, int j, bool upper) {
    if (i < mm) return upper ? q.train.upper(i, j) : q.train.lower(i, j);
    return upper ? q.row_upper[j] : q.row_lower[j];
  };
  for (int i = 0; i <= mm; ++i) {
    const std::string pre = i < mm ? "Z" + std::to_string(i) : "Zt";
    for (int j = 0; j < mm; ++j) {
      const double lo = bound_at(i, j, false);
      const double up = bound_at(i, j, true);
      model.add_var(pre + "_" + std::to_string(j), std::min(0.0, c * lo),
                    std::max(0.0, c * up));
    }
  }

  for (int i = 0; i <= mm; ++i) {
    const std::string tag = i < mm ? std::to_string(i) : "t";
    for (int j = 0; j < mm; ++j) {
      const std::string sj = std::to_string(j);
      model.add_constraint(
          "zu" + tag + "_" + sj,
          {{lay.z(i, j), 1.0}, {lay.a(j), -bound_at(i, j, true)}},
          milp::Relation::le, 0.0);
      model.add_constraint(
          "zl" + tag + "_" + sj,
          {{lay.z(i, j), 1.0}, {lay.a(j), -bound_at(i, j, false)}},
          milp::Relation::ge, 0.0);
    }
  }
  for (int i = 0; i < mm; ++i) {
    std::vector<milp::LinTerm> terms;
    for (int j = 0; j < mm; ++j)
      terms.push_back({lay.z(i, j), y[i] * y[j]});
    terms.push_back({lay.u(i), -1.0});
    terms.push_back({lay.v(i), 1.0});
    model.add_constraint("st" + std::to_string(i), std::move(terms),
                         milp::Relation::eq, 1.0);
    model.add_constraint("mu" + std::to_string(i),
                         {{lay.u(i), 1.0}, {lay.s(i), -m.mu[i]}},
                         milp::Relation::le, 0.0);
    model.add_constraint("su" + std::to_string(i),
                         {{lay.a(i), 1.0}, {lay.s(i), c}}, milp::Relation::le,
                         c);
    model.add_constraint("mv" + std::to_string(i),
                         {{lay.v(i), 1.0}, {lay.t(i), -m.mv[i]}},
                         milp::Relation::le, 0.0);
    model.add_constraint("tv" + std::to_string(i),
                         {{lay.t(i), c}, {lay.a(i), -1.0}}, milp::Relation::le,
                         0.0);
  }
  for (int j = 0; j < mm; ++j)
    model.set_objective(lay.z(mm, j), sign_pt * y[j]);
  return model;
}

namespace {

// Assignment of every MILP variable implied by a dual point alpha at a
// kernel (block, row) inside the interval. Any KKT point of the dual at that
// kernel satisfies all constraints.
Eigen::VectorXd kkt_assignment(const Layout& lay, const Eigen::VectorXd& y,
                               double c, const Eigen::VectorXd& alpha_in,
                               const Eigen::MatrixXd& block,
                               const Eigen::VectorXd& row) {
  const int m = lay.m;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(lay.nvars());
  Eigen::VectorXd alpha = alpha_in;
  for (int i = 0; i < m; ++i) {
    if (alpha[i] < 1e-9) alpha[i] = 0.0;
    if (alpha[i] > c - 1e-9) alpha[i] = c;
  }
  const Eigen::VectorXd qya = block * y.cwiseProduct(alpha);
  for (int i = 0; i < m; ++i) {
    const double g = y[i] * qya[i] - 1.0;
    x[lay.a(i)] = alpha[i];
    if (alpha[i] == 0.0) {
      const double u = std::max(g, 0.0);
      x[lay.u(i)] = u;
      x[lay.s(i)] = u > 0.0 ? 1.0 : 0.0;
    } else if (alpha[i] == c) {
      const double v = std::max(-g, 0.0);
      x[lay.v(i)] = v;
      x[lay.t(i)] = v > 0.0 ? 1.0 : 0.0;
    }
    // Interior alphas keep u = v = 0; the stationarity residual is within
    // the dual solver tolerance.
  }
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) x[lay.z(i, j)] = alpha[j] * block(i, j);
  for (int j = 0; j < m; ++j) x[lay.z(m, j)] = alpha[j] * row[j];
  return x;
}

// Test-row kernel minimizing the objective for a non-negative alpha.
Eigen::VectorXd worst_row(int sign_pt, const Eigen::VectorXd& y,
                          const CertKernelInterval& q) {
  const int m = static_cast<int>(y.size());
  Eigen::VectorXd row(m);
  for (int j = 0; j < m; ++j)
    row[j] = sign_pt * y[j] > 0.0 ? q.row_lower[j] : q.row_upper[j];
  return row;
}

struct SolveSetup {
  milp::Model model;
  std::optional<Eigen::VectorXd> best_incumbent;
  double best_value = std::numeric_limits<double>::infinity();
};

SolveSetup prepare_solve(int sign_pt, const Eigen::VectorXd& y, double c,
                         const Eigen::VectorXd& alpha,
                         const Eigen::MatrixXd& q_train,
                         const Eigen::VectorXd& q_row,
                         const CertKernelInterval& interval,
                         const CertifyOptions& options) {
  const int m = static_cast<int>(y.size());
  Layout lay{m};
  BigM bm = big_m(y, interval.train, c);
  if (options.big_m_scale != 1.0) {
    bm.mu *= options.big_m_scale;
    bm.mv *= options.big_m_scale;
  }
  SolveSetup setup;
  setup.model = build_certification_milp(sign_pt, y, c, interval, bm);

  auto consider = [&](const Eigen::VectorXd& point) {
    if (!milp::is_feasible(setup.model, point, 1e-6)) return false;
    const double value = milp::objective_value(setup.model, point);
    if (value < setup.best_value) {
      setup.best_value = value;
      setup.best_incumbent = point;
    }
    return true;
  };

  // The clean kernel with its KKT-feasible dual witnesses optimum <= |p_t|.
  if (!consider(kkt_assignment(lay, y, c, alpha, q_train, q_row)))
    fail(ErrorCode::solver_failure,
         "clean KKT point violates the certification program");

  if (options.attack_prepass) {
    // Clean training block, adversarial test row.
    consider(kkt_assignment(lay, y, c, alpha, q_train,
                            worst_row(sign_pt, y, interval)));
    // Corner kernels of the interval: weaken same-class entries, strengthen
    // cross-class ones (and the mirror image), re-solving the dual exactly.
    for (int pattern = 0; pattern < 2; ++pattern) {
      Eigen::MatrixXd corner(m, m);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          const bool same = y[i] * y[j] > 0.0;
          const bool low = pattern == 0 ? same : !same;
          corner(i, j) = low ? interval.train.lower(i, j)
                             : interval.train.upper(i, j);
        }
      try {
        const DualSolution sol = detail::box_qp_stationary(
            corner, y, c, options.dual_tol, 4000);
        consider(kkt_assignment(lay, y, c, sol.alpha, corner,
                                worst_row(sign_pt, y, interval)));
      } catch (const Error&) {
        // Non-converged heuristic solves are simply skipped.
      }
    }
  }
  return setup;
}

}  // namespace

CertResult certify_node(const NodeCertProblem& problem,
                        const CertifyOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  problem.interval.validate();
  const int m = static_cast<int>(problem.y.size());
  if (problem.alpha.size() != m || problem.q_row.size() != m)
    fail(ErrorCode::dimension_mismatch, "certification problem sizes disagree");

  CertResult res;
  res.node = problem.node;
  const double margin =
      problem.q_row.dot(problem.y.cwiseProduct(problem.alpha));
  res.clean_margin = margin;
  const int sign_pt = margin >= 0.0 ? 1 : -1;

  SolveSetup setup =
      prepare_solve(sign_pt, problem.y, problem.c, problem.alpha,
                    problem.q_train, problem.q_row, problem.interval, options);
  if (!options.dump_dir.empty())
    milp::export_lp(setup.model, options.dump_dir + "/" + options.dump_prefix +
                                     "node" + std::to_string(problem.node) +
                                     ".lp");

  milp::SolveOptions sopts;
  sopts.decide_threshold = options.eps_cert;
  sopts.gap_tol = options.gap_tol;
  sopts.node_limit = options.node_limit;
  sopts.initial_incumbent = setup.best_incumbent;
  const milp::SolveOutcome outcome = milp::branch_and_bound(setup.model, sopts);

  res.status = outcome.status;
  res.nodes_explored = outcome.nodes_explored;
  res.milp_lower_bound = outcome.best_lower_bound;
  switch (outcome.status) {
    case milp::SolveStatus::lower_bound_above_threshold:
      res.verdict = Verdict::certified;
      break;
    case milp::SolveStatus::incumbent_below_threshold:
      res.verdict = Verdict::not_certified;
      break;
    case milp::SolveStatus::optimal:
      res.verdict = outcome.incumbent_value &&
                            *outcome.incumbent_value > options.eps_cert
                        ? Verdict::certified
                        : Verdict::not_certified;
      break;
    case milp::SolveStatus::node_limit:
      res.verdict = Verdict::undecided;
      break;
    case milp::SolveStatus::infeasible:
      fail(ErrorCode::solver_failure,
           "certification MILP reported infeasible despite a feasible point");
  }
  // The clean point is feasible, so no valid lower bound may exceed it.
  if (res.verdict == Verdict::certified &&
      res.milp_lower_bound > std::abs(margin) + 1e-6)
    fail(ErrorCode::solver_failure,
         "certification bound exceeds the clean objective");
  res.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  return res;
}

CertResult certify_node_multiclass(const MultiClassCertProblem& problem,
                                   const CertifyOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  problem.interval.validate();
  const int k = static_cast<int>(problem.y.size());
  if (k < 2 || problem.alpha.size() != problem.y.size())
    fail(ErrorCode::invalid_parameter, "multiclass problem needs K >= 2 duals");

  CertResult res;
  res.node = problem.node;
  res.class_scores.resize(k);
  int best = 0;
  bool tied = false;
  for (int c = 0; c < k; ++c) {
    res.class_scores[c] =
        problem.q_row.dot(problem.y[c].cwiseProduct(problem.alpha[c]));
    if (c > 0 && res.class_scores[c] > res.class_scores[best]) best = c;
  }
  for (int c = 0; c < k; ++c)
    if (c != best && res.class_scores[c] == res.class_scores[best]) tied = true;
  res.clean_margin = res.class_scores[best];
  if (tied) {
    res.verdict = Verdict::not_certified;  // clean argmax tie: conservative
    return res;
  }

  // Upper bounds on every other class's attainable score: minus the lower
  // bound of the sign-flipped program.
  double worst_other = -std::numeric_limits<double>::infinity();
  long nodes = 0;
  for (int c = 0; c < k; ++c) {
    if (c == best) continue;
    SolveSetup setup =
        prepare_solve(-1, problem.y[c], problem.c, problem.alpha[c],
                      problem.q_train, problem.q_row, problem.interval,
                      options);
    milp::SolveOptions sopts;
    sopts.gap_tol = options.gap_tol;
    sopts.node_limit = options.node_limit;
    sopts.initial_incumbent = setup.best_incumbent;
    const milp::SolveOutcome outcome =
        milp::branch_and_bound(setup.model, sopts);
    nodes += outcome.nodes_explored;
    double lb = outcome.best_lower_bound;
    if (outcome.status == milp::SolveStatus::optimal)
      lb = *outcome.incumbent_value - options.gap_tol;
    else if (outcome.status != milp::SolveStatus::node_limit)
      fail(ErrorCode::solver_failure, "unexpected status for class program");
    worst_other = std::max(worst_other, -lb);
  }

  SolveSetup setup =
      prepare_solve(1, problem.y[best], problem.c, problem.alpha[best],
                    problem.q_train, problem.q_row, problem.interval, options);
  milp::SolveOptions sopts;
  sopts.decide_threshold = worst_other + options.eps_cert;
  sopts.gap_tol = options.gap_tol;
  sopts.node_limit = options.node_limit;
  sopts.initial_incumbent = setup.best_incumbent;
  const milp::SolveOutcome outcome = milp::branch_and_bound(setup.model, sopts);
  res.status = outcome.status;
  res.nodes_explored = nodes + outcome.nodes_explored;
  res.milp_lower_bound = outcome.best_lower_bound;
  switch (outcome.status) {
    case milp::SolveStatus::lower_bound_above_threshold:
      res.verdict = Verdict::certified;
      break;
    case milp::SolveStatus::optimal:
      res.verdict = outcome.incumbent_value &&
                            *outcome.incumbent_value >
                                worst_other + options.eps_cert
                        ? Verdict::certified
                        : Verdict::not_certified;
      break;
    case milp::SolveStatus::incumbent_below_threshold:
      res.verdict = Verdict::not_certified;
      break;
    case milp::SolveStatus::node_limit:
      res.verdict = Verdict::undecided;
      break;
    case milp::SolveStatus::infeasible:
      fail(ErrorCode::solver_failure,
           "certification MILP reported infeasible despite a feasible point");
  }
  res.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  return res;
}

}  // namespace qpcert
