#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qpcert/bounds.hpp"
#include "qpcert/graph.hpp"
#include "qpcert/milp.hpp"
#include "qpcert/ntk.hpp"
#include "qpcert/svm.hpp"

namespace qpcert {

enum class ScenarioKind { PL, PU, BL, BU };

/// PL/BL draw the adversarial pool from labeled nodes, PU/BU from unlabeled
/// ones; BL/BU additionally hand the targeted test node to the adversary and
/// evaluate inductively (test node removed during training).
struct Scenario {
  ScenarioKind kind = ScenarioKind::PU;
  double p_adv = 0.1;
  double delta = 0.0;  // absolute perturbation radius
  NormKind norm = NormKind::inf;
  std::uint64_t seed = 0;

  bool inductive() const {
    return kind == ScenarioKind::BL || kind == ScenarioKind::BU;
  }
  bool pool_labeled() const {
    return kind == ScenarioKind::PL || kind == ScenarioKind::BL;
  }
};

const char* scenario_kind_name(ScenarioKind k);
ScenarioKind scenario_kind_from(const std::string& name);

/// Kernel interval restricted to what one certification needs: the labeled
/// block and the test node's row.
struct CertKernelInterval {
  IntervalMatrix train;      // m x m
  Eigen::VectorXd row_lower;  // test row, length m
  Eigen::VectorXd row_upper;

  void validate() const;
};

struct BigM {
  Eigen::VectorXd mu, mv;
  int clamped = 0;  // entries clamped up to zero
};

/// Big-M constants making the complementary-slackness linearization exact:
/// per index, the sum of attainable positive contributions to the
/// stationarity row under the kernel interval, shifted by -+1.
BigM big_m(const Eigen::VectorXd& y, const IntervalMatrix& train, double c);

/// The certification MILP: variables alpha, u, v in R^m, s, t binary,
/// Z over ([m] u {t}) x [m]; stationarity, big-M complementarity and the
/// interval envelopes on Z; objective sign_pt * sum_i y_i Z_ti.
milp::Model build_certification_milp(int sign_pt, const Eigen::VectorXd& y,
                                     double c, const CertKernelInterval& q,
                                     const BigM& m);

enum class Verdict { certified, not_certified, undecided };
const char* verdict_name(Verdict v);

struct CertifyOptions {
  double eps_cert = 1e-6;
  double gap_tol = 1e-6;
  long node_limit = 200000;
  double dual_tol = 1e-8;
  bool attack_prepass = true;
  double big_m_scale = 1.0;   // scale factor for the non-cutting check
  std::string dump_dir;       // non-empty: export every model as LP text
  std::string dump_prefix;
};

/// Everything one node's certification consumes. Clean quantities and the
/// interval must come from the same training graph.
struct NodeCertProblem {
  int node = -1;
  Eigen::VectorXd y;       // +-1 labels, length m
  double c = 0.0;
  Eigen::VectorXd alpha;   // clean dual solution
  Eigen::MatrixXd q_train;  // clean labeled block
  Eigen::VectorXd q_row;    // clean test row
  CertKernelInterval interval;
};

struct CertResult {
  int node = -1;
  double clean_margin = 0.0;
  std::vector<double> class_scores;
  double milp_lower_bound = 0.0;
  Verdict verdict = Verdict::undecided;
  milp::SolveStatus status = milp::SolveStatus::optimal;
  long nodes_explored = 0;
  double wall_ms = 0.0;
  std::string error;
};

/// Binary certificate: robust iff the MILP optimum is provably > eps_cert.
CertResult certify_node(const NodeCertProblem& problem,
                        const CertifyOptions& options);

/// One-vs-all problems share the kernel interval; only labels and duals
/// differ per class.
struct MultiClassCertProblem {
  int node = -1;
  std::vector<Eigen::VectorXd> y;      // per class
  std::vector<Eigen::VectorXd> alpha;  // per class
  double c = 0.0;
  Eigen::MatrixXd q_train;
  Eigen::VectorXd q_row;
  CertKernelInterval interval;
};

/// Certified iff the minimized score of the predicted class strictly exceeds
/// every maximized score of the other classes (eps_cert margin each).
CertResult certify_node_multiclass(const MultiClassCertProblem& problem,
                                   const CertifyOptions& options);

struct ScenarioRun {
  std::vector<CertResult> results;  // one per test node, in node order
  std::vector<int> adversarial;     // the sampled set U
  int n_correct = 0;
  int n_certified = 0;
  bool accuracy_defined = false;
  double certified_accuracy = 0.0;
};

/// Full scenario pipeline: samples U, trains the clean model (per training
/// graph for inductive scenarios), computes kernel intervals and certifies
/// every test node. Node-level failures land in the result's error field.
ScenarioRun run_scenario(const Graph& g, const Architecture& arch,
                         const Scenario& scenario, double c,
                         const CertifyOptions& options, int threads = 1);

struct AttackOutcome {
  std::vector<int> flipped;  // test nodes whose prediction flipped
  Eigen::MatrixXd best_x;    // perturbed features of the strongest attempt
  double worst_margin = 0.0;
  long trials = 0;
};

/// Random + coordinate-greedy search over feasible perturbations: samples
/// feature matrices in the adversary's ball, retrains the dual exactly and
/// re-predicts. Any flip it finds on a certified node refutes soundness.
AttackOutcome attack_oracle(const Graph& g, const Architecture& arch,
                            const Scenario& scenario,
                            const std::vector<int>& adversarial, double c,
                            const std::vector<int>& targets, long trials,
                            int greedy_passes = 2);

/// ceil(p_adv * pool size) nodes drawn without replacement from the
/// scenario's attackable pool (minus verified nodes), by the scenario seed.
std::vector<int> sample_adversarial_set(const Graph& g,
                                        const Scenario& scenario);

}  // namespace qpcert
