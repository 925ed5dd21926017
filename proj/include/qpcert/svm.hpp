#pragma once

#include <Eigen/Dense>
#include <vector>

namespace qpcert {

struct DualSolution {
  Eigen::VectorXd alpha;  // in [0, C]
  double objective = 0.0;
  double kkt_residual = 0.0;
  int sweeps = 0;
};

/// One-vs-all (or single binary) kernel SVM without bias: per class c the
/// labels are y_i = +1 iff label_i == c, and the prediction for a test row is
/// sum_i y_i alpha_i Q_ti.
struct TrainedModel {
  std::vector<Eigen::VectorXd> alpha;  // one per classifier
  std::vector<Eigen::VectorXd> y;      // +-1 labels per classifier
  double c = 0.0;
  int num_classes = 0;  // 0 for the plain binary path
  bool binary() const { return num_classes == 0; }
};

/// Minimizes -sum alpha_i + 1/2 sum y_i y_j alpha_i alpha_j Q_ij over the box
/// [0, C]^m by cyclic coordinate minimization (no equality constraint exists
/// because the SVM carries no bias). Converges when the projected-gradient
/// residual drops below tol. max_sweeps = 0 picks the default cap.
DualSolution solve_dual(const Eigen::MatrixXd& q, const Eigen::VectorXd& y,
                        double c, double tol = 1e-8, long max_sweeps = 0);

/// Margin of a test row: sum_i y_i alpha_i q_row_i.
double predict_margin(const Eigen::VectorXd& alpha, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& q_row);

Eigen::VectorXd class_scores(const TrainedModel& model,
                             const Eigen::VectorXd& q_row);

/// Argmax class; ties break to the lowest class index and set *tied.
int predict_class(const TrainedModel& model, const Eigen::VectorXd& q_row,
                  bool* tied = nullptr);

TrainedModel train_binary(const Eigen::MatrixXd& q, const Eigen::VectorXd& y,
                          double c, double tol = 1e-8);

TrainedModel train_one_vs_all(const Eigen::MatrixXd& q,
                              const Eigen::VectorXi& labels, int num_classes,
                              double c, double tol = 1e-8);

namespace detail {
/// Coordinate descent without the PSD precondition: returns a box-feasible
/// stationary point of the (possibly indefinite) quadratic. Every KKT point
/// of the dual at any kernel inside an interval is feasible for the
/// certification program, so this backs the attack-style incumbent search.
DualSolution box_qp_stationary(const Eigen::MatrixXd& q,
                               const Eigen::VectorXd& y, double c, double tol,
                               long max_sweeps);

/// Non-throwing variant for search loops: always returns the final iterate
/// together with its residual and a convergence flag.
struct BoxQpSearch {
  Eigen::VectorXd alpha;
  double residual = 0.0;
  bool converged = false;
};
BoxQpSearch box_qp_search(const Eigen::MatrixXd& q, const Eigen::VectorXd& y,
                          double c, double tol, long max_sweeps);
}  // namespace detail

}  // namespace qpcert
