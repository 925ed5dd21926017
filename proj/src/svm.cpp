#include "qpcert/svm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qpcert/errors.hpp"

namespace qpcert {

namespace {

double projected_gradient_residual(const Eigen::VectorXd& alpha,
                                   const Eigen::VectorXd& grad, double c) {
  double r = 0.0;
  for (int i = 0; i < alpha.size(); ++i) {
    double g = grad[i];
    if (alpha[i] <= 0.0)
      g = std::min(g, 0.0);
    else if (alpha[i] >= c)
      g = std::max(g, 0.0);
    r = std::max(r, std::abs(g));
  }
  return r;
}

double dual_objective(const Eigen::MatrixXd& q, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& alpha) {
  const Eigen::VectorXd ya = y.cwiseProduct(alpha);
  return -alpha.sum() + 0.5 * ya.dot(q * ya);
}

}  // namespace

namespace detail {

BoxQpSearch box_qp_search(const Eigen::MatrixXd& q, const Eigen::VectorXd& y,
                          double c, double tol, long max_sweeps) {
  const int m = static_cast<int>(y.size());
  if (q.rows() != m || q.cols() != m)
    fail(ErrorCode::dimension_mismatch, "kernel block does not match labels");
  if (!(c > 0.0)) fail(ErrorCode::invalid_parameter, "C must be positive");
  if (max_sweeps <= 0)
    max_sweeps = std::max<long>(1000, 1000000 / std::max(1, m));

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(m);
  // grad_i = y_i * (Q (y .* alpha))_i - 1, maintained incrementally.
  Eigen::VectorXd qya = Eigen::VectorXd::Zero(m);  // Q (y .* alpha)
  double prev_obj = 0.0;                           // objective at alpha = 0
  BoxQpSearch out;
  for (long sweep = 0; sweep < max_sweeps; ++sweep) {
    for (int i = 0; i < m; ++i) {
      const double g = y[i] * qya[i] - 1.0;
      const double h = q(i, i);
      double target;
      if (h > 1e-14) {
        target = alpha[i] - g / h;
      } else {
        // Flat or concave coordinate slice: optimum sits at a box end.
        target = g > 0.0 ? 0.0 : c;
      }
      target = std::min(c, std::max(0.0, target));
      const double step = target - alpha[i];
      if (step != 0.0) {
        alpha[i] = target;
        qya += q.col(i) * (y[i] * step);
      }
    }
    Eigen::VectorXd grad = y.cwiseProduct(qya) - Eigen::VectorXd::Ones(m);
    out.residual = projected_gradient_residual(alpha, grad, c);
    if (sweep == 0) prev_obj = dual_objective(q, y, alpha);
    if (out.residual <= tol) {
      out.alpha = alpha;
      out.converged = true;
      return out;
    }
    // Exact coordinate minimization never increases the objective.
    if ((sweep & 0xF) == 0xF) {
      const double obj = dual_objective(q, y, alpha);
      if (obj > prev_obj + 1e-7 * (1.0 + std::abs(prev_obj)))
        fail(ErrorCode::non_convergence, "dual objective increased");
      prev_obj = obj;
    }
  }
  out.alpha = alpha;
  out.converged = false;
  return out;
}

DualSolution box_qp_stationary(const Eigen::MatrixXd& q,
                               const Eigen::VectorXd& y, double c, double tol,
                               long max_sweeps) {
  const BoxQpSearch s = box_qp_search(q, y, c, tol, max_sweeps);
  if (!s.converged)
    fail(ErrorCode::non_convergence,
         "dual solver hit the sweep cap with residual " +
             std::to_string(s.residual));
  DualSolution out;
  out.alpha = s.alpha;
  out.objective = dual_objective(q, y, s.alpha);
  out.kkt_residual = s.residual;
  return out;
}

}  // namespace detail

DualSolution solve_dual(const Eigen::MatrixXd& q, const Eigen::VectorXd& y,
                        double c, double tol, long max_sweeps) {
  const int m = static_cast<int>(y.size());
  if (q.rows() != m || q.cols() != m)
    fail(ErrorCode::dimension_mismatch, "kernel block does not match labels");
  if ((q - q.transpose()).cwiseAbs().maxCoeff() > 1e-8 * (1.0 + q.cwiseAbs().maxCoeff()))
    fail(ErrorCode::invalid_parameter, "kernel block is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q, Eigen::EigenvaluesOnly);
  const double scale = std::max(1.0, q.trace() / std::max(1, m));
  if (es.eigenvalues().minCoeff() < -1e-8 * scale)
    fail(ErrorCode::indefinite_kernel,
         "kernel block has eigenvalue " +
             std::to_string(es.eigenvalues().minCoeff()) +
             " below the PSD tolerance");
  return detail::box_qp_stationary(q, y, c, tol, max_sweeps);
}

double predict_margin(const Eigen::VectorXd& alpha, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& q_row) {
  if (alpha.size() != y.size() || q_row.size() != y.size())
    fail(ErrorCode::dimension_mismatch, "margin inputs disagree in length");
  return q_row.dot(y.cwiseProduct(alpha));
}

Eigen::VectorXd class_scores(const TrainedModel& model,
                             const Eigen::VectorXd& q_row) {
  Eigen::VectorXd scores(static_cast<int>(model.alpha.size()));
  for (std::size_t c = 0; c < model.alpha.size(); ++c)
    scores[static_cast<int>(c)] =
        predict_margin(model.alpha[c], model.y[c], q_row);
  return scores;
}

int predict_class(const TrainedModel& model, const Eigen::VectorXd& q_row,
                  bool* tied) {
  const Eigen::VectorXd scores = class_scores(model, q_row);
  int best = 0;
  for (int c = 1; c < scores.size(); ++c)
    if (scores[c] > scores[best]) best = c;
  if (tied) {
    *tied = false;
    for (int c = 0; c < scores.size(); ++c)
      if (c != best && scores[c] == scores[best]) *tied = true;
  }
  return best;
}

TrainedModel train_binary(const Eigen::MatrixXd& q, const Eigen::VectorXd& y,
                          double c, double tol) {
  TrainedModel model;
  model.c = c;
  model.num_classes = 0;
  model.alpha.push_back(solve_dual(q, y, c, tol).alpha);
  model.y.push_back(y);
  return model;
}

TrainedModel train_one_vs_all(const Eigen::MatrixXd& q,
                              const Eigen::VectorXi& labels, int num_classes,
                              double c, double tol) {
  if (num_classes < 2)
    fail(ErrorCode::invalid_parameter, "one-vs-all needs K >= 2");
  const int m = static_cast<int>(labels.size());
  TrainedModel model;
  model.c = c;
  model.num_classes = num_classes;
  for (int cls = 0; cls < num_classes; ++cls) {
    int count = 0;
    Eigen::VectorXd y(m);
    for (int i = 0; i < m; ++i) {
      y[i] = labels[i] == cls ? 1.0 : -1.0;
      if (labels[i] == cls) ++count;
    }
    if (count == 0 || count == m)
      fail(ErrorCode::degenerate_class,
           "class " + std::to_string(cls) +
               " is absent (or the only one) in the training labels");
    model.alpha.push_back(solve_dual(q, y, c, tol).alpha);
    model.y.push_back(std::move(y));
  }
  return model;
}

}  // namespace qpcert
