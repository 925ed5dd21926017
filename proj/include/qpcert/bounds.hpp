#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "qpcert/ntk.hpp"

namespace qpcert {

enum class NormKind { inf, two };

/// Feature perturbation model: every node in `adversarial` may move within an
/// l_p ball of radius delta around its clean features. For backdoor scenarios
/// the caller includes the targeted test node in `adversarial`.
struct PerturbationModel {
  NormKind norm = NormKind::inf;
  double delta = 0.0;
  std::vector<int> adversarial;
  bool target_in_u = false;
};

/// Element-wise interval [lower, upper]. Entries untouched by the adversary
/// keep lower == upper == clean value.
struct IntervalMatrix {
  Eigen::MatrixXd lower, upper;

  static IntervalMatrix degenerate(const Eigen::MatrixXd& m) {
    return {m, m};
  }
  Eigen::MatrixXd width() const { return upper - lower; }
  void validate() const;
  bool contains(const Eigen::MatrixXd& m, double tol = 0.0) const;
};

/// Worst-case interval for X~ X~^T over all feasible perturbations of the
/// rows in U: X X^T shifted by the Delta bounds (l1-norm cross terms and
/// delta^2 d interaction for p=inf, l2-norm and delta^2 for p=2; the i == j
/// interaction is dropped from the lower bound).
IntervalMatrix delta_bounds(const Eigen::MatrixXd& x, const std::vector<int>& u,
                            double delta, NormKind p);

/// [M lower M^T, M upper M^T]; valid because M is non-negative.
IntervalMatrix sigma_interval_propagate(const Eigen::MatrixXd& m,
                                        const IntervalMatrix& inner);

struct EEdotBounds {
  IntervalMatrix e, edot;
};

/// Interval versions of the arc-cosine layer expectations given an interval
/// on the covariance. Requires a positive lower bound on every diagonal.
EEdotBounds e_edot_bounds(const IntervalMatrix& sigma);

/// Entry-wise interval product (min/max over the four endpoint products).
IntervalMatrix hadamard_interval(const IntervalMatrix& a,
                                 const IntervalMatrix& b);

/// Element-wise bounds on the full NTK under the perturbation model,
/// composed layer by layer along the architecture's recursion. delta = 0
/// collapses to the clean kernel.
IntervalMatrix ntk_bounds(const Architecture& arch, const StructureMatrix& s,
                          const Eigen::MatrixXd& x,
                          const PerturbationModel& pert);

/// Explicit perturbation attaining a Delta bound endpoint at entry (i, j)
/// for linear-activation architectures. `found == false` means the sign
/// conditions of the construction cannot be met (not an error).
struct Witness {
  bool found = false;
  Eigen::MatrixXd x_tilde;
  std::string reason;
};

Witness tightness_witness(const Architecture& arch, const Eigen::MatrixXd& x,
                          const std::vector<int>& u, double delta, NormKind p,
                          int i, int j, bool upper_endpoint);

}  // namespace qpcert
