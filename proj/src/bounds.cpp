#include "qpcert/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "qpcert/errors.hpp"

namespace qpcert {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
}

void IntervalMatrix::validate() const {
  if (lower.rows() != upper.rows() || lower.cols() != upper.cols())
    fail(ErrorCode::dimension_mismatch, "interval endpoint shapes differ");
  if (((upper - lower).array() < -1e-12).any())
    fail(ErrorCode::invalid_interval, "interval has lower > upper");
}

bool IntervalMatrix::contains(const Eigen::MatrixXd& m, double tol) const {
  return ((m - lower).array() >= -tol).all() &&
         ((upper - m).array() >= -tol).all();
}

IntervalMatrix delta_bounds(const Eigen::MatrixXd& x, const std::vector<int>& u,
                            double delta, NormKind p) {
  const int n = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  if (delta < 0.0) fail(ErrorCode::invalid_parameter, "delta must be >= 0");
  std::vector<std::uint8_t> in_u(n, 0);
  for (int i : u) {
    if (i < 0 || i >= n)
      fail(ErrorCode::invalid_parameter, "adversarial index out of range");
    in_u[i] = 1;
  }
  Eigen::VectorXd norms(n);
  for (int i = 0; i < n; ++i)
    norms[i] = p == NormKind::inf ? x.row(i).lpNorm<1>() : x.row(i).norm();
  const double interaction =
      p == NormKind::inf ? delta * delta * d : delta * delta;

  const Eigen::MatrixXd gram = x * x.transpose();
  IntervalMatrix out;
  out.lower = gram;
  out.upper = gram;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double w = 0.0;
      if (in_u[i]) w += delta * norms[j];
      if (in_u[j]) w += delta * norms[i];
      out.lower(i, j) -= w;
      out.upper(i, j) += w;
      if (in_u[i] && in_u[j]) {
        out.upper(i, j) += interaction;
        if (i != j) out.lower(i, j) -= interaction;
      }
    }
  }
  return out;
}

IntervalMatrix sigma_interval_propagate(const Eigen::MatrixXd& m,
                                        const IntervalMatrix& inner) {
  if (m.minCoeff() < 0.0)
    fail(ErrorCode::propagation_invalid,
         "propagation matrix has a negative entry");
  inner.validate();
  IntervalMatrix out;
  out.lower = m * inner.lower * m.transpose();
  out.upper = m * inner.upper * m.transpose();
  return out;
}

EEdotBounds e_edot_bounds(const IntervalMatrix& sigma) {
  sigma.validate();
  const int n = static_cast<int>(sigma.lower.rows());
  // A non-positive upper bound on a diagonal entry cannot come from any
  // feature assignment; that is malformed input. A non-positive lower bound
  // merely means the adversary might drive the norm to zero: the ratio
  // interval is handled in the s -> 0 limit below.
  for (int i = 0; i < n; ++i)
    if (!(sigma.upper(i, i) > 0.0))
      fail(ErrorCode::diagonal_positivity,
           "covariance upper bound is not positive at node " +
               std::to_string(i));

  EEdotBounds out;
  out.e.lower.resize(n, n);
  out.e.upper.resize(n, n);
  out.edot.lower.resize(n, n);
  out.edot.upper.resize(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double dlo_i = std::max(0.0, sigma.lower(i, i));
      const double dlo_j = std::max(0.0, sigma.lower(j, j));
      const double s_l = std::sqrt(dlo_i * dlo_j);
      const double s_u = std::sqrt(sigma.upper(i, i) * sigma.upper(j, j));
      const double lo = sigma.lower(i, j);
      const double up = sigma.upper(i, j);
      // Ratio interval [lo, up] / [s_l, s_u] (positive denominator), then
      // clamped to the arccos domain. s_l = 0 sends the affected endpoint to
      // the domain boundary, which the clamp realizes.
      double a_l = lo > 0.0 ? lo / s_u : (s_l > 0.0 ? lo / s_l : (lo < 0.0 ? -1.0 : 0.0));
      double a_u = up >= 0.0 ? (s_l > 0.0 ? up / s_l : (up > 0.0 ? 1.0 : 0.0))
                             : up / s_u;
      a_l = std::min(1.0, std::max(-1.0, a_l));
      a_u = std::min(1.0, std::max(-1.0, a_u));
      // Square of the ratio over the clamped interval.
      const double b_u = std::max(a_l * a_l, a_u * a_u);
      const double b_l =
          (a_l <= 0.0 && a_u >= 0.0) ? 0.0 : std::min(a_l * a_l, a_u * a_u);
      const double e_lo =
          s_l / kPi *
          (a_l * (kPi - std::acos(a_l)) + std::sqrt(std::max(0.0, 1.0 - b_u)));
      const double e_up =
          s_u / kPi *
          (a_u * (kPi - std::acos(a_u)) + std::sqrt(std::max(0.0, 1.0 - b_l)));
      out.e.lower(i, j) = std::max(0.0, e_lo);  // kappa1 >= 0
      out.e.upper(i, j) = e_up;
      out.edot.lower(i, j) = (kPi - std::acos(a_l)) / kPi;
      out.edot.upper(i, j) = (kPi - std::acos(a_u)) / kPi;
    }
  }
  return out;
}

IntervalMatrix hadamard_interval(const IntervalMatrix& a,
                                 const IntervalMatrix& b) {
  a.validate();
  b.validate();
  if (a.lower.rows() != b.lower.rows() || a.lower.cols() != b.lower.cols())
    fail(ErrorCode::dimension_mismatch, "hadamard interval shapes differ");
  const int r = static_cast<int>(a.lower.rows());
  const int c = static_cast<int>(a.lower.cols());
  IntervalMatrix out;
  out.lower.resize(r, c);
  out.upper.resize(r, c);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) {
      const double p1 = a.lower(i, j) * b.lower(i, j);
      const double p2 = a.lower(i, j) * b.upper(i, j);
      const double p3 = a.upper(i, j) * b.lower(i, j);
      const double p4 = a.upper(i, j) * b.upper(i, j);
      out.lower(i, j) = std::min(std::min(p1, p2), std::min(p3, p4));
      out.upper(i, j) = std::max(std::max(p1, p2), std::max(p3, p4));
    }
  }
  return out;
}

namespace {

IntervalMatrix interval_add(const IntervalMatrix& a, const IntervalMatrix& b) {
  return {a.lower + b.lower, a.upper + b.upper};
}

EEdotBounds linear_expectations(const IntervalMatrix& sigma) {
  const int n = static_cast<int>(sigma.lower.rows());
  EEdotBounds out;
  out.e = sigma;
  out.edot = IntervalMatrix::degenerate(Eigen::MatrixXd::Ones(n, n));
  return out;
}

}  // namespace

IntervalMatrix ntk_bounds(const Architecture& arch, const StructureMatrix& s,
                          const Eigen::MatrixXd& x,
                          const PerturbationModel& pert) {
  arch.validate();
  const int n = static_cast<int>(x.rows());
  if (s.s.rows() != n || s.s.cols() != n)
    fail(ErrorCode::dimension_mismatch, "structure matrix does not match X");

  const bool relu = arch.uses_relu();
  const IntervalMatrix xx =
      delta_bounds(x, pert.adversarial, pert.delta, pert.norm);
  const IntervalMatrix ones =
      IntervalMatrix::degenerate(Eigen::MatrixXd::Ones(n, n));

  if (arch.kind == ArchKind::appnp) {
    const IntervalMatrix sigma1 = interval_add(xx, ones);
    const EEdotBounds ee =
        relu ? e_edot_bounds(sigma1) : linear_expectations(sigma1);
    const IntervalMatrix inner =
        interval_add(ee.e, hadamard_interval(sigma1, ee.edot));
    return sigma_interval_propagate(s.s, inner);
  }

  const bool conv = arch.convolutional();
  auto propagate = [&](const IntervalMatrix& a) -> IntervalMatrix {
    if (!conv) return a;
    return sigma_interval_propagate(s.s, a);
  };

  IntervalMatrix sigma_k =
      arch.kind == ArchKind::mlp ? interval_add(xx, ones) : propagate(xx);
  IntervalMatrix running;
  for (int k = 1; k <= arch.depth + 1; ++k) {
    const bool last = k == arch.depth + 1;
    EEdotBounds ee;
    if (!last)
      ee = relu ? e_edot_bounds(sigma_k) : linear_expectations(sigma_k);
    const IntervalMatrix& edot_k = last ? ones : ee.edot;
    if (k == 1) {
      running = hadamard_interval(sigma_k, edot_k);
    } else {
      running =
          hadamard_interval(interval_add(propagate(running), sigma_k), edot_k);
    }
    if (!last) sigma_k = propagate(ee.e);
  }
  running.validate();
  return running;
}

namespace {

// Uniform sign of a feature row: +1 if all entries >= 0, -1 if all <= 0
// (all-zero rows count as +1), nullopt for mixed signs.
std::optional<int> uniform_sign(const Eigen::VectorXd& v) {
  bool has_pos = false, has_neg = false;
  for (int k = 0; k < v.size(); ++k) {
    if (v[k] > 0.0) has_pos = true;
    if (v[k] < 0.0) has_neg = true;
  }
  if (has_pos && has_neg) return std::nullopt;
  return has_neg ? -1 : 1;
}

}  // namespace

Witness tightness_witness(const Architecture& arch, const Eigen::MatrixXd& x,
                          const std::vector<int>& u, double delta, NormKind p,
                          int i, int j, bool upper_endpoint) {
  if (arch.uses_relu())
    fail(ErrorCode::invalid_parameter,
         "tightness witness applies to linear-activation architectures");
  const int n = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  if (i < 0 || i >= n || j < 0 || j >= n)
    fail(ErrorCode::invalid_parameter, "witness entry out of range");

  Witness w;
  w.x_tilde = x;
  if (delta == 0.0) {
    w.found = true;  // the zero perturbation attains the degenerate bound
    return w;
  }

  std::vector<std::uint8_t> in_u(n, 0);
  for (int a : u) in_u[a] = 1;
  const bool i_adv = in_u[i];
  const bool j_adv = in_u[j];
  if (!i_adv && !j_adv) {
    w.found = true;  // the entry is untouched; zero perturbation attains it
    return w;
  }

  if (i == j) {
    if (!upper_endpoint) {
      w.reason = "diagonal lower bound drops the interaction term and is not "
                 "attainable for delta > 0";
      return w;
    }
    Eigen::VectorXd gamma(d);
    if (p == NormKind::inf) {
      const auto s = uniform_sign(x.row(i));
      if (!s) {
        w.reason = "feature row has mixed signs";
        return w;
      }
      gamma = delta * static_cast<double>(*s) * Eigen::VectorXd::Ones(d);
    } else {
      const double nrm = x.row(i).norm();
      gamma = nrm > 0.0 ? Eigen::VectorXd(delta * x.row(i).transpose() / nrm)
                        : Eigen::VectorXd(Eigen::VectorXd::Zero(d));
      if (nrm == 0.0) {
        w.reason = "zero feature row; diagonal upper needs a direction";
        return w;
      }
    }
    w.x_tilde.row(i) += gamma.transpose();
    w.found = true;
    return w;
  }

  const double want = upper_endpoint ? 1.0 : -1.0;
  Eigen::VectorXd gamma_i = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd gamma_j = Eigen::VectorXd::Zero(d);

  if (p == NormKind::inf) {
    // Gammas are +-delta * 1_d; each cross term needs a sign-definite
    // partner row and, when both ends are adversarial, the interaction
    // fixes the relative sign.
    std::optional<int> c_i, c_j;
    if (i_adv) {
      const auto s = uniform_sign(x.row(j));
      if (!s) {
        w.reason = "feature row of the partner node has mixed signs";
        return w;
      }
      c_i = static_cast<int>(want) * *s;
    }
    if (j_adv) {
      const auto s = uniform_sign(x.row(i));
      if (!s) {
        w.reason = "feature row of the partner node has mixed signs";
        return w;
      }
      c_j = static_cast<int>(want) * *s;
    }
    if (i_adv && j_adv) {
      if (static_cast<double>(*c_i * *c_j) != want) {
        w.reason = "interaction sign conflicts with the cross-term signs";
        return w;
      }
    }
    if (c_i) gamma_i = delta * static_cast<double>(*c_i) * Eigen::VectorXd::Ones(d);
    if (c_j) gamma_j = delta * static_cast<double>(*c_j) * Eigen::VectorXd::Ones(d);
  } else {
    // Gammas are +-delta * x_partner / ||x_partner||; the interaction needs
    // the two feature rows to be (anti)parallel when both are adversarial.
    if (i_adv && x.row(j).norm() > 0.0)
      gamma_i = want * delta * x.row(j).transpose() / x.row(j).norm();
    if (j_adv && x.row(i).norm() > 0.0)
      gamma_j = want * delta * x.row(i).transpose() / x.row(i).norm();
    if (i_adv && j_adv) {
      const double ni = x.row(i).norm(), nj = x.row(j).norm();
      if (ni > 0.0 && nj > 0.0) {
        const double cosine = x.row(i).dot(x.row(j)) / (ni * nj);
        if (std::abs(std::abs(cosine) - 1.0) > 1e-12) {
          w.reason = "feature rows are not linearly dependent";
          return w;
        }
        const double inter = gamma_i.dot(gamma_j);
        const double target = want * delta * delta;
        if (std::abs(inter - target) > 1e-9 * delta * delta) {
          w.reason = "interaction sign conflicts with the cross-term signs";
          return w;
        }
      }
    }
  }

  if (i_adv) w.x_tilde.row(i) += gamma_i.transpose();
  if (j_adv) w.x_tilde.row(j) += gamma_j.transpose();
  w.found = true;
  return w;
}

}  // namespace qpcert
