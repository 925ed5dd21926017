#include "qpcert/ntk.hpp"

#include <cmath>
#include <string>

#include "qpcert/errors.hpp"

namespace qpcert {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kClampSlack = 1e-9;

double clamp_kappa_arg(double z) {
  if (z > 1.0 + kClampSlack || z < -1.0 - kClampSlack)
    fail(ErrorCode::kappa_domain,
         "kappa argument " + std::to_string(z) + " outside [-1, 1]");
  return std::min(1.0, std::max(-1.0, z));
}

}  // namespace

double kappa0(double z) {
  z = clamp_kappa_arg(z);
  return (kPi - std::acos(z)) / kPi;
}

double kappa1(double z) {
  z = clamp_kappa_arg(z);
  return (z * (kPi - std::acos(z)) + std::sqrt(std::max(0.0, 1.0 - z * z))) / kPi;
}

void Architecture::validate() const {
  if (depth < 1) fail(ErrorCode::invalid_parameter, "depth must be >= 1");
  if (kind == ArchKind::appnp) {
    if (depth != 1)
      fail(ErrorCode::invalid_parameter,
           "appnp kernel is defined for depth 1 only");
    if (!(appnp_alpha > 0.0 && appnp_alpha <= 1.0))
      fail(ErrorCode::invalid_parameter, "appnp_alpha must be in (0, 1]");
    if (appnp_khops < 1)
      fail(ErrorCode::invalid_parameter, "appnp_khops must be >= 1");
  }
}

bool Architecture::uses_relu() const {
  return kind != ArchKind::sgc && !linear;
}

StructureMatrix structure_for(const Architecture& arch, const Graph& g) {
  if (arch.kind == ArchKind::mlp) {
    StructureMatrix s;
    s.kind = StructureKind::identity;
    s.s = Eigen::MatrixXd::Identity(g.n, g.n);
    return s;
  }
  StructureMatrix s = normalize(g.adjacency, arch.structure, /*self_loops=*/true);
  if (arch.kind == ArchKind::appnp)
    return ppr_matrix(s, arch.appnp_alpha, arch.appnp_khops);
  return s;
}

namespace {

// E and Edot of a covariance under the ReLU arc-cosine closed forms. The
// linear path keeps E = Sigma, Edot = 1.
void layer_expectations(const Eigen::MatrixXd& sigma, bool relu,
                        Eigen::MatrixXd& e, Eigen::MatrixXd& edot) {
  const int n = static_cast<int>(sigma.rows());
  if (!relu) {
    e = sigma;
    edot = Eigen::MatrixXd::Ones(n, n);
    return;
  }
  Eigen::VectorXd diag = sigma.diagonal();
  for (int i = 0; i < n; ++i)
    if (!(diag[i] > 0.0))
      fail(ErrorCode::singular_covariance,
           "covariance diagonal is not positive at node " + std::to_string(i));
  e.resize(n, n);
  edot.resize(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double s = std::sqrt(diag[i] * diag[j]);
      const double z = sigma(i, j) / s;
      e(i, j) = s * kappa1(z);
      edot(i, j) = kappa0(z);
    }
  }
}

}  // namespace

KernelMatrix ntk(const Architecture& arch, const StructureMatrix& s,
                 const Eigen::MatrixXd& x) {
  arch.validate();
  const int n = static_cast<int>(x.rows());
  if (s.s.rows() != n || s.s.cols() != n)
    fail(ErrorCode::dimension_mismatch, "structure matrix does not match X");
  if (s.s.minCoeff() < 0.0)
    fail(ErrorCode::propagation_invalid, "structure matrix has negative entries");

  const bool relu = arch.uses_relu();
  KernelMatrix km;

  if (arch.kind == ArchKind::appnp) {
    // Q = P E1 P^T + P (Sigma1 .* Edot1) P^T with Sigma1 = X X^T + 1.
    Eigen::MatrixXd sigma1 =
        x * x.transpose() + Eigen::MatrixXd::Ones(n, n);
    Eigen::MatrixXd e1, edot1;
    layer_expectations(sigma1, relu, e1, edot1);
    const Eigen::MatrixXd& p = s.s;
    km.q = p * e1 * p.transpose() +
           p * sigma1.cwiseProduct(edot1) * p.transpose();
    km.sigma.push_back(std::move(sigma1));
    km.e.push_back(std::move(e1));
    km.edot.push_back(std::move(edot1));
    km.q = 0.5 * (km.q + km.q.transpose().eval());
    return km;
  }

  // GCN-family recursion. MLP is the same with S = I and the +1 offset.
  const bool conv = arch.convolutional();
  const Eigen::MatrixXd& sm = s.s;
  auto propagate = [&](const Eigen::MatrixXd& a) -> Eigen::MatrixXd {
    if (!conv) return a;
    return sm * a * sm.transpose();
  };

  Eigen::MatrixXd sigma_k;
  if (arch.kind == ArchKind::mlp)
    sigma_k = x * x.transpose() + Eigen::MatrixXd::Ones(n, n);
  else
    sigma_k = propagate(x * x.transpose());

  Eigen::MatrixXd running;  // accumulated kernel through layer k
  const int depth = arch.depth;
  for (int k = 1; k <= depth + 1; ++k) {
    Eigen::MatrixXd e_k, edot_k;
    const bool last = k == depth + 1;
    if (!last) {
      layer_expectations(sigma_k, relu, e_k, edot_k);
    } else {
      edot_k = Eigen::MatrixXd::Ones(n, n);  // output layer
    }
    if (k == 1) {
      running = sigma_k.cwiseProduct(edot_k);
    } else {
      running = (propagate(running) + sigma_k).cwiseProduct(edot_k);
    }
    km.sigma.push_back(sigma_k);
    if (!last) {
      km.e.push_back(e_k);
      km.edot.push_back(edot_k);
      sigma_k = propagate(e_k);
    }
  }
  km.q = 0.5 * (running + running.transpose().eval());
  return km;
}

Eigen::VectorXd ntk_test_rows(const Architecture& arch,
                              const StructureMatrix& s_full,
                              const Eigen::MatrixXd& x_full,
                              const std::vector<int>& train_indices,
                              int test_index) {
  const int n = static_cast<int>(x_full.rows());
  if (test_index < 0 || test_index >= n)
    fail(ErrorCode::invalid_parameter, "test index out of range");
  for (int i : train_indices)
    if (i < 0 || i >= n)
      fail(ErrorCode::invalid_parameter, "train index out of range");
  const KernelMatrix km = ntk(arch, s_full, x_full);
  Eigen::VectorXd row(static_cast<int>(train_indices.size()));
  for (std::size_t k = 0; k < train_indices.size(); ++k)
    row[static_cast<int>(k)] = km.q(test_index, train_indices[k]);
  return row;
}

}  // namespace qpcert
