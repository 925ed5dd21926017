#pragma once

#include <Eigen/Dense>
#include <vector>

#include "qpcert/graph.hpp"

namespace qpcert {

enum class ArchKind { mlp, gcn, sgc, appnp };

struct Architecture {
  ArchKind kind = ArchKind::gcn;
  int depth = 1;        // number of hidden layers L
  bool linear = false;  // linear activation variant; sgc is inherently linear
  double appnp_alpha = 0.1;
  int appnp_khops = 10;
  StructureKind structure = StructureKind::row_norm;

  void validate() const;
  bool uses_relu() const;
  /// True when the propagation operator is applied around each layer (gcn,
  /// sgc) rather than once on the outside (appnp) or not at all (mlp).
  bool convolutional() const { return kind == ArchKind::gcn || kind == ArchKind::sgc; }
};

/// Infinite-width tangent kernel of the network plus the per-layer
/// covariance/expectation matrices the bound propagation re-uses.
struct KernelMatrix {
  Eigen::MatrixXd q;
  std::vector<Eigen::MatrixXd> sigma;  // Sigma_1 .. Sigma_{L+1}
  std::vector<Eigen::MatrixXd> e;      // E_1 .. E_L
  std::vector<Eigen::MatrixXd> edot;   // Edot_1 .. Edot_L
};

/// kappa0(z) = (pi - arccos z)/pi. Arguments within 1e-9 of [-1,1] are
/// clamped; anything further out raises a domain error.
double kappa0(double z);
/// kappa1(z) = (z (pi - arccos z) + sqrt(1 - z^2))/pi.
double kappa1(double z);

/// Closed-form NTK of the architecture on (S, X).
KernelMatrix ntk(const Architecture& arch, const StructureMatrix& s,
                 const Eigen::MatrixXd& x);

/// Kernel row between a test node and the given training nodes, consistent
/// with ntk() on the full matrix. For inductive use, pass the structure of
/// the graph with the test node attached.
Eigen::VectorXd ntk_test_rows(const Architecture& arch,
                              const StructureMatrix& s_full,
                              const Eigen::MatrixXd& x_full,
                              const std::vector<int>& train_indices,
                              int test_index);

/// Builds the propagation operator the architecture expects (identity for
/// mlp, normalized adjacency for gcn/sgc, ppr matrix for appnp).
StructureMatrix structure_for(const Architecture& arch, const Graph& g);

}  // namespace qpcert
