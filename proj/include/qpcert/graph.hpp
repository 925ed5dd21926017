#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace qpcert {

/// Undirected attributed graph with a labeled/verified/test node partition.
/// After split(), labeled nodes occupy the index prefix [0, m); everything
/// downstream (kernel blocks, dual variables) relies on that ordering.
struct Graph {
  int n = 0;
  int d = 0;
  Eigen::MatrixXd adjacency;  // n x n symmetric 0/1, zero diagonal
  Eigen::MatrixXd features;   // n x d
  Eigen::VectorXi labels;     // entries in {0..K-1}, -1 for unknown
  std::vector<std::uint8_t> labeled_mask;
  std::vector<std::uint8_t> verified_mask;
  std::vector<std::uint8_t> test_mask;

  int num_labeled() const;
  int num_classes() const;
  std::vector<int> labeled_indices() const;
  std::vector<int> unlabeled_indices() const;

  /// Checks the structural invariants (symmetry, zero diagonal, mask sizes,
  /// labeled prefix). Throws Error on violation.
  void validate() const;

  /// Copy of the graph with node `v` removed (rows/columns dropped, indices
  /// above v shifted down). Used for inductive evaluation.
  Graph without_node(int v) const;
};

enum class StructureKind { row_norm, sym_norm, identity, ppr };

/// Non-negative propagation matrix used by the graph architectures.
struct StructureMatrix {
  Eigen::MatrixXd s;
  StructureKind kind = StructureKind::identity;
};

struct CsbmParams {
  int n = 0;
  double p = 0.0;      // intra-class edge probability
  double q = 0.0;      // inter-class edge probability
  double k_sep = 1.5;  // mean separation scale
  double sigma = 1.0;
  int d = 0;  // 0 -> d = floor(n / ln^2 n)
  std::uint64_t seed = 0;
};

/// Samples a contextual stochastic block model graph: labels Bernoulli(1/2),
/// features N(+-mu, sigma^2 I) with mu = (k_sep*sigma/(2*sqrt(d))) * 1_d,
/// intra/inter-class edges Bernoulli(p)/Bernoulli(q), symmetrized.
Graph csbm_sample(const CsbmParams& params);

/// Per-coordinate class mean magnitude for the parameters (used to resolve
/// relative perturbation budgets).
double csbm_mu_coordinate(const CsbmParams& params);
int csbm_dimension(const CsbmParams& params);

/// row_norm: D^-1 A_hat; sym_norm: D^-1/2 A_hat D^-1/2, A_hat = A + I when
/// self_loops. identity ignores the adjacency.
StructureMatrix normalize(const Eigen::MatrixXd& adjacency, StructureKind kind,
                          bool self_loops = true);

/// Approximate personalized-PageRank propagation
/// P = (1-a)^K S^K + a * sum_{i=0}^{K-1} (1-a)^i S^i.
StructureMatrix ppr_matrix(const StructureMatrix& s, double alpha, int k_hops);

/// Picks n_train_per_class labeled nodes per class (seeded), permutes them to
/// the index prefix and marks the remaining nodes as test nodes.
Graph split(const Graph& g, int n_train_per_class, std::uint64_t seed);

Graph load_graph(const std::string& path);
void save_graph(const Graph& g, const std::string& path);

}  // namespace qpcert
