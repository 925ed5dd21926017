#include "qpcert/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qpcert/errors.hpp"
#include "qpcert/rng.hpp"

namespace qpcert {

int Graph::num_labeled() const {
  return static_cast<int>(
      std::count(labeled_mask.begin(), labeled_mask.end(), std::uint8_t{1}));
}

int Graph::num_classes() const {
  int k = 0;
  for (int i = 0; i < labels.size(); ++i) k = std::max(k, labels[i] + 1);
  return k;
}

std::vector<int> Graph::labeled_indices() const {
  std::vector<int> out;
  for (int i = 0; i < n; ++i)
    if (labeled_mask[i]) out.push_back(i);
  return out;
}

std::vector<int> Graph::unlabeled_indices() const {
  std::vector<int> out;
  for (int i = 0; i < n; ++i)
    if (!labeled_mask[i]) out.push_back(i);
  return out;
}

void Graph::validate() const {
  if (adjacency.rows() != n || adjacency.cols() != n)
    fail(ErrorCode::dimension_mismatch, "adjacency is not n x n");
  if (features.rows() != n || features.cols() != d)
    fail(ErrorCode::dimension_mismatch, "feature matrix is not n x d");
  if (labels.size() != n)
    fail(ErrorCode::dimension_mismatch, "label vector length != n");
  if (labeled_mask.size() != static_cast<std::size_t>(n) ||
      verified_mask.size() != static_cast<std::size_t>(n) ||
      test_mask.size() != static_cast<std::size_t>(n))
    fail(ErrorCode::dimension_mismatch, "mask length != n");
  for (int i = 0; i < n; ++i) {
    if (adjacency(i, i) != 0.0)
      fail(ErrorCode::invalid_parameter, "adjacency has a nonzero diagonal");
    for (int j = i + 1; j < n; ++j) {
      const double a = adjacency(i, j);
      if (a != adjacency(j, i))
        fail(ErrorCode::invalid_parameter, "adjacency is not symmetric");
      if (a != 0.0 && a != 1.0)
        fail(ErrorCode::invalid_parameter, "adjacency entries must be 0/1");
    }
  }
  // Labeled nodes must form the index prefix once any are marked.
  const int m = num_labeled();
  for (int i = 0; i < m; ++i)
    if (!labeled_mask[i])
      fail(ErrorCode::invalid_parameter,
           "labeled nodes do not occupy the index prefix");
  for (int i = 0; i < m; ++i)
    if (labels[i] < 0)
      fail(ErrorCode::invalid_parameter, "labeled node without a label");
}

Graph Graph::without_node(int v) const {
  if (v < 0 || v >= n) fail(ErrorCode::invalid_parameter, "node out of range");
  Graph g;
  g.n = n - 1;
  g.d = d;
  g.adjacency.resize(g.n, g.n);
  g.features.resize(g.n, d);
  g.labels.resize(g.n);
  g.labeled_mask.resize(g.n);
  g.verified_mask.resize(g.n);
  g.test_mask.resize(g.n);
  for (int i = 0, ii = 0; i < n; ++i) {
    if (i == v) continue;
    g.features.row(ii) = features.row(i);
    g.labels[ii] = labels[i];
    g.labeled_mask[ii] = labeled_mask[i];
    g.verified_mask[ii] = verified_mask[i];
    g.test_mask[ii] = test_mask[i];
    for (int j = 0, jj = 0; j < n; ++j) {
      if (j == v) continue;
      g.adjacency(ii, jj) = adjacency(i, j);
      ++jj;
    }
    ++ii;
  }
  return g;
}

int csbm_dimension(const CsbmParams& params) {
  if (params.d > 0) return params.d;
  const double ln = std::log(static_cast<double>(params.n));
  return static_cast<int>(std::floor(params.n / (ln * ln)));
}

double csbm_mu_coordinate(const CsbmParams& params) {
  const int d = csbm_dimension(params);
  return params.k_sep * params.sigma / (2.0 * std::sqrt(static_cast<double>(d)));
}

Graph csbm_sample(const CsbmParams& params) {
  if (params.n < 2)
    fail(ErrorCode::invalid_parameter, "csbm requires n >= 2");
  if (!(params.q >= 0.0 && params.q <= params.p && params.p <= 1.0))
    fail(ErrorCode::invalid_parameter, "csbm requires 0 <= q <= p <= 1");
  if (!(params.sigma > 0.0))
    fail(ErrorCode::invalid_parameter, "csbm requires sigma > 0");
  const int n = params.n;
  const int d = csbm_dimension(params);
  if (d < 1) fail(ErrorCode::invalid_parameter, "csbm dimension rule gave d < 1");

  Rng rng(params.seed);
  Graph g;
  g.n = n;
  g.d = d;
  g.labels.resize(n);
  for (int i = 0; i < n; ++i) g.labels[i] = rng.bernoulli(0.5) ? 1 : 0;

  const double mu = csbm_mu_coordinate(params);
  g.features.resize(n, d);
  for (int i = 0; i < n; ++i) {
    const double sign = g.labels[i] == 1 ? 1.0 : -1.0;
    for (int k = 0; k < d; ++k)
      g.features(i, k) = rng.normal(sign * mu, params.sigma);
  }

  g.adjacency = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double prob = g.labels[i] == g.labels[j] ? params.p : params.q;
      if (rng.bernoulli(prob)) {
        g.adjacency(i, j) = 1.0;
        g.adjacency(j, i) = 1.0;
      }
    }
  }

  g.labeled_mask.assign(n, 0);
  g.verified_mask.assign(n, 0);
  g.test_mask.assign(n, 0);
  return g;
}

StructureMatrix normalize(const Eigen::MatrixXd& adjacency, StructureKind kind,
                          bool self_loops) {
  const int n = static_cast<int>(adjacency.rows());
  if (adjacency.cols() != n)
    fail(ErrorCode::dimension_mismatch, "adjacency must be square");
  StructureMatrix out;
  out.kind = kind;
  if (kind == StructureKind::identity) {
    out.s = Eigen::MatrixXd::Identity(n, n);
    return out;
  }
  if (kind == StructureKind::ppr)
    fail(ErrorCode::invalid_parameter,
         "ppr structure is produced by ppr_matrix, not normalize");

  Eigen::MatrixXd a_hat = adjacency;
  if (self_loops) a_hat += Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd deg = a_hat.rowwise().sum();
  for (int i = 0; i < n; ++i)
    if (deg[i] <= 0.0)
      fail(ErrorCode::degree_zero,
           "node " + std::to_string(i) + " has degree zero");

  if (kind == StructureKind::row_norm) {
    out.s = deg.cwiseInverse().asDiagonal() * a_hat;
  } else {
    Eigen::VectorXd inv_sqrt = deg.cwiseSqrt().cwiseInverse();
    out.s = inv_sqrt.asDiagonal() * a_hat * inv_sqrt.asDiagonal();
  }
  return out;
}

StructureMatrix ppr_matrix(const StructureMatrix& s, double alpha, int k_hops) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    fail(ErrorCode::invalid_parameter, "ppr requires 0 < alpha <= 1");
  if (k_hops < 1) fail(ErrorCode::invalid_parameter, "ppr requires k_hops >= 1");
  const int n = static_cast<int>(s.s.rows());
  // P = (1-a)^K S^K + a * sum_{i=0}^{K-1} (1-a)^i S^i
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);  // S^i
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
  double coeff = 1.0;  // (1-a)^i
  for (int i = 0; i < k_hops; ++i) {
    acc += alpha * coeff * power;
    power = s.s * power;
    coeff *= (1.0 - alpha);
  }
  acc += coeff * power;
  StructureMatrix out;
  out.kind = StructureKind::ppr;
  out.s = acc;
  return out;
}

Graph split(const Graph& g, int n_train_per_class, std::uint64_t seed) {
  if (n_train_per_class <= 0)
    fail(ErrorCode::invalid_parameter, "n_train_per_class must be positive");
  const int k = g.num_classes();
  if (k < 2) fail(ErrorCode::invalid_parameter, "split requires >= 2 classes");

  std::vector<std::vector<int>> by_class(k);
  for (int i = 0; i < g.n; ++i)
    if (g.labels[i] >= 0) by_class[g.labels[i]].push_back(i);

  Rng rng(seed);
  std::vector<int> train;
  for (int c = 0; c < k; ++c) {
    if (static_cast<int>(by_class[c].size()) < n_train_per_class)
      fail(ErrorCode::invalid_parameter,
           "class " + std::to_string(c) + " has fewer than " +
               std::to_string(n_train_per_class) + " nodes");
    auto picked = rng.sample_without_replacement(by_class[c], n_train_per_class);
    train.insert(train.end(), picked.begin(), picked.end());
  }
  std::sort(train.begin(), train.end());

  // Permutation: labeled nodes first (in index order), then the rest.
  std::vector<int> order = train;
  std::vector<std::uint8_t> is_train(g.n, 0);
  for (int i : train) is_train[i] = 1;
  for (int i = 0; i < g.n; ++i)
    if (!is_train[i]) order.push_back(i);

  Graph out;
  out.n = g.n;
  out.d = g.d;
  out.adjacency.resize(g.n, g.n);
  out.features.resize(g.n, g.d);
  out.labels.resize(g.n);
  out.labeled_mask.assign(g.n, 0);
  out.verified_mask.assign(g.n, 0);
  out.test_mask.assign(g.n, 0);
  const int m = static_cast<int>(train.size());
  for (int i = 0; i < g.n; ++i) {
    const int src = order[i];
    out.features.row(i) = g.features.row(src);
    out.labels[i] = g.labels[src];
    out.labeled_mask[i] = i < m;
    out.test_mask[i] = i >= m;
    out.verified_mask[i] = g.verified_mask.empty() ? 0 : g.verified_mask[src];
    for (int j = 0; j < g.n; ++j) out.adjacency(i, j) = g.adjacency(order[i], order[j]);
  }
  out.validate();
  return out;
}

}  // namespace qpcert
