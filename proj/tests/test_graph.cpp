#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "qpcert/errors.hpp"
#include "qpcert/graph.hpp"
#include "support/test_support.hpp"

using namespace qpcert;

namespace {
CsbmParams paper_params(int n, std::uint64_t seed) {
  CsbmParams p;
  p.n = n;
  p.p = 0.0317;
  p.q = 0.0074;
  p.k_sep = 1.5;
  p.sigma = 1.0;
  p.seed = seed;
  return p;
}
}  // namespace

TEST_CASE("csbm dimension rule and reference parameters") {
  const Graph g = csbm_sample(paper_params(200, 7));
  // d = floor(n / ln^2 n) for n = 200.
  CHECK(g.d == 7);
  CHECK(g.n == 200);
  CHECK(g.features.rows() == 200);
  // mu per coordinate: k_sep * sigma / (2 sqrt(d)).
  CHECK(csbm_mu_coordinate(paper_params(200, 7)) ==
        doctest::Approx(1.5 / (2.0 * std::sqrt(7.0))));
}

TEST_CASE("csbm with p = q = 0 has no edges") {
  CsbmParams p = paper_params(50, 3);
  p.p = 0.0;
  p.q = 0.0;
  const Graph g = csbm_sample(p);
  CHECK(g.adjacency.cwiseAbs().sum() == 0.0);
}

TEST_CASE("csbm label fractions concentrate around one half") {
  const Graph g = csbm_sample(paper_params(1000, 11));
  int ones = 0;
  for (int i = 0; i < g.n; ++i) ones += g.labels[i];
  const double frac = static_cast<double>(ones) / g.n;
  CHECK(frac > 0.45);
  CHECK(frac < 0.55);
}

TEST_CASE("csbm is deterministic given the seed") {
  const Graph a = csbm_sample(paper_params(120, 5));
  const Graph b = csbm_sample(paper_params(120, 5));
  CHECK(a.features == b.features);
  CHECK(a.adjacency == b.adjacency);
  CHECK(a.labels == b.labels);
  const Graph c = csbm_sample(paper_params(120, 6));
  CHECK(a.features != c.features);
}

TEST_CASE("csbm rejects bad parameters") {
  CsbmParams p = paper_params(1, 0);
  CHECK_THROWS_AS(csbm_sample(p), Error);
  p = paper_params(10, 0);
  p.q = 0.5;
  p.p = 0.1;  // q > p
  CHECK_THROWS_AS(csbm_sample(p), Error);
}

TEST_CASE("row normalization of the empty graph is the identity") {
  const Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
  const StructureMatrix s = normalize(a, StructureKind::row_norm, true);
  CHECK(testing::max_abs_diff(s.s, Eigen::MatrixXd::Identity(2, 2)) < 1e-15);
}

TEST_CASE("symmetric normalization of K2 with self-loops is all one-half") {
  Eigen::MatrixXd a(2, 2);
  a << 0, 1, 1, 0;
  const StructureMatrix s = normalize(a, StructureKind::sym_norm, true);
  CHECK(s.s(0, 0) == doctest::Approx(0.5));
  CHECK(s.s(0, 1) == doctest::Approx(0.5));
  CHECK(s.s(1, 0) == doctest::Approx(0.5));
  CHECK(s.s(1, 1) == doctest::Approx(0.5));
}

TEST_CASE("row-normalized rows sum to one") {
  Rng rng(99);
  const Graph g = testing::random_graph(rng, 25, 3, 8, 0.2);
  const StructureMatrix s = normalize(g.adjacency, StructureKind::row_norm, true);
  for (int i = 0; i < 25; ++i)
    CHECK(std::abs(s.s.row(i).sum() - 1.0) < 1e-12);
}

TEST_CASE("isolated node without self-loops raises degree-zero") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 3);
  a(0, 1) = a(1, 0) = 1.0;
  try {
    normalize(a, StructureKind::row_norm, false);
    FAIL("expected degree-zero error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::degree_zero);
  }
}

TEST_CASE("ppr with alpha = 1 is the identity") {
  Rng rng(1);
  const Graph g = testing::random_graph(rng, 10, 2, 4);
  const StructureMatrix s = normalize(g.adjacency, StructureKind::sym_norm, true);
  const StructureMatrix p = ppr_matrix(s, 1.0, 7);
  CHECK(testing::max_abs_diff(p.s, Eigen::MatrixXd::Identity(10, 10)) < 1e-12);
}

TEST_CASE("ppr polynomial on the identity structure") {
  StructureMatrix s;
  s.kind = StructureKind::sym_norm;
  s.s = Eigen::MatrixXd::Identity(4, 4);
  // alpha = 0.1, K = 2: 0.81 I + 0.1 (I + 0.9 I) = I.
  const StructureMatrix p = ppr_matrix(s, 0.1, 2);
  CHECK(testing::max_abs_diff(p.s, Eigen::MatrixXd::Identity(4, 4)) < 1e-14);
}

TEST_CASE("ppr of a row-stochastic structure keeps row sums at one") {
  Rng rng(4);
  const Graph g = testing::random_graph(rng, 15, 2, 4, 0.3);
  const StructureMatrix s = normalize(g.adjacency, StructureKind::row_norm, true);
  const StructureMatrix p = ppr_matrix(s, 0.15, 5);
  for (int i = 0; i < 15; ++i)
    CHECK(std::abs(p.s.row(i).sum() - 1.0) < 1e-10);
  CHECK(p.s.minCoeff() >= 0.0);
}

TEST_CASE("split canonicalizes labeled nodes to the prefix") {
  const Graph g = csbm_sample(paper_params(200, 2));
  const Graph sp = split(g, 40, 17);
  CHECK(sp.num_labeled() == 80);
  int unlabeled = 0;
  for (int i = 0; i < sp.n; ++i) unlabeled += !sp.labeled_mask[i];
  CHECK(unlabeled == 120);
  for (int i = 0; i < 80; ++i) CHECK(sp.labeled_mask[i]);
  // 40 per class.
  int c1 = 0;
  for (int i = 0; i < 80; ++i) c1 += sp.labels[i] == 1;
  CHECK(c1 == 40);
}

TEST_CASE("split rejects degenerate requests") {
  const Graph g = csbm_sample(paper_params(30, 2));
  CHECK_THROWS_AS(split(g, 0, 1), Error);
  CHECK_THROWS_AS(split(g, 1000, 1), Error);
}

TEST_CASE("two split seeds give different labeled sets of equal size") {
  const Graph g = csbm_sample(paper_params(100, 9));
  const Graph a = split(g, 10, 1);
  const Graph b = split(g, 10, 2);
  CHECK(a.num_labeled() == b.num_labeled());
  bool same = true;
  for (int i = 0; i < a.n && same; ++i)
    same = a.features.row(i) == b.features.row(i);
  CHECK_FALSE(same);
}

TEST_CASE("graph json round trip is exact") {
  const Graph g = split(csbm_sample(paper_params(60, 13)), 10, 3);
  const std::string path = "graph_roundtrip_test.json";
  save_graph(g, path);
  const Graph r = load_graph(path);
  CHECK(r.n == g.n);
  CHECK(r.d == g.d);
  CHECK(r.features == g.features);  // bit-exact via 17 significant digits
  CHECK(r.adjacency == g.adjacency);
  CHECK(r.labels == g.labels);
  CHECK(r.labeled_mask == g.labeled_mask);
  std::filesystem::remove(path);
}

TEST_CASE("loading a malformed graph fails cleanly") {
  const std::string path = "graph_malformed_test.json";
  {
    std::ofstream f(path);
    f << "{\"n\": 3, \"d\": 2, \"edges\": [], \"features\": [[1, 2]], "
         "\"labels\": [0, 1, 0], \"labeled\": []}";
  }
  try {
    load_graph(path);
    FAIL("expected dimension mismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::dimension_mismatch);
  }
  std::filesystem::remove(path);
}

TEST_CASE("graph invariants are enforced") {
  Rng rng(5);
  Graph g = testing::random_graph(rng, 6, 2, 2);
  g.adjacency(0, 1) = 1.0;
  g.adjacency(1, 0) = 0.0;  // break symmetry
  CHECK_THROWS_AS(g.validate(), Error);
}

TEST_CASE("without_node drops the row and reindexes") {
  Rng rng(6);
  Graph g = testing::random_graph(rng, 6, 2, 2);
  const Graph h = g.without_node(4);
  CHECK(h.n == 5);
  CHECK(h.features.row(4) == g.features.row(5));
  CHECK(h.adjacency(0, 4) == g.adjacency(0, 5));
}
