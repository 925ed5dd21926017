#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qpcert/errors.hpp"
#include "qpcert/ntk.hpp"
#include "qpcert/svm.hpp"
#include "support/test_support.hpp"

using namespace qpcert;

namespace {

Eigen::MatrixXd one(double v) {
  Eigen::MatrixXd m(1, 1);
  m << v;
  return m;
}

// Stationarity residual with multipliers reconstructed from the active-set
// pattern, mirroring the KKT system the certificate relies on.
double kkt_stationarity_residual(const Eigen::MatrixXd& q,
                                 const Eigen::VectorXd& y,
                                 const Eigen::VectorXd& alpha, double c) {
  const Eigen::VectorXd g =
      y.cwiseProduct(q * y.cwiseProduct(alpha)) - Eigen::VectorXd::Ones(y.size());
  double worst = 0.0;
  for (int i = 0; i < y.size(); ++i) {
    double u = 0.0, v = 0.0;
    if (alpha[i] <= 1e-10)
      u = std::max(g[i], 0.0);
    else if (alpha[i] >= c - 1e-10)
      v = std::max(-g[i], 0.0);
    worst = std::max(worst, std::abs(g[i] - u + v));
  }
  return worst;
}

}  // namespace

TEST_CASE("one-dimensional duals have closed forms") {
  Eigen::VectorXd y(1);
  y << 1.0;
  // -a + a^2 minimized at 1/2.
  DualSolution s = solve_dual(one(2.0), y, 10.0);
  CHECK(s.alpha[0] == doctest::Approx(0.5).epsilon(1e-9));
  // Unconstrained optimum 1 clipped to the box at 0.3.
  s = solve_dual(one(1.0), y, 0.3);
  CHECK(s.alpha[0] == doctest::Approx(0.3));
  // Collapsing box pins alpha near zero.
  s = solve_dual(one(1.0), y, 1e-12);
  CHECK(s.alpha[0] <= 1e-12);
}

TEST_CASE("indefinite kernels are rejected") {
  Eigen::MatrixXd q(2, 2);
  q << 0, 1, 1, 0;
  Eigen::VectorXd y(2);
  y << 1, -1;
  try {
    solve_dual(q, y, 1.0);
    FAIL("expected indefinite kernel error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::indefinite_kernel);
  }
}

TEST_CASE("sweep cap produces a non-convergence error carrying the residual") {
  Rng rng(3);
  Eigen::MatrixXd b(6, 4);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 4; ++j) b(i, j) = rng.normal();
  const Eigen::MatrixXd q =
      b * b.transpose() + 0.1 * Eigen::MatrixXd::Identity(6, 6);
  Eigen::VectorXd y(6);
  y << 1, -1, 1, -1, 1, -1;
  try {
    solve_dual(q, y, 5.0, 1e-14, /*max_sweeps=*/1);
    FAIL("expected non-convergence");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::non_convergence);
    CHECK(std::string(e.what()).find("residual") != std::string::npos);
  }
}

TEST_CASE("dual objective is never positive and kkt holds at convergence") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 3 + rng.uniform_int(8);
    Eigen::MatrixXd b(m, 3);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < 3; ++j) b(i, j) = rng.normal();
    const Eigen::MatrixXd q =
        b * b.transpose() + 0.05 * Eigen::MatrixXd::Identity(m, m);
    Eigen::VectorXd y(m);
    for (int i = 0; i < m; ++i) y[i] = i % 2 ? 1.0 : -1.0;
    const double c = 0.1 + rng.uniform();
    const double tol = 1e-8;
    const DualSolution s = solve_dual(q, y, c, tol);
    CHECK(s.objective <= 1e-12);
    CHECK(s.alpha.minCoeff() >= 0.0);
    CHECK(s.alpha.maxCoeff() <= c);
    CHECK(s.kkt_residual <= tol);
    CHECK(kkt_stationarity_residual(q, y, s.alpha, c) <= 10 * tol);
  }
}

TEST_CASE("margins follow the representer form") {
  Eigen::VectorXd alpha(1), y(1), row(1);
  alpha << 0.5;
  y << 1.0;
  row << 2.0;
  CHECK(predict_margin(alpha, y, row) == doctest::Approx(1.0));
  alpha << 0.0;
  CHECK(predict_margin(alpha, y, row) == doctest::Approx(0.0));
}

TEST_CASE("prediction is invariant across optima of a non-unique dual") {
  // Duplicated training points make the dual solution set non-trivial; the
  // margin must not depend on which optimum the sweep order lands on.
  Eigen::MatrixXd x(4, 2);
  x << 1.0, 0.5, 1.0, 0.5, -0.8, 0.2, -0.8, 0.2;
  const Eigen::MatrixXd q = x * x.transpose() + Eigen::MatrixXd::Ones(4, 4);
  Eigen::VectorXd y(4);
  y << 1, 1, -1, -1;
  const double c = 5.0;
  const DualSolution a = solve_dual(q, y, c);
  // Second route through the same problem with permuted coordinates.
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(4);
  perm.indices() << 3, 2, 1, 0;
  const Eigen::MatrixXd qp = perm * q * perm.transpose();
  Eigen::VectorXd yp = perm * y;
  const DualSolution b = solve_dual(qp, yp, c);
  Eigen::VectorXd row(4);
  row << 0.3, 0.3, -0.1, -0.1;
  const Eigen::VectorXd rowp = perm * row;
  CHECK(predict_margin(a.alpha, y, row) ==
        doctest::Approx(predict_margin(b.alpha, yp, rowp)).epsilon(1e-6));
}

TEST_CASE("one-vs-all on two classes mirrors the binary path") {
  Rng rng(13);
  const Graph g = testing::random_graph(rng, 12, 3, 8, 0.3);
  Architecture arch;
  arch.kind = ArchKind::mlp;
  const KernelMatrix km = ntk(arch, structure_for(arch, g), g.features);
  const Eigen::MatrixXd q = km.q.topLeftCorner(8, 8);
  Eigen::VectorXi labels(8);
  Eigen::VectorXd y(8);
  for (int i = 0; i < 8; ++i) {
    labels[i] = g.labels[i];
    y[i] = labels[i] == 1 ? 1.0 : -1.0;
  }
  const double c = 0.5;
  const TrainedModel ova = train_one_vs_all(q, labels, 2, c);
  const TrainedModel bin = train_binary(q, y, c);
  for (int t = 8; t < 12; ++t) {
    Eigen::VectorXd row(8);
    for (int i = 0; i < 8; ++i) row[i] = km.q(t, i);
    const double margin = predict_margin(bin.alpha[0], bin.y[0], row);
    const int pred = predict_class(ova, row);
    CHECK(pred == (margin > 0.0 ? 1 : 0));
    // Scores of the two one-vs-all classifiers are negatives of each other.
    const Eigen::VectorXd scores = class_scores(ova, row);
    CHECK(scores[0] == doctest::Approx(-scores[1]).epsilon(1e-6));
  }
}

TEST_CASE("a class missing from the training labels is rejected") {
  Eigen::MatrixXd q = Eigen::MatrixXd::Identity(3, 3);
  Eigen::VectorXi labels(3);
  labels << 0, 0, 0;
  CHECK_THROWS_AS(train_one_vs_all(q, labels, 2, 1.0), Error);
}

TEST_CASE("three-class one-vs-all matches the nearest-mean rule on clusters") {
  Rng rng(17);
  const int per = 6;
  Eigen::MatrixXd centers(3, 2);
  centers << 4, 0, -4, 3, 0, -5;
  const int m = 3 * per;
  Eigen::MatrixXd x(m + 6, 2);
  Eigen::VectorXi labels(m);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < per; ++i) {
      const int idx = c * per + i;
      x.row(idx) =
          centers.row(c) + 0.3 * Eigen::RowVector2d(rng.normal(), rng.normal());
      labels[idx] = c;
    }
  for (int t = 0; t < 6; ++t)
    x.row(m + t) =
        centers.row(t % 3) + 0.3 * Eigen::RowVector2d(rng.normal(), rng.normal());
  const Eigen::MatrixXd gram =
      x * x.transpose() + Eigen::MatrixXd::Ones(m + 6, m + 6);
  const TrainedModel model =
      train_one_vs_all(gram.topLeftCorner(m, m), labels, 3, 1.0);
  for (int t = 0; t < 6; ++t) {
    Eigen::VectorXd row(m);
    for (int i = 0; i < m; ++i) row[i] = gram(m + t, i);
    int nearest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int c = 0; c < 3; ++c) {
      const double dist = (x.row(m + t) - centers.row(c)).norm();
      if (dist < best) {
        best = dist;
        nearest = c;
      }
    }
    CHECK(predict_class(model, row) == nearest);
  }
}
