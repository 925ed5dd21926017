#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "qpcert/cert.hpp"
#include "qpcert/errors.hpp"
#include "qpcert/milp.hpp"
#include "support/lp_reader.hpp"
#include "support/test_support.hpp"

using namespace qpcert;
using milp::Model;
using milp::Relation;

namespace {

// Random boxed LP with a few rows; small enough for the vertex oracle.
Model random_lp(Rng& rng, int nvars, int nrows) {
  Model m;
  for (int j = 0; j < nvars; ++j) {
    const double a = rng.normal(), b = rng.normal();
    m.add_var("x" + std::to_string(j), std::min(a, b), std::max(a, b) + 0.5);
    m.set_objective(j, rng.normal());
  }
  for (int i = 0; i < nrows; ++i) {
    std::vector<milp::LinTerm> terms;
    for (int j = 0; j < nvars; ++j)
      if (rng.bernoulli(0.8)) terms.push_back({j, rng.normal()});
    if (terms.empty()) terms.push_back({0, 1.0});
    const Relation rel = rng.bernoulli(0.5) ? Relation::le : Relation::ge;
    m.add_constraint("c" + std::to_string(i), terms, rel, rng.normal());
  }
  return m;
}

// Small certification model via the real pipeline on a random graph.
Model random_cert_model(Rng& rng, int m_train, int* out_sign = nullptr) {
  const int n = m_train + 3;
  const Graph g = testing::random_graph(rng, n, 2, m_train, 0.4);
  Architecture a;
  a.kind = ArchKind::mlp;
  const StructureMatrix s = structure_for(a, g);
  const KernelMatrix km = ntk(a, s, g.features);
  Eigen::VectorXd y(m_train);
  for (int i = 0; i < m_train; ++i) y[i] = g.labels[i] == 1 ? 1.0 : -1.0;
  std::vector<int> u = {0, m_train};  // one labeled, one unlabeled node
  PerturbationModel pert{NormKind::inf, 0.15, u, false};
  const IntervalMatrix iv = ntk_bounds(a, s, g.features, pert);
  CertKernelInterval q;
  const int t = m_train + 1;
  q.train.lower = iv.lower.topLeftCorner(m_train, m_train);
  q.train.upper = iv.upper.topLeftCorner(m_train, m_train);
  q.row_lower = iv.lower.row(t).head(m_train);
  q.row_upper = iv.upper.row(t).head(m_train);
  const double c = 0.3;
  const Eigen::VectorXd alpha =
      solve_dual(km.q.topLeftCorner(m_train, m_train), y, c, 1e-8).alpha;
  const double margin =
      km.q.row(t).head(m_train).dot(y.cwiseProduct(alpha));
  const int sign = margin >= 0 ? 1 : -1;
  if (out_sign) *out_sign = sign;
  return build_certification_milp(sign, y, c, q, big_m(y, q.train, c));
}

}  // namespace

TEST_CASE("boxed one-variable lp") {
  Model m;
  m.add_var("x", 0.3, 1.0);
  m.set_objective(0, 1.0);
  const milp::LpResult r = lp_solve(m);
  REQUIRE(r.status == milp::LpStatus::optimal);
  CHECK(r.objective == doctest::Approx(0.3));
}

TEST_CASE("two-variable lp with a coupling row") {
  Model m;
  m.add_var("x", 0.0, 1.0);
  m.add_var("y", 0.0, 1.0);
  m.set_objective(0, -1.0);
  m.set_objective(1, -1.0);
  m.add_constraint("cap", {{0, 1.0}, {1, 1.0}}, Relation::le, 1.0);
  const milp::LpResult r = lp_solve(m);
  REQUIRE(r.status == milp::LpStatus::optimal);
  CHECK(r.objective == doctest::Approx(-1.0));
}

TEST_CASE("infeasible and unbounded lps are reported") {
  Model inf;
  inf.add_var("x", 0.0, 1.0);
  inf.add_constraint("lo", {{0, 1.0}}, Relation::ge, 2.0);
  CHECK(lp_solve(inf).status == milp::LpStatus::infeasible);

  Model unb;
  unb.add_var("x", 0.0, std::numeric_limits<double>::infinity());
  unb.objective[0] = -1.0;
  CHECK(lp_solve(unb).status == milp::LpStatus::unbounded);
}

TEST_CASE("random boxed lps match the vertex enumeration oracle") {
  Rng rng(5);
  int solved = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const Model m = random_lp(rng, 2 + rng.uniform_int(2), 1 + rng.uniform_int(3));
    const auto oracle = testing::lp_vertex_oracle(m);
    const milp::LpResult r = lp_solve(m);
    if (!oracle) {
      CHECK(r.status == milp::LpStatus::infeasible);
      continue;
    }
    REQUIRE(r.status == milp::LpStatus::optimal);
    CHECK(r.objective == doctest::Approx(*oracle).epsilon(1e-7));
    ++solved;
  }
  CHECK(solved > 100);  // the generator must produce plenty of feasible LPs
}

TEST_CASE("primal feasibility of the reported lp optimum") {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const Model m = random_lp(rng, 4, 3);
    const milp::LpResult r = lp_solve(m);
    if (r.status != milp::LpStatus::optimal) continue;
    CHECK(milp::is_feasible(m, r.x, 1e-7));
  }
}

TEST_CASE("branching resolves a fractional binary") {
  Model m;
  m.add_var("x", 0.0, 1.0, /*is_binary=*/true);
  m.set_objective(0, 1.0);
  m.add_constraint("lo", {{0, 1.0}}, Relation::ge, 0.3);
  const milp::SolveOutcome out = milp::branch_and_bound(m, {});
  REQUIRE(out.status == milp::SolveStatus::optimal);
  CHECK(*out.incumbent_value == doctest::Approx(1.0));
}

TEST_CASE("branch and bound matches exhaustive enumeration on random milps") {
  Rng rng(11);
  int compared = 0;
  for (int trial = 0; trial < 60; ++trial) {
    Model m = random_lp(rng, 4, 3);
    // Turn two variables into binaries.
    for (int j = 0; j < 2; ++j) {
      m.vars[j].lb = 0.0;
      m.vars[j].ub = 1.0;
      m.vars[j].is_binary = true;
    }
    const auto oracle = testing::milp_enumeration_oracle(m);
    const milp::SolveOutcome out = milp::branch_and_bound(m, {});
    if (!oracle) {
      CHECK(out.status == milp::SolveStatus::infeasible);
      continue;
    }
    REQUIRE(out.incumbent_value.has_value());
    CHECK(*out.incumbent_value == doctest::Approx(*oracle).epsilon(1e-6));
    ++compared;
  }
  CHECK(compared > 20);
}

TEST_CASE("decision thresholds stop the search early in both directions") {
  // Optimum is 0.5: x binary, y in [0.5, 2], min y + x with y >= 0.5.
  Model m;
  m.add_var("x", 0.0, 1.0, true);
  m.add_var("y", 0.5, 2.0);
  m.set_objective(0, 1.0);
  m.set_objective(1, 1.0);
  milp::SolveOptions opts;
  opts.decide_threshold = 0.0;
  milp::SolveOutcome out = milp::branch_and_bound(m, opts);
  CHECK(out.status == milp::SolveStatus::lower_bound_above_threshold);
  CHECK(out.best_lower_bound > 0.0);

  opts.decide_threshold = 0.9;
  out = milp::branch_and_bound(m, opts);
  CHECK(out.status == milp::SolveStatus::incumbent_below_threshold);
  REQUIRE(out.incumbent_value.has_value());
  CHECK(*out.incumbent_value <= 0.9);
}

TEST_CASE("threshold verdicts agree with full solves on random instances") {
  Rng rng(13);
  for (int trial = 0; trial < 40; ++trial) {
    Model m = random_lp(rng, 4, 3);
    for (int j = 0; j < 2; ++j) {
      m.vars[j].lb = 0.0;
      m.vars[j].ub = 1.0;
      m.vars[j].is_binary = true;
    }
    const milp::SolveOutcome full = milp::branch_and_bound(m, {});
    if (full.status != milp::SolveStatus::optimal) continue;
    const double t = *full.incumbent_value + (rng.bernoulli(0.5) ? 0.25 : -0.25);
    milp::SolveOptions opts;
    opts.decide_threshold = t;
    const milp::SolveOutcome dec = milp::branch_and_bound(m, opts);
    const bool above = *full.incumbent_value > t;
    if (above)
      CHECK(dec.status == milp::SolveStatus::lower_bound_above_threshold);
    else
      CHECK(dec.status == milp::SolveStatus::incumbent_below_threshold);
  }
}

TEST_CASE("node limit surfaces as its own status") {
  Rng rng(17);
  Model m = random_lp(rng, 6, 4);
  for (int j = 0; j < 5; ++j) {
    m.vars[j].lb = 0.0;
    m.vars[j].ub = 1.0;
    m.vars[j].is_binary = true;
  }
  milp::SolveOptions opts;
  opts.node_limit = 1;
  const milp::SolveOutcome out = milp::branch_and_bound(m, opts);
  const bool limited = out.status == milp::SolveStatus::node_limit ||
                       out.status == milp::SolveStatus::optimal ||
                       out.status == milp::SolveStatus::infeasible;
  CHECK(limited);
}

TEST_CASE("exported lp text round-trips through the reader") {
  Rng rng(19);
  const Model m = random_cert_model(rng, 3);
  const std::string path = "roundtrip_test.lp";
  milp::export_lp(m, path);
  const Model r = testing::read_lp_file(path);
  REQUIRE(r.vars.size() == m.vars.size());
  REQUIRE(r.cons.size() == m.cons.size());
  for (std::size_t j = 0; j < m.vars.size(); ++j) {
    CHECK(r.vars[j].name == m.vars[j].name);
    CHECK(r.vars[j].lb == m.vars[j].lb);  // bit-exact via 17 digits
    CHECK(r.vars[j].ub == m.vars[j].ub);
    CHECK(r.vars[j].is_binary == m.vars[j].is_binary);
  }
  for (std::size_t j = 0; j < m.vars.size(); ++j)
    CHECK(r.objective[j] == m.objective[j]);
  for (std::size_t i = 0; i < m.cons.size(); ++i) {
    CHECK(r.cons[i].rel == m.cons[i].rel);
    CHECK(r.cons[i].rhs == m.cons[i].rhs);
    REQUIRE(r.cons[i].terms.size() == m.cons[i].terms.size());
    for (std::size_t k = 0; k < m.cons[i].terms.size(); ++k) {
      CHECK(r.cons[i].terms[k].var == m.cons[i].terms[k].var);
      CHECK(r.cons[i].terms[k].coeff == m.cons[i].terms[k].coeff);
    }
  }
  std::filesystem::remove(path);
}

TEST_CASE("export handles an empty constraint list") {
  Model m;
  m.add_var("x", 0.0, 1.0);
  m.set_objective(0, 1.0);
  const std::string path = "empty_cons_test.lp";
  milp::export_lp(m, path);
  const Model r = testing::read_lp_file(path);
  CHECK(r.cons.empty());
  CHECK(r.vars.size() == 1);
  std::filesystem::remove(path);
}

TEST_CASE("certification model for m = 4 has the documented variable counts") {
  Rng rng(23);
  const Model m = random_cert_model(rng, 4);
  int z = 0, a = 0, u = 0, v = 0, s = 0, t = 0;
  for (const auto& var : m.vars) {
    if (var.name[0] == 'Z') ++z;
    else if (var.name[0] == 'a') ++a;
    else if (var.name[0] == 'u') ++u;
    else if (var.name[0] == 'v') ++v;
    else if (var.name[0] == 's') ++s;
    else if (var.name[0] == 't') ++t;
  }
  CHECK(z == 5 * 4);  // (m+1) * m kernel product variables
  CHECK(a + u + v + s + t == 5 * 4);
  CHECK(m.num_binary() == 2 * 4);
  const std::string path = "cert_m4_test.lp";
  milp::export_lp(m, path);
  const Model r = testing::read_lp_file(path);
  CHECK(r.vars.size() == m.vars.size());
  std::filesystem::remove(path);
}

TEST_CASE("solver failure paths stay typed") {
  Model m;
  m.add_var("x", 1.0, 0.0);  // lb > ub
  CHECK_THROWS_AS(lp_solve(m), Error);
}
