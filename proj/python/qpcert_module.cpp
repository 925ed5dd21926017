#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qpcert/bounds.hpp"
#include "qpcert/cert.hpp"
#include "qpcert/errors.hpp"
#include "qpcert/graph.hpp"
#include "qpcert/ntk.hpp"
#include "qpcert/runner.hpp"
#include "qpcert/svm.hpp"

namespace py = pybind11;
using namespace qpcert;

namespace {

Architecture make_arch(const std::string& kind, int depth, bool linear,
                       const std::string& normalization, double appnp_alpha,
                       int appnp_khops) {
  Architecture a;
  if (kind == "mlp") a.kind = ArchKind::mlp;
  else if (kind == "gcn") a.kind = ArchKind::gcn;
  else if (kind == "sgc") a.kind = ArchKind::sgc;
  else if (kind == "appnp") a.kind = ArchKind::appnp;
  else throw py::value_error("unknown architecture kind: " + kind);
  a.depth = depth;
  a.linear = linear;
  if (normalization == "row") a.structure = StructureKind::row_norm;
  else if (normalization == "sym") a.structure = StructureKind::sym_norm;
  else if (normalization == "identity") a.structure = StructureKind::identity;
  else throw py::value_error("unknown normalization: " + normalization);
  a.appnp_alpha = appnp_alpha;
  a.appnp_khops = appnp_khops;
  a.validate();
  return a;
}

NormKind make_norm(const std::string& p) {
  if (p == "inf") return NormKind::inf;
  if (p == "2" || p == "two") return NormKind::two;
  throw py::value_error("norm must be 'inf' or '2'");
}

}  // namespace

PYBIND11_MODULE(_qpcert, m) {
  m.doc() = "Poisoning/backdoor robustness certification for wide (G)NNs";

  py::register_exception<Error>(m, "QpcertError");

  py::class_<Graph>(m, "Graph")
      .def_readonly("n", &Graph::n)
      .def_readonly("d", &Graph::d)
      .def_readonly("adjacency", &Graph::adjacency)
      .def_readonly("features", &Graph::features)
      .def_readonly("labels", &Graph::labels)
      .def_property_readonly("labeled",
                             [](const Graph& g) { return g.labeled_indices(); })
      .def_property_readonly(
          "unlabeled", [](const Graph& g) { return g.unlabeled_indices(); })
      .def("num_labeled", &Graph::num_labeled);

  m.def(
      "csbm_sample",
      [](int n, double p, double q, double k_sep, double sigma, int d,
         std::uint64_t seed) {
        CsbmParams params{n, p, q, k_sep, sigma, d, seed};
        return csbm_sample(params);
      },
      py::arg("n"), py::arg("p"), py::arg("q"), py::arg("k_sep") = 1.5,
      py::arg("sigma") = 1.0, py::arg("d") = 0, py::arg("seed") = 0);

  m.def("split", &split, py::arg("graph"), py::arg("train_per_class"),
        py::arg("seed"));
  m.def("load_graph", &load_graph);
  m.def("save_graph", &save_graph);

  m.def(
      "normalize",
      [](const Eigen::MatrixXd& adj, const std::string& kind, bool self_loops) {
        StructureKind k = kind == "row" ? StructureKind::row_norm
                          : kind == "sym" ? StructureKind::sym_norm
                                          : StructureKind::identity;
        return normalize(adj, k, self_loops).s;
      },
      py::arg("adjacency"), py::arg("kind"), py::arg("self_loops") = true);

  m.def("kappa0", &kappa0);
  m.def("kappa1", &kappa1);

  m.def(
      "ntk",
      [](const Graph& g, const std::string& kind, int depth, bool linear,
         const std::string& normalization, double appnp_alpha,
         int appnp_khops) {
        const Architecture a = make_arch(kind, depth, linear, normalization,
                                         appnp_alpha, appnp_khops);
        return ntk(a, structure_for(a, g), g.features).q;
      },
      py::arg("graph"), py::arg("kind"), py::arg("depth") = 1,
      py::arg("linear") = false, py::arg("normalization") = "row",
      py::arg("appnp_alpha") = 0.1, py::arg("appnp_khops") = 10);

  m.def(
      "ntk_bounds",
      [](const Graph& g, const std::string& kind, int depth, bool linear,
         const std::string& normalization, double appnp_alpha, int appnp_khops,
         const std::vector<int>& adversarial, double delta,
         const std::string& norm) {
        const Architecture a = make_arch(kind, depth, linear, normalization,
                                         appnp_alpha, appnp_khops);
        PerturbationModel pert{make_norm(norm), delta, adversarial, false};
        const IntervalMatrix iv =
            ntk_bounds(a, structure_for(a, g), g.features, pert);
        return py::make_tuple(iv.lower, iv.upper);
      },
      py::arg("graph"), py::arg("kind"), py::arg("depth") = 1,
      py::arg("linear") = false, py::arg("normalization") = "row",
      py::arg("appnp_alpha") = 0.1, py::arg("appnp_khops") = 10,
      py::arg("adversarial") = std::vector<int>{}, py::arg("delta") = 0.0,
      py::arg("norm") = "inf");

  m.def(
      "solve_dual",
      [](const Eigen::MatrixXd& q, const Eigen::VectorXd& y, double c,
         double tol) {
        const DualSolution sol = solve_dual(q, y, c, tol);
        return py::make_tuple(sol.alpha, sol.objective, sol.kkt_residual);
      },
      py::arg("q"), py::arg("y"), py::arg("c"), py::arg("tol") = 1e-8);

  m.def("predict_margin", &predict_margin, py::arg("alpha"), py::arg("y"),
        py::arg("q_row"));

  m.def(
      "certify_scenario",
      [](const Graph& g, const std::string& kind, const std::string& scenario,
         double p_adv, double delta, const std::string& norm,
         std::uint64_t seed, double c, int depth, bool linear,
         const std::string& normalization, double appnp_alpha, int appnp_khops,
         int threads) {
        const Architecture a = make_arch(kind, depth, linear, normalization,
                                         appnp_alpha, appnp_khops);
        Scenario sc;
        sc.kind = scenario_kind_from(scenario);
        sc.p_adv = p_adv;
        sc.delta = delta;
        sc.norm = make_norm(norm);
        sc.seed = seed;
        CertifyOptions opts;
        const ScenarioRun run = run_scenario(g, a, sc, c, opts, threads);
        py::list rows;
        for (const CertResult& r : run.results) {
          py::dict d;
          d["node"] = r.node;
          d["clean_margin"] = r.clean_margin;
          d["milp_lower_bound"] = r.milp_lower_bound;
          d["verdict"] = verdict_name(r.verdict);
          d["nodes_explored"] = r.nodes_explored;
          d["error"] = r.error;
          rows.append(d);
        }
        py::dict out;
        out["results"] = rows;
        out["adversarial"] = run.adversarial;
        out["n_correct"] = run.n_correct;
        out["n_certified"] = run.n_certified;
        out["certified_accuracy"] =
            run.accuracy_defined ? py::cast(run.certified_accuracy)
                                 : py::none().cast<py::object>();
        return out;
      },
      py::arg("graph"), py::arg("kind"), py::arg("scenario"), py::arg("p_adv"),
      py::arg("delta"), py::arg("norm") = "inf", py::arg("seed") = 0,
      py::arg("c") = 0.01, py::arg("depth") = 1, py::arg("linear") = false,
      py::arg("normalization") = "row", py::arg("appnp_alpha") = 0.1,
      py::arg("appnp_khops") = 10, py::arg("threads") = 1);
}
