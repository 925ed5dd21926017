#include "qpcert/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "io_util.hpp"
#include "qpcert/errors.hpp"
#include "qpcert/rng.hpp"
#include "qpcert/svm.hpp"

namespace qpcert {

namespace {

using nlohmann::json;

ArchKind arch_kind_from(const std::string& s) {
  if (s == "mlp") return ArchKind::mlp;
  if (s == "gcn") return ArchKind::gcn;
  if (s == "sgc") return ArchKind::sgc;
  if (s == "appnp") return ArchKind::appnp;
  fail(ErrorCode::config_error, "unknown architecture kind: " + s);
}

StructureKind structure_from(const std::string& s) {
  if (s == "row") return StructureKind::row_norm;
  if (s == "sym") return StructureKind::sym_norm;
  if (s == "identity") return StructureKind::identity;
  fail(ErrorCode::config_error, "unknown normalization: " + s);
}

NormKind norm_from(const std::string& s) {
  if (s == "inf") return NormKind::inf;
  if (s == "2" || s == "two") return NormKind::two;
  fail(ErrorCode::config_error, "unknown norm: " + s);
}

DeltaScale delta_scale_from(const std::string& s) {
  if (s == "l2_2mu") return DeltaScale::l2_2mu;
  if (s == "per_coord_2mu") return DeltaScale::per_coord_2mu;
  if (s == "absolute") return DeltaScale::absolute;
  fail(ErrorCode::config_error, "unknown delta_scale: " + s);
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

}  // namespace

std::string arch_name(const Architecture& a) {
  std::string base;
  switch (a.kind) {
    case ArchKind::mlp: base = "mlp"; break;
    case ArchKind::gcn: base = "gcn"; break;
    case ArchKind::sgc: base = "sgc"; break;
    case ArchKind::appnp: base = "appnp"; break;
  }
  if (a.linear && a.kind != ArchKind::sgc) base += "-linear";
  if (a.depth != 1) base += "-L" + std::to_string(a.depth);
  return base;
}

std::string normalization_name(StructureKind k) {
  switch (k) {
    case StructureKind::row_norm: return "row";
    case StructureKind::sym_norm: return "sym";
    case StructureKind::identity: return "identity";
    case StructureKind::ppr: return "ppr";
  }
  return "?";
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(ErrorCode::config_error, std::string("config parse error: ") + e.what());
  }
  ExperimentConfig cfg;
  try {
    const auto& ds = j.at("dataset");
    if (ds.contains("csbm")) {
      const auto& cj = ds.at("csbm");
      CsbmParams p;
      p.n = cj.at("n").get<int>();
      p.p = cj.value("p", 0.0317);
      p.q = cj.value("q", 0.0074);
      p.k_sep = cj.value("k_sep", 1.5);
      p.sigma = cj.value("sigma", 1.0);
      p.d = cj.value("d", 0);
      p.seed = cj.value("seed", 0);
      cfg.dataset.csbm = p;
      cfg.dataset.train_per_class = ds.value("train_per_class", 20);
    } else if (ds.contains("path")) {
      cfg.dataset.path = ds.at("path").get<std::string>();
    } else {
      fail(ErrorCode::config_error, "dataset needs either csbm or path");
    }

    if (j.contains("arch")) {
      const auto& aj = j.at("arch");
      cfg.arch.kind = arch_kind_from(aj.value("kind", std::string("gcn")));
      cfg.arch.depth = aj.value("depth", 1);
      cfg.arch.linear = aj.value("linear", false);
      if (aj.contains("normalization"))
        cfg.arch.structure = structure_from(aj.at("normalization").get<std::string>());
      else
        cfg.arch.structure = cfg.arch.kind == ArchKind::appnp
                                 ? StructureKind::sym_norm
                                 : StructureKind::row_norm;
      cfg.arch.appnp_alpha = aj.value("appnp_alpha", 0.1);
      cfg.arch.appnp_khops = aj.value("appnp_khops", 10);
      cfg.arch.validate();
    }

    cfg.c = j.value("C", 0.01);
    cfg.c_explicit = j.contains("C");
    if (j.contains("cv")) {
      const auto& cv = j.at("cv");
      cfg.cv_grid = cv.at("grid").get<std::vector<double>>();
      cfg.cv_folds = cv.value("folds", 4);
      cfg.cv_seed = cv.value("seed", 0);
    }

    if (j.contains("scenarios")) {
      const auto& sj = j.at("scenarios");
      for (const auto& k : sj.at("kinds"))
        cfg.grid.kinds.push_back(scenario_kind_from(k.get<std::string>()));
      cfg.grid.deltas = sj.at("deltas").get<std::vector<double>>();
      cfg.grid.p_adv = sj.at("p_adv").get<std::vector<double>>();
      for (const auto& s : sj.at("seeds"))
        cfg.grid.seeds.push_back(s.get<std::uint64_t>());
      if (cfg.grid.kinds.empty() || cfg.grid.deltas.empty() ||
          cfg.grid.p_adv.empty() || cfg.grid.seeds.empty())
        fail(ErrorCode::config_error, "scenario grid has an empty axis");
    }

    if (j.contains("perturbation")) {
      const auto& pj = j.at("perturbation");
      cfg.norm = norm_from(pj.value("norm", std::string("inf")));
      cfg.delta_scale =
          delta_scale_from(pj.value("delta_scale", std::string("l2_2mu")));
    }
    if (!cfg.dataset.csbm && cfg.delta_scale != DeltaScale::absolute)
      cfg.delta_scale = DeltaScale::absolute;

    if (j.contains("solver")) {
      const auto& s = j.at("solver");
      cfg.solver.eps_cert = s.value("eps_cert", 1e-6);
      cfg.solver.gap_tol = s.value("gap_tol", 1e-6);
      cfg.solver.node_limit = s.value("node_limit", 200000L);
      cfg.solver.dual_tol = s.value("dual_tol", 1e-8);
      cfg.solver.attack_prepass = s.value("attack_prepass", true);
      cfg.solver.big_m_scale = s.value("big_m_scale", 1.0);
      cfg.dump_models = s.value("dump_models", false);
    }
    if (j.contains("attack")) {
      cfg.attack_trials = j.at("attack").value("trials", 200L);
      cfg.attack_greedy_passes = j.at("attack").value("greedy_passes", 1);
    }
    cfg.threads = j.value("threads", 0);
    cfg.output_dir = j.value("output_dir", std::string("out"));
  } catch (const json::exception& e) {
    fail(ErrorCode::config_error, std::string("config error: ") + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorCode::config_error, "cannot open config " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "{\n  \"dataset\": ";
  if (cfg.dataset.csbm) {
    const auto& p = *cfg.dataset.csbm;
    os << "{\"csbm\": {\"n\": " << p.n << ", \"p\": " << format_real(p.p)
       << ", \"q\": " << format_real(p.q)
       << ", \"k_sep\": " << format_real(p.k_sep)
       << ", \"sigma\": " << format_real(p.sigma) << ", \"d\": " << p.d
       << ", \"seed\": " << p.seed
       << "}, \"train_per_class\": " << cfg.dataset.train_per_class << "}";
  } else {
    os << "{\"path\": \"" << cfg.dataset.path << "\"}";
  }
  os << ",\n  \"arch\": {\"kind\": \"";
  switch (cfg.arch.kind) {
    case ArchKind::mlp: os << "mlp"; break;
    case ArchKind::gcn: os << "gcn"; break;
    case ArchKind::sgc: os << "sgc"; break;
    case ArchKind::appnp: os << "appnp"; break;
  }
  os << "\", \"depth\": " << cfg.arch.depth
     << ", \"linear\": " << (cfg.arch.linear ? "true" : "false")
     << ", \"normalization\": \"" << normalization_name(cfg.arch.structure)
     << "\", \"appnp_alpha\": " << format_real(cfg.arch.appnp_alpha)
     << ", \"appnp_khops\": " << cfg.arch.appnp_khops << "},\n";
  os << "  \"C\": " << format_real(cfg.c) << ",\n";
  if (!cfg.cv_grid.empty()) {
    os << "  \"cv\": {\"grid\": [";
    for (std::size_t i = 0; i < cfg.cv_grid.size(); ++i)
      os << (i ? ", " : "") << format_real(cfg.cv_grid[i]);
    os << "], \"folds\": " << cfg.cv_folds << ", \"seed\": " << cfg.cv_seed
       << "},\n";
  }
  os << "  \"scenarios\": {\"kinds\": [";
  for (std::size_t i = 0; i < cfg.grid.kinds.size(); ++i)
    os << (i ? ", " : "") << "\"" << scenario_kind_name(cfg.grid.kinds[i])
       << "\"";
  os << "], \"deltas\": [";
  for (std::size_t i = 0; i < cfg.grid.deltas.size(); ++i)
    os << (i ? ", " : "") << format_real(cfg.grid.deltas[i]);
  os << "], \"p_adv\": [";
  for (std::size_t i = 0; i < cfg.grid.p_adv.size(); ++i)
    os << (i ? ", " : "") << format_real(cfg.grid.p_adv[i]);
  os << "], \"seeds\": [";
  for (std::size_t i = 0; i < cfg.grid.seeds.size(); ++i)
    os << (i ? ", " : "") << cfg.grid.seeds[i];
  os << "]},\n";
  os << "  \"perturbation\": {\"norm\": \""
     << (cfg.norm == NormKind::inf ? "inf" : "two") << "\", \"delta_scale\": \"";
  switch (cfg.delta_scale) {
    case DeltaScale::l2_2mu: os << "l2_2mu"; break;
    case DeltaScale::per_coord_2mu: os << "per_coord_2mu"; break;
    case DeltaScale::absolute: os << "absolute"; break;
  }
  os << "\"},\n";
  os << "  \"solver\": {\"eps_cert\": " << format_real(cfg.solver.eps_cert)
     << ", \"gap_tol\": " << format_real(cfg.solver.gap_tol)
     << ", \"node_limit\": " << cfg.solver.node_limit
     << ", \"dual_tol\": " << format_real(cfg.solver.dual_tol)
     << ", \"attack_prepass\": " << (cfg.solver.attack_prepass ? "true" : "false")
     << ", \"big_m_scale\": " << format_real(cfg.solver.big_m_scale)
     << ", \"dump_models\": " << (cfg.dump_models ? "true" : "false") << "},\n";
  os << "  \"attack\": {\"trials\": " << cfg.attack_trials
     << ", \"greedy_passes\": " << cfg.attack_greedy_passes << "},\n";
  os << "  \"threads\": " << cfg.threads << ",\n";
  os << "  \"output_dir\": \"" << cfg.output_dir << "\"\n}\n";
  return os.str();
}

Graph dataset_graph(const ExperimentConfig& cfg, std::uint64_t seed) {
  if (cfg.dataset.csbm) {
    CsbmParams p = *cfg.dataset.csbm;
    p.seed = p.seed + seed;
    Graph g = csbm_sample(p);
    return split(g, cfg.dataset.train_per_class, p.seed + 1000003ULL);
  }
  return load_graph(cfg.dataset.path);
}

double resolve_delta(const ExperimentConfig& cfg, double delta) {
  if (cfg.delta_scale == DeltaScale::absolute || !cfg.dataset.csbm)
    return delta;
  const CsbmParams& p = *cfg.dataset.csbm;
  const double mu = csbm_mu_coordinate(p);
  if (cfg.delta_scale == DeltaScale::per_coord_2mu) return delta * 2.0 * mu;
  const double d = static_cast<double>(csbm_dimension(p));
  return delta * 2.0 * mu * std::sqrt(d);  // ||2 mu||_2 = k_sep * sigma
}

int effective_threads(const ExperimentConfig& cfg) {
  if (const char* env = std::getenv("QPCERT_THREADS")) {
    const int t = std::atoi(env);
    if (t > 0) return t;
  }
  if (cfg.threads > 0) return cfg.threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

int run_gen_csbm(const ExperimentConfig& cfg, const std::string& out_path) {
  if (!cfg.dataset.csbm)
    fail(ErrorCode::config_error, "gen-csbm needs a csbm dataset config");
  const std::uint64_t seed = cfg.grid.seeds.empty() ? 0 : cfg.grid.seeds[0];
  const Graph g = dataset_graph(cfg, seed);
  std::string path = out_path;
  if (path.empty()) {
    std::filesystem::create_directories(cfg.output_dir);
    path = cfg.output_dir + "/graph.json";
  }
  save_graph(g, path);
  return 0;
}

namespace {

struct GroupKey {
  std::string scenario;
  double delta;
  double p_adv;
  std::uint64_t seed;
  bool operator<(const GroupKey& o) const {
    return std::tie(scenario, delta, p_adv, seed) <
           std::tie(o.scenario, o.delta, o.p_adv, o.seed);
  }
};

struct GroupStats {
  int n_correct = 0;
  int n_certified = 0;
  bool defined = false;
  double accuracy = 0.0;
  double delta_abs = 0.0;
};

void write_rows_csv(const std::string& path, const std::vector<ResultRow>& rows) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::io_error, "cannot open " + path);
  f << "scenario,arch,normalization,delta,p_adv,seed,node_id,clean_correct,"
       "clean_margin,milp_lower_bound,verdict,nodes_explored,error\n";
  for (const auto& r : rows) {
    f << r.scenario << ',' << r.arch << ',' << r.normalization << ','
      << format_real(r.delta) << ',' << format_real(r.p_adv) << ',' << r.seed
      << ',' << r.node_id << ',' << (r.clean_correct ? 1 : 0) << ','
      << format_real(r.clean_margin) << ',' << format_real(r.milp_lower_bound)
      << ',' << r.verdict << ',' << r.nodes_explored << ','
      << csv_escape(r.error) << '\n';
  }
}

void write_timings_csv(const std::string& path,
                       const std::vector<ResultRow>& rows) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::io_error, "cannot open " + path);
  f << "scenario,arch,delta,p_adv,seed,node_id,wall_time_ms\n";
  for (const auto& r : rows)
    f << r.scenario << ',' << r.arch << ',' << format_real(r.delta) << ','
      << format_real(r.p_adv) << ',' << r.seed << ',' << r.node_id << ','
      << format_real(r.wall_time_ms) << '\n';
}

}  // namespace

int run_certify(const ExperimentConfig& cfg_in) {
  ExperimentConfig cfg = cfg_in;
  if (cfg.grid.kinds.empty())
    fail(ErrorCode::config_error, "certify needs a scenario grid");
  if (!cfg.c_explicit && !cfg.cv_grid.empty()) {
    // No fixed regularization: pick it by cross validation on the first
    // seed's graph.
    const Graph g = dataset_graph(cfg, cfg.grid.seeds.front());
    cfg.c = cross_validate(g, cfg.arch, cfg.cv_grid, cfg.cv_folds, cfg.cv_seed)
                .best_c;
    cfg.c_explicit = true;
  }
  std::filesystem::create_directories(cfg.output_dir);
  {
    std::ofstream f(cfg.output_dir + "/config.json", std::ios::binary);
    f << config_to_json(cfg);
  }
  CertifyOptions solver = cfg.solver;
  if (cfg.dump_models) {
    solver.dump_dir = cfg.output_dir + "/models";
    std::filesystem::create_directories(solver.dump_dir);
  }
  const int threads = effective_threads(cfg);
  const std::string aname = arch_name(cfg.arch);
  const std::string nname = normalization_name(
      cfg.arch.kind == ArchKind::mlp ? StructureKind::identity
                                     : cfg.arch.structure);

  std::vector<ResultRow> rows;
  std::map<GroupKey, GroupStats> groups;
  bool partial_failures = false;

  for (const std::uint64_t seed : cfg.grid.seeds) {
    const Graph g = dataset_graph(cfg, seed);
    for (const ScenarioKind kind : cfg.grid.kinds) {
      for (const double p_adv : cfg.grid.p_adv) {
        for (const double delta : cfg.grid.deltas) {
          Scenario sc;
          sc.kind = kind;
          sc.p_adv = p_adv;
          sc.delta = resolve_delta(cfg, delta);
          sc.norm = cfg.norm;
          sc.seed = seed;
          CertifyOptions sopts = solver;
          if (!solver.dump_dir.empty()) {
            std::ostringstream pre;
            pre << scenario_kind_name(kind) << "_d" << delta << "_p" << p_adv
                << "_s" << seed << "_";
            sopts.dump_prefix = pre.str();
          }
          const ScenarioRun run =
              run_scenario(g, cfg.arch, sc, cfg.c, sopts, threads);
          GroupKey key{scenario_kind_name(kind), delta, p_adv, seed};
          GroupStats stats;
          stats.n_correct = run.n_correct;
          stats.n_certified = run.n_certified;
          stats.defined = run.accuracy_defined;
          stats.accuracy = run.certified_accuracy;
          stats.delta_abs = sc.delta;
          groups[key] = stats;
          for (const CertResult& r : run.results) {
            ResultRow row;
            row.scenario = scenario_kind_name(kind);
            row.arch = aname;
            row.normalization = nname;
            row.delta = delta;
            row.p_adv = p_adv;
            row.seed = seed;
            row.node_id = r.node;
            const double want = g.labels[r.node] == 1 ? 1.0 : -1.0;
            row.clean_correct = r.error.empty() && r.clean_margin != 0.0 &&
                                (r.clean_margin > 0.0 ? 1.0 : -1.0) == want;
            row.clean_margin = r.clean_margin;
            row.milp_lower_bound = r.milp_lower_bound;
            row.verdict = r.error.empty() ? verdict_name(r.verdict)
                                          : "undecided";
            row.nodes_explored = r.nodes_explored;
            row.wall_time_ms = r.wall_ms;
            row.error = r.error;
            if (!r.error.empty()) partial_failures = true;
            rows.push_back(std::move(row));
          }
        }
      }
    }
  }

  write_rows_csv(cfg.output_dir + "/results.csv", rows);
  write_timings_csv(cfg.output_dir + "/timings.csv", rows);

  // Summary: per-group accuracy plus mean/std across seeds.
  std::ostringstream os;
  os << "{\n  \"arch\": \"" << aname << "\",\n";
  os << "  \"delta_scale\": \"";
  switch (cfg.delta_scale) {
    case DeltaScale::l2_2mu: os << "l2_2mu"; break;
    case DeltaScale::per_coord_2mu: os << "per_coord_2mu"; break;
    case DeltaScale::absolute: os << "absolute"; break;
  }
  os << "\",\n  \"pu_rows_widened\": true,\n";
  os << "  \"inductive_rows\": \"train-on-graph-minus-t, row-on-full-graph\",\n";
  os << "  \"groups\": [\n";
  bool first = true;
  for (const auto& [key, st] : groups) {
    if (!first) os << ",\n";
    first = false;
    os << "    {\"scenario\": \"" << key.scenario
       << "\", \"delta\": " << format_real(key.delta)
       << ", \"delta_abs\": " << format_real(st.delta_abs)
       << ", \"p_adv\": " << format_real(key.p_adv) << ", \"seed\": " << key.seed
       << ", \"n_correct\": " << st.n_correct
       << ", \"n_certified\": " << st.n_certified << ", \"certified_accuracy\": ";
    if (st.defined)
      os << format_real(st.accuracy);
    else
      os << "null";
    os << "}";
  }
  os << "\n  ],\n  \"aggregates\": [\n";
  std::map<std::tuple<std::string, double, double>, std::vector<double>> agg;
  for (const auto& [key, st] : groups)
    if (st.defined)
      agg[{key.scenario, key.delta, key.p_adv}].push_back(st.accuracy);
  first = true;
  for (const auto& [key, accs] : agg) {
    if (!first) os << ",\n";
    first = false;
    double mean = 0.0;
    for (double a : accs) mean += a;
    mean /= static_cast<double>(accs.size());
    double var = 0.0;
    for (double a : accs) var += (a - mean) * (a - mean);
    const double stdev =
        accs.size() > 1 ? std::sqrt(var / (accs.size() - 1)) : 0.0;
    os << "    {\"scenario\": \"" << std::get<0>(key)
       << "\", \"delta\": " << format_real(std::get<1>(key))
       << ", \"p_adv\": " << format_real(std::get<2>(key))
       << ", \"mean\": " << format_real(mean)
       << ", \"std\": " << format_real(stdev)
       << ", \"n_seeds\": " << accs.size() << "}";
  }
  os << "\n  ]\n}\n";
  {
    std::ofstream f(cfg.output_dir + "/summary.json", std::ios::binary);
    f << os.str();
  }
  return partial_failures ? 3 : 0;
}

CvOutcome cross_validate(const Graph& g, const Architecture& arch,
                         const std::vector<double>& grid, int folds,
                         std::uint64_t seed) {
  if (grid.empty()) fail(ErrorCode::config_error, "empty C grid");
  if (folds < 2) fail(ErrorCode::config_error, "folds must be >= 2");
  const int m = g.num_labeled();
  const int k_classes = g.num_classes();

  // Stratified fold assignment: per class, seeded shuffle, round robin.
  std::vector<int> fold_of(m, 0);
  Rng rng(seed);
  for (int c = 0; c < k_classes; ++c) {
    std::vector<int> members;
    for (int i = 0; i < m; ++i)
      if (g.labels[i] == c) members.push_back(i);
    rng.shuffle(members);
    for (std::size_t r = 0; r < members.size(); ++r)
      fold_of[members[r]] = static_cast<int>(r) % folds;
  }

  const StructureMatrix s = structure_for(arch, g);
  const KernelMatrix km = ntk(arch, s, g.features);
  const Eigen::MatrixXd q_all = km.q.topLeftCorner(m, m);

  CvOutcome out;
  double best_score = -1.0;
  for (const double c : grid) {
    int hits = 0, total = 0;
    for (int f = 0; f < folds; ++f) {
      std::vector<int> tr, va;
      for (int i = 0; i < m; ++i) (fold_of[i] == f ? va : tr).push_back(i);
      if (va.empty() || tr.empty()) continue;
      Eigen::MatrixXd q_tr(tr.size(), tr.size());
      for (std::size_t a = 0; a < tr.size(); ++a)
        for (std::size_t b = 0; b < tr.size(); ++b)
          q_tr(a, b) = q_all(tr[a], tr[b]);
      Eigen::VectorXi labels_tr(tr.size());
      for (std::size_t a = 0; a < tr.size(); ++a) labels_tr[a] = g.labels[tr[a]];
      TrainedModel model;
      if (k_classes == 2) {
        Eigen::VectorXd y(tr.size());
        for (std::size_t a = 0; a < tr.size(); ++a)
          y[a] = labels_tr[a] == 1 ? 1.0 : -1.0;
        model = train_binary(q_tr, y, c);
      } else {
        model = train_one_vs_all(q_tr, labels_tr, k_classes, c);
      }
      for (int t : va) {
        Eigen::VectorXd row(tr.size());
        for (std::size_t a = 0; a < tr.size(); ++a) row[a] = q_all(t, tr[a]);
        int pred;
        if (k_classes == 2) {
          const double mg = predict_margin(model.alpha[0], model.y[0], row);
          pred = mg > 0.0 ? 1 : 0;
        } else {
          pred = predict_class(model, row);
        }
        hits += pred == g.labels[t];
        ++total;
      }
    }
    const double score = total ? static_cast<double>(hits) / total : 0.0;
    out.scores.emplace_back(c, score);
    if (score > best_score + 1e-12) {
      best_score = score;
      out.best_c = c;
    } else if (std::abs(score - best_score) <= 1e-12 && c < out.best_c) {
      out.best_c = c;
    }
  }
  return out;
}

int run_cv(const ExperimentConfig& cfg, const std::string& out_path) {
  if (cfg.cv_grid.empty())
    fail(ErrorCode::config_error, "cv needs a non-empty grid");
  const std::uint64_t seed = cfg.grid.seeds.empty() ? 0 : cfg.grid.seeds[0];
  const Graph g = dataset_graph(cfg, seed);
  const CvOutcome cv =
      cross_validate(g, cfg.arch, cfg.cv_grid, cfg.cv_folds, cfg.cv_seed);
  std::ostringstream os;
  os << "{\n  \"best_c\": " << format_real(cv.best_c) << ",\n  \"scores\": [\n";
  for (std::size_t i = 0; i < cv.scores.size(); ++i) {
    os << "    {\"c\": " << format_real(cv.scores[i].first)
       << ", \"accuracy\": " << format_real(cv.scores[i].second) << "}"
       << (i + 1 < cv.scores.size() ? "," : "") << "\n";
  }
  os << "  ]\n}\n";
  std::string path = out_path;
  if (path.empty()) {
    std::filesystem::create_directories(cfg.output_dir);
    path = cfg.output_dir + "/cv.json";
  }
  std::ofstream f(path, std::ios::binary);
  f << os.str();
  printf("%s", os.str().c_str());
  return 0;
}

}  // namespace qpcert
