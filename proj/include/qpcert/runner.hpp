#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qpcert/cert.hpp"
#include "qpcert/graph.hpp"
#include "qpcert/ntk.hpp"

namespace qpcert {

enum class DeltaScale { l2_2mu, per_coord_2mu, absolute };

struct DatasetConfig {
  std::optional<CsbmParams> csbm;
  int train_per_class = 20;
  std::string path;  // graph file alternative to csbm
};

struct ScenarioGrid {
  std::vector<ScenarioKind> kinds;
  std::vector<double> deltas;
  std::vector<double> p_adv;
  std::vector<std::uint64_t> seeds;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  Architecture arch;
  double c = 0.01;
  bool c_explicit = false;  // false + non-empty cv_grid: certify runs CV first
  std::vector<double> cv_grid;
  int cv_folds = 4;
  std::uint64_t cv_seed = 0;
  ScenarioGrid grid;
  NormKind norm = NormKind::inf;
  DeltaScale delta_scale = DeltaScale::l2_2mu;
  CertifyOptions solver;
  bool dump_models = false;
  long attack_trials = 200;
  int attack_greedy_passes = 1;
  int threads = 0;  // 0: hardware concurrency; env QPCERT_THREADS overrides
  std::string output_dir = "out";
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& cfg);

/// Per-(node, configuration) output row of cmd_certify. wall_time_ms lives in
/// the timings sidecar so results.csv stays byte-reproducible.
struct ResultRow {
  std::string scenario;
  std::string arch;
  std::string normalization;
  double delta = 0.0;  // grid value (relative for CSBM datasets)
  double p_adv = 0.0;
  std::uint64_t seed = 0;
  int node_id = -1;
  bool clean_correct = false;
  double clean_margin = 0.0;
  double milp_lower_bound = 0.0;
  std::string verdict;
  long nodes_explored = 0;
  double wall_time_ms = 0.0;
  std::string error;
};

/// Builds the experiment graph for one master seed (CSBM datasets resample
/// the graph and split per seed; file datasets are fixed).
Graph dataset_graph(const ExperimentConfig& cfg, std::uint64_t seed);

/// Absolute perturbation radius for a relative grid value.
double resolve_delta(const ExperimentConfig& cfg, double delta);

int effective_threads(const ExperimentConfig& cfg);

std::string arch_name(const Architecture& a);
std::string normalization_name(StructureKind k);

/// Subcommand bodies; each returns the process exit code
/// (0 ok, 2 config error, 3 partial failures / violations).
int run_gen_csbm(const ExperimentConfig& cfg, const std::string& out_path);
int run_certify(const ExperimentConfig& cfg);
int run_cv(const ExperimentConfig& cfg, const std::string& out_path);
int run_attack_check(const ExperimentConfig& cfg,
                     const std::string& results_csv,
                     const std::string& out_path);
int run_report(const std::string& results_dir, const std::string& out_dir);

/// 4-fold stratified cross validation; returns the winning C (ties toward
/// the smallest) and the per-C mean accuracies.
struct CvOutcome {
  double best_c = 0.0;
  std::vector<std::pair<double, double>> scores;  // (C, mean accuracy)
};
CvOutcome cross_validate(const Graph& g, const Architecture& arch,
                         const std::vector<double>& grid, int folds,
                         std::uint64_t seed);

std::vector<ResultRow> read_results_csv(const std::string& path);

}  // namespace qpcert
