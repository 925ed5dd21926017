#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "io_util.hpp"
#include "qpcert/errors.hpp"
#include "qpcert/runner.hpp"

namespace qpcert {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::vector<ResultRow> read_results_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorCode::io_error, "cannot open " + path);
  std::string line;
  if (!std::getline(f, line))
    fail(ErrorCode::io_error, "empty results file " + path);
  std::vector<ResultRow> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto c = split_csv_line(line);
    if (c.size() < 13)
      fail(ErrorCode::io_error, "short row in " + path);
    ResultRow r;
    r.scenario = c[0];
    r.arch = c[1];
    r.normalization = c[2];
    r.delta = std::stod(c[3]);
    r.p_adv = std::stod(c[4]);
    r.seed = std::stoull(c[5]);
    r.node_id = std::stoi(c[6]);
    r.clean_correct = c[7] == "1";
    r.clean_margin = std::stod(c[8]);
    r.milp_lower_bound = std::stod(c[9]);
    r.verdict = c[10];
    r.nodes_explored = std::stol(c[11]);
    r.error = c[12];
    rows.push_back(std::move(r));
  }
  return rows;
}

namespace {

struct AggKey {
  std::string arch, scenario;
  double p_adv, delta;
  bool operator<(const AggKey& o) const {
    return std::tie(arch, scenario, p_adv, delta) <
           std::tie(o.arch, o.scenario, o.p_adv, o.delta);
  }
};

struct SeedAcc {
  std::map<std::uint64_t, std::pair<int, int>> per_seed;  // correct, certified
};

}  // namespace

int run_report(const std::string& results_dir, const std::string& out_dir) {
  std::vector<std::string> files;
  if (std::filesystem::exists(results_dir)) {
    for (const auto& entry :
         std::filesystem::recursive_directory_iterator(results_dir)) {
      if (entry.is_regular_file() &&
          entry.path().filename() == "results.csv")
        files.push_back(entry.path().string());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty())
    fail(ErrorCode::config_error,
         "no results.csv found under " + results_dir + " (empty report)");

  // Certified accuracy is recomputed from the raw rows.
  std::map<AggKey, SeedAcc> acc;
  for (const auto& f : files) {
    for (const ResultRow& r : read_results_csv(f)) {
      if (!r.clean_correct) continue;
      auto& cell = acc[{r.arch, r.scenario, r.p_adv, r.delta}].per_seed[r.seed];
      cell.first += 1;
      cell.second += r.verdict == "certified";
    }
  }

  std::filesystem::create_directories(out_dir);
  struct MeanStd {
    double mean = 0.0, stdev = 0.0;
    int n = 0;
  };
  std::map<AggKey, MeanStd> table;
  for (const auto& [key, seeds] : acc) {
    std::vector<double> vals;
    for (const auto& [seed, cc] : seeds.per_seed)
      if (cc.first > 0)
        vals.push_back(static_cast<double>(cc.second) / cc.first);
    if (vals.empty()) continue;
    MeanStd ms;
    for (double v : vals) ms.mean += v;
    ms.mean /= static_cast<double>(vals.size());
    double var = 0.0;
    for (double v : vals) var += (v - ms.mean) * (v - ms.mean);
    ms.stdev = vals.size() > 1 ? std::sqrt(var / (vals.size() - 1)) : 0.0;
    ms.n = static_cast<int>(vals.size());
    table[key] = ms;
  }

  {
    std::ofstream f(out_dir + "/certified_accuracy.csv", std::ios::binary);
    f << "arch,scenario,p_adv,delta,mean,std,n_seeds\n";
    for (const auto& [key, ms] : table)
      f << key.arch << ',' << key.scenario << ',' << format_real(key.p_adv)
        << ',' << format_real(key.delta) << ',' << format_real(ms.mean) << ','
        << format_real(ms.stdev) << ',' << ms.n << '\n';
  }

  // Gain heatmap: per non-mlp architecture, certified-accuracy difference to
  // the mlp baseline on matching (scenario, p_adv, delta) cells.
  {
    std::ofstream f(out_dir + "/gain_vs_mlp.csv", std::ios::binary);
    f << "arch,scenario,p_adv,delta,gain\n";
    for (const auto& [key, ms] : table) {
      if (key.arch == "mlp") continue;
      const AggKey base{"mlp", key.scenario, key.p_adv, key.delta};
      const auto it = table.find(base);
      if (it == table.end()) continue;
      f << key.arch << ',' << key.scenario << ',' << format_real(key.p_adv)
        << ',' << format_real(key.delta) << ','
        << format_real(ms.mean - it->second.mean) << '\n';
    }
  }
  return 0;
}

int run_attack_check(const ExperimentConfig& cfg,
                     const std::string& results_csv,
                     const std::string& out_path) {
  const std::vector<ResultRow> rows = read_results_csv(results_csv);
  if (rows.empty()) fail(ErrorCode::config_error, "results file has no rows");

  struct Key {
    std::string scenario;
    double delta, p_adv;
    std::uint64_t seed;
    bool operator<(const Key& o) const {
      return std::tie(scenario, delta, p_adv, seed) <
             std::tie(o.scenario, o.delta, o.p_adv, o.seed);
    }
  };
  std::map<Key, std::vector<const ResultRow*>> groups;
  for (const auto& r : rows)
    groups[{r.scenario, r.delta, r.p_adv, r.seed}].push_back(&r);

  int violations = 0;
  std::ostringstream os;
  os << "{\n  \"groups\": [\n";
  bool first = true;
  for (const auto& [key, members] : groups) {
    Scenario sc;
    sc.kind = scenario_kind_from(key.scenario);
    sc.p_adv = key.p_adv;
    sc.delta = resolve_delta(cfg, key.delta);
    sc.norm = cfg.norm;
    sc.seed = key.seed;
    const Graph g = dataset_graph(cfg, key.seed);
    const std::vector<int> adv = sample_adversarial_set(g, sc);
    std::vector<int> targets;
    for (const auto* r : members) targets.push_back(r->node_id);
    std::sort(targets.begin(), targets.end());
    const AttackOutcome attack =
        attack_oracle(g, cfg.arch, sc, adv, cfg.c, targets, cfg.attack_trials,
                      cfg.attack_greedy_passes);
    std::set<int> flipped(attack.flipped.begin(), attack.flipped.end());
    int certified_flipped = 0;
    int n_correct = 0, n_certified = 0, n_not_flipped = 0;
    for (const auto* r : members) {
      if (!r->clean_correct) continue;
      ++n_correct;
      const bool cert = r->verdict == "certified";
      n_certified += cert;
      const bool flip = flipped.count(r->node_id) > 0;
      n_not_flipped += !flip;
      if (cert && flip) ++certified_flipped;
    }
    violations += certified_flipped;
    if (!first) os << ",\n";
    first = false;
    os << "    {\"scenario\": \"" << key.scenario
       << "\", \"delta\": " << format_real(key.delta)
       << ", \"p_adv\": " << format_real(key.p_adv) << ", \"seed\": " << key.seed
       << ", \"n_correct\": " << n_correct << ", \"n_certified\": " << n_certified
       << ", \"n_flipped\": " << flipped.size()
       << ", \"certified_flipped\": " << certified_flipped
       << ", \"certified_accuracy\": "
       << format_real(n_correct ? static_cast<double>(n_certified) / n_correct
                                : 0.0)
       << ", \"attacked_accuracy\": "
       << format_real(n_correct ? static_cast<double>(n_not_flipped) / n_correct
                                : 0.0)
       << "}";
  }
  os << "\n  ],\n  \"violations\": " << violations << "\n}\n";
  if (!out_path.empty()) {
    std::ofstream f(out_path, std::ios::binary);
    f << os.str();
  }
  printf("%s", os.str().c_str());
  return violations > 0 ? 3 : 0;
}

}  // namespace qpcert
