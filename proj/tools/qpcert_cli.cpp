// qpcert command line: poisoning/backdoor robustness certification for
// wide (graph) networks via their tangent kernels and a MILP certificate.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "qpcert/errors.hpp"
#include "qpcert/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"qpcert: kernel-based poisoning robustness certification"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::string results_csv;
  std::string results_dir;
  int threads_override = -1;
  double c_override = -1.0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("-c,--config", config_path, "experiment config JSON")
        ->required();
    cmd->add_option("--threads", threads_override, "worker threads override");
    cmd->add_option("--regularization", c_override, "override C");
  };

  CLI::App* gen = app.add_subcommand("gen-csbm", "sample a CSBM graph file");
  add_common(gen);
  gen->add_option("-o,--out", out_path, "output graph path");

  CLI::App* cv = app.add_subcommand("cv", "4-fold stratified CV over a C grid");
  add_common(cv);
  cv->add_option("-o,--out", out_path, "output JSON path");

  bool dump_models = false;
  CLI::App* certify =
      app.add_subcommand("certify", "run the full certification pipeline");
  add_common(certify);
  certify->add_flag("--dump-models", dump_models,
                    "export every certification MILP as LP text");

  CLI::App* attack = app.add_subcommand(
      "attack-check", "attack a prior results.csv and report violations");
  add_common(attack);
  attack->add_option("-r,--results", results_csv, "results.csv to check")
      ->required();
  attack->add_option("-o,--out", out_path, "report JSON path");

  CLI::App* report =
      app.add_subcommand("report", "aggregate result CSVs into plot tables");
  report->add_option("-d,--dir", results_dir, "directory of results")
      ->required();
  report->add_option("-o,--out", out_path, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (report->parsed()) return qpcert::run_report(results_dir, out_path);

    qpcert::ExperimentConfig cfg = qpcert::load_config(config_path);
    if (threads_override >= 0) cfg.threads = threads_override;
    if (c_override > 0.0) cfg.c = c_override;

    if (gen->parsed()) return qpcert::run_gen_csbm(cfg, out_path);
    if (cv->parsed()) return qpcert::run_cv(cfg, out_path);
    if (certify->parsed()) {
      if (dump_models) cfg.dump_models = true;
      return qpcert::run_certify(cfg);
    }
    if (attack->parsed())
      return qpcert::run_attack_check(cfg, results_csv, out_path);
  } catch (const qpcert::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.code() == qpcert::ErrorCode::config_error ? 2 : 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 2;
}
