#include "pcaopt/commands.hpp"

#include "CLI11.hpp"

#include <omp.h>

#include <cstdio>
#include <functional>
#include <map>

namespace {

enum Exit { kOk = 0, kConfig = 2, kSolver = 3, kIo = 4 };

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal combined therapy for a prostate cancer phase-field model"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  int threads = -1;
  long long seed = -1;

  const std::map<std::string, std::pair<std::string, std::function<void(const pcaopt::RunConfig&)>>> commands{
      {"forward", {"Treated forward simulation: QoI series and snapshots", pcaopt::cmd_forward}},
      {"optimize", {"Projected steepest descent for the optimal controls", pcaopt::cmd_optimize}},
      {"fit-protocol", {"Fit the four drug protocol templates to a t,U,S target", pcaopt::cmd_fit_protocol}},
      {"gradient-check", {"Adjoint and tangent derivatives against finite differences", pcaopt::cmd_gradient_check}},
      {"export-snapshots", {"Field snapshots of a run on the export lattice", pcaopt::cmd_export_snapshots}},
  };
  for (const auto& [name, entry] : commands) {
    auto* sub = app.add_subcommand(name, entry.first);
    sub->add_option("--config", config_path, "YAML run configuration")->required();
    sub->add_option("--out", out_dir, "Output directory (overrides output.dir)");
    sub->add_option("--threads", threads, "Worker threads (overrides threads)")->check(CLI::NonNegativeNumber);
    sub->add_option("--seed", seed, "Seed for randomized verification directions")->check(CLI::NonNegativeNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    pcaopt::RunConfig cfg = pcaopt::load_config(config_path);
    if (!out_dir.empty()) cfg.output.dir = out_dir;
    if (threads >= 0) cfg.threads = threads;
    if (seed >= 0) cfg.seed = static_cast<unsigned>(seed);
    cfg.validate();
    if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
    for (const auto& [name, entry] : commands) {
      if (app.got_subcommand(name)) entry.second(cfg);
    }
  } catch (const pcaopt::IoError& e) {
    std::fprintf(stderr, "I/O error: %s\n", e.what());
    return kIo;
  } catch (const pcaopt::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const pcaopt::StepFailure& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return kSolver;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return kSolver;
  }
  return kOk;
}
