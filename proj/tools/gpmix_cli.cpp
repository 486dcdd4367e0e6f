// Command-line harness: `demo` reproduces the two-expert illustration,
// `bench` runs the five-dataset model comparison, `predict` scores a stored
// trace against new inputs.

#include <CLI11.hpp>
#include <iostream>
#include <string>

#include "gpmix/commands.hpp"

namespace {

void add_common_options(CLI::App* cmd, gpmix::RunConfig& cfg, std::string& seeds) {
  cmd->add_option("--seeds", seeds, "seed range A..B (or a single seed)");
  cmd->add_option("--iters", cfg.total_iterations, "total MCMC iterations");
  cmd->add_option("--burnin", cfg.burn_in, "burn-in iterations");
  cmd->add_option("--thin", cfg.thin, "record every thin-th iteration");
  cmd->add_option("--out", cfg.out_dir, "output directory");
  cmd->add_option("--workers", cfg.workers, "parallel chains");
  cmd->add_flag("--fast", cfg.fast, "desk-scale profile: 4000/2000/20, seeds 0..4");
  cmd->add_option("--leapfrog", cfg.hmc.leapfrog_steps, "HMC leapfrog steps");
  cmd->add_option("--step-cap", cfg.hmc.step_cap, "HMC step size cap");
  cmd->add_option("--target-accept", cfg.hmc.target_accept, "HMC target acceptance");

  auto add_gamma = [cmd](const std::string& flag, gpmix::GammaPrior& p,
                         const std::string& help) {
    cmd->add_option_function<std::vector<double>>(
           flag,
           [&p, flag](const std::vector<double>& v) {
             if (v.size() != 2) throw CLI::ValidationError(flag + " expects shape,scale");
             p.shape = v[0];
             p.scale = v[1];
           },
           help)
        ->delimiter(',');
  };
  add_gamma("--prior-sigma2", cfg.priors.sigma2, "gamma shape,scale for sigma^2");
  add_gamma("--prior-length", cfg.priors.length, "gamma shape,scale for length-scales");
  add_gamma("--prior-noise", cfg.priors.noise, "gamma shape,scale for tau^2");
  add_gamma("--prior-r", cfg.priors.kernel_width, "gamma shape,scale for r");
  add_gamma("--prior-rg-beta", cfg.priors.rg_beta, "gamma shape,scale for the RG concentration");
  cmd->add_option("--p-alpha", cfg.priors.p_alpha, "geometric success parameter for alpha");
  cmd->add_option("--p-beta", cfg.priors.p_beta, "geometric success parameter for beta");
}

bool parse_seeds(const std::string& spec, gpmix::RunConfig& cfg) {
  if (spec.empty()) return true;
  const auto pos = spec.find("..");
  try {
    if (pos == std::string::npos) {
      cfg.seed_lo = cfg.seed_hi = std::stoi(spec);
    } else {
      cfg.seed_lo = std::stoi(spec.substr(0, pos));
      cfg.seed_hi = std::stoi(spec.substr(pos + 2));
    }
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixture-of-GP-experts benchmark harness"};
  app.require_subcommand(1);
  // INI file with one section per subcommand, e.g. [bench] iters=20000;
  // command-line flags take precedence over file values.
  app.set_config("--config", "", "read options from an INI file ([demo]/[bench] sections)");

  gpmix::RunConfig demo_cfg;
  demo_cfg.total_iterations = 20000;
  demo_cfg.burn_in = 10000;
  demo_cfg.thin = 20;
  demo_cfg.seed_lo = demo_cfg.seed_hi = 0;
  demo_cfg.out_dir = "demo_out";
  std::string demo_seeds;
  auto* demo = app.add_subcommand("demo", "two-expert illustration on the demo design");
  add_common_options(demo, demo_cfg, demo_seeds);

  gpmix::RunConfig bench_cfg;
  bench_cfg.model = "both";
  bench_cfg.dataset = "all";
  bench_cfg.out_dir = "bench_out";
  std::string bench_seeds;
  auto* bench = app.add_subcommand("bench", "five-dataset comparison of both models");
  bench->add_option("--model", bench_cfg.model, "gpksbp, rg or both");
  bench->add_option("--dataset", bench_cfg.dataset, "all or an id in 1..5");
  bench->add_flag("--save-traces", bench_cfg.save_traces, "write one trace file per run");
  bench->add_flag("--per-record-rmse", bench_cfg.per_record_rmse,
                  "average per-record RMSE instead of scoring the grand mean");
  add_common_options(bench, bench_cfg, bench_seeds);

  std::string trace_path, test_csv, out_csv = "predictions.csv";
  gpmix::RunConfig predict_cfg;
  auto* predict = app.add_subcommand("predict", "score a stored trace on a test CSV");
  predict->add_option("trace", trace_path, "trace file (jsonl)")->required();
  predict->add_option("test", test_csv, "test CSV with columns x1..xD[,y]")->required();
  predict->add_option("--out", out_csv, "output CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (demo->parsed()) {
      if (!parse_seeds(demo_seeds, demo_cfg)) {
        std::cerr << "config error: seeds: expected A..B or a single integer\n";
        return 1;
      }
      return gpmix::run_demo_command(demo_cfg);
    }
    if (bench->parsed()) {
      if (!parse_seeds(bench_seeds, bench_cfg)) {
        std::cerr << "config error: seeds: expected A..B or a single integer\n";
        return 1;
      }
      return gpmix::run_bench_command(bench_cfg);
    }
    if (predict->parsed()) {
      return gpmix::cmd_predict(trace_path, test_csv, out_csv, predict_cfg.priors);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
