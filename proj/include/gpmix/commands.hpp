#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gpmix/gibbs.hpp"
#include "gpmix/metrics.hpp"
#include "gpmix/priors.hpp"

namespace gpmix {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string model = "gpksbp";  // gpksbp | rg | both
  std::string dataset = "all";   // demo | all | 1..5
  int seed_lo = 0;
  int seed_hi = 29;
  int total_iterations = 20000;
  int burn_in = 10000;
  int thin = 100;
  Priors priors;
  HmcConfig hmc;
  std::string out_dir = "out";
  int workers = 1;
  bool fast = false;
  bool save_traces = false;
  bool per_record_rmse = false;

  // Desk-scale profile: 4000 iterations, 2000 burn-in, thin 20, seeds 0..4.
  void apply_fast();
  void validate() const;  // throws ConfigError naming the offending field
  ChainConfig chain_config() const;
};

// Demo summary of the shared parameters and the share-sorted experts,
// averaged over every post-burn-in sweep.
struct DemoExpertSummary {
  int stick = 0;  // 0-based stick position
  double share = 0.0;
  Eigen::VectorXd h_mean;
  double v_mean = 0.0;
  double sigma2_mean = 0.0;
  Eigen::VectorXd l_mean;
};

struct DemoSummary {
  double r_mean = 0.0;
  double alpha_mean = 0.0;
  double beta_mean = 0.0;
  std::vector<DemoExpertSummary> experts;  // sorted by descending share
};

// Runs the demo design, writes summary.csv, predictive_samples.csv,
// trace.jsonl, dataset.csv and config_used.json under out_dir.
DemoSummary cmd_demo(const RunConfig& config);

struct BenchRow {
  int dataset_id = 0;
  std::string model;
  int seed = 0;
  MetricsResult metrics;
  double seconds = 0.0;
  std::string error;  // empty on success
};

struct BenchReport {
  std::vector<BenchRow> rows;
  int failures = 0;
};

// Runs every (dataset, model, seed) combination, writes runs.csv and
// aggregate.csv under out_dir. Per-run failures become rows with an error
// column; aggregation skips them.
BenchReport cmd_bench(const RunConfig& config);

// Scores a stored trace against a test CSV (columns x1..xD with optional y,
// physical scale); predictions come out on the same scale.
int cmd_predict(const std::string& trace_path, const std::string& test_csv_path,
                const std::string& out_csv_path, const Priors& priors);

// Exit-code wrapper used by the CLI: 0 full success, 1 config error,
// 2 partial per-run failures.
int run_bench_command(const RunConfig& config);
int run_demo_command(const RunConfig& config);

}  // namespace gpmix
