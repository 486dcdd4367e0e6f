#include "gpmix/commands.hpp"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <mutex>
#include <sstream>
#include <thread>

#include "gpmix/rg.hpp"
#include "gpmix/trace_io.hpp"

namespace gpmix {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out.precision(17);
  return out;
}

void echo_config(const RunConfig& cfg, const fs::path& dir) {
  json j{{"model", cfg.model},
         {"dataset", cfg.dataset},
         {"seed_lo", cfg.seed_lo},
         {"seed_hi", cfg.seed_hi},
         {"iterations", cfg.total_iterations},
         {"burn_in", cfg.burn_in},
         {"thin", cfg.thin},
         {"workers", cfg.workers},
         {"fast", cfg.fast},
         {"save_traces", cfg.save_traces},
         {"per_record_rmse", cfg.per_record_rmse},
         {"hmc",
          {{"leapfrog_steps", cfg.hmc.leapfrog_steps},
           {"step_cap", cfg.hmc.step_cap},
           {"target_accept", cfg.hmc.target_accept},
           {"initial_step", cfg.hmc.initial_step}}},
         {"priors",
          {{"sigma2", {cfg.priors.sigma2.shape, cfg.priors.sigma2.scale}},
           {"length", {cfg.priors.length.shape, cfg.priors.length.scale}},
           {"noise", {cfg.priors.noise.shape, cfg.priors.noise.scale}},
           {"r", {cfg.priors.kernel_width.shape, cfg.priors.kernel_width.scale}},
           {"p_alpha", cfg.priors.p_alpha},
           {"p_beta", cfg.priors.p_beta},
           {"rg_beta", {cfg.priors.rg_beta.shape, cfg.priors.rg_beta.scale}}}}};
  open_out(dir / "config_used.json") << j.dump(2) << "\n";
}

ChainTrace run_model(const std::string& model, const Dataset& ds, const Priors& priors,
                     const ChainConfig& cc, std::uint64_t seed) {
  if (model == "rg") return run_rg(ds, priors, cc, seed);
  return run_gpksbp(ds, priors, cc, seed);
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  CsvTable table;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (line_no == 1) {
      table.header = cells;
      continue;
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      try {
        row.push_back(std::stod(c));
      } catch (const std::exception&) {
        throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                 ": cannot parse '" + c + "' as a number");
      }
    }
    if (row.size() != table.header.size()) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": column count does not match the header");
    }
    table.rows.push_back(std::move(row));
  }
  if (table.header.empty()) throw std::runtime_error(path + ": missing header");
  return table;
}

}  // namespace

void RunConfig::apply_fast() {
  total_iterations = 4000;
  burn_in = 2000;
  thin = 20;
  seed_lo = 0;
  seed_hi = 4;
}

void RunConfig::validate() const {
  require(model == "gpksbp" || model == "rg" || model == "both",
          "model: must be gpksbp, rg or both");
  if (dataset != "demo" && dataset != "all") {
    try {
      const int id = std::stoi(dataset);
      require(id >= 1 && id <= 5, "dataset: id must be in 1..5");
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("dataset: must be demo, all, or an id in 1..5");
    }
  }
  require(seed_lo <= seed_hi, "seeds: lower bound exceeds upper bound");
  require(total_iterations >= 1, "iters: must be >= 1");
  require(burn_in >= 0 && burn_in < total_iterations, "burnin: must be in [0, iters)");
  require(thin >= 1, "thin: must be >= 1");
  require((total_iterations - burn_in) % thin == 0, "thin: must divide iters - burnin");
  require(workers >= 1, "workers: must be >= 1");
  try {
    hmc.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("hmc: ") + e.what());
  }
}

ChainConfig RunConfig::chain_config() const {
  ChainConfig cc;
  cc.total_iterations = total_iterations;
  cc.burn_in = burn_in;
  cc.thin = thin;
  cc.hmc = hmc;
  return cc;
}

DemoSummary cmd_demo(const RunConfig& config) {
  RunConfig cfg = config;
  if (cfg.fast) cfg.apply_fast();
  cfg.validate();
  fs::create_directories(cfg.out_dir);
  echo_config(cfg, cfg.out_dir);

  const std::uint64_t seed = static_cast<std::uint64_t>(cfg.seed_lo);
  const Dataset ds = demo_design(seed);
  write_dataset_csv(ds, (fs::path(cfg.out_dir) / "dataset.csv").string());

  ChainConfig cc = cfg.chain_config();
  cc.fixed_noise_var = ds.fixed_noise_var;

  GpksbpChain chain(ds.X_norm, ds.y_std, cfg.priors, cc, seed);
  ChainTrace trace;
  trace.model = "gpksbp";
  trace.dataset_name = ds.name;
  trace.seed = seed;
  trace.total_iterations = cc.total_iterations;
  trace.burn_in = cc.burn_in;
  trace.thin = cc.thin;
  trace.fixed_noise_var = cc.fixed_noise_var;
  trace.X = ds.X_norm;
  trace.y = ds.y_std;
  trace.transform = ds.transform;

  // Posterior means accumulate over every post-burn-in sweep, not just the
  // thinned records kept for the predictive dump.
  const int n = ds.n_train();
  const int dim = ds.dim();
  double sum_r = 0.0, sum_alpha = 0.0, sum_beta = 0.0;
  long post_sweeps = 0;
  std::vector<long> present;
  std::vector<double> sum_share, sum_v, sum_sigma2;
  std::vector<Eigen::VectorXd> sum_h, sum_l;
  auto grow_to = [&](std::size_t k) {
    while (present.size() < k) {
      present.push_back(0);
      sum_share.push_back(0.0);
      sum_v.push_back(0.0);
      sum_sigma2.push_back(0.0);
      sum_h.push_back(Eigen::VectorXd::Zero(dim));
      sum_l.push_back(Eigen::VectorXd::Zero(dim));
    }
  };

  for (int iter = 1; iter <= cc.total_iterations; ++iter) {
    chain.sweep();
    if (iter == cc.burn_in) chain.freeze_adaptation();
    if (iter % cc.thin == 0) trace.records.push_back(chain.snapshot());
    if (iter <= cc.burn_in) continue;
    ++post_sweeps;
    const auto& gating = chain.gating();
    sum_r += gating.kernel_width;
    sum_alpha += gating.alpha;
    sum_beta += gating.beta;
    grow_to(gating.sticks.size());
    std::vector<int> counts(gating.sticks.size(), 0);
    for (int s_n : chain.assignments()) counts[s_n] += 1;
    for (std::size_t i = 0; i < gating.sticks.size(); ++i) {
      present[i] += 1;
      sum_share[i] += static_cast<double>(counts[i]) / n;
      sum_v[i] += gating.sticks[i].v;
      sum_h[i] += gating.sticks[i].h;
      sum_sigma2[i] += chain.experts()[i].hyper.output_scale;
      sum_l[i] += chain.experts()[i].hyper.length_scales;
    }
  }

  write_trace(trace, (fs::path(cfg.out_dir) / "trace.jsonl").string());

  DemoSummary summary;
  summary.r_mean = sum_r / post_sweeps;
  summary.alpha_mean = sum_alpha / post_sweeps;
  summary.beta_mean = sum_beta / post_sweeps;
  for (std::size_t i = 0; i < present.size(); ++i) {
    DemoExpertSummary e;
    e.stick = static_cast<int>(i);
    e.share = sum_share[i] / post_sweeps;  // absent sticks count as zero share
    e.v_mean = sum_v[i] / present[i];
    e.h_mean = sum_h[i] / present[i];
    e.sigma2_mean = sum_sigma2[i] / present[i];
    e.l_mean = sum_l[i] / present[i];
    summary.experts.push_back(std::move(e));
  }
  std::stable_sort(summary.experts.begin(), summary.experts.end(),
                   [](const auto& a, const auto& b) { return a.share > b.share; });

  {
    auto out = open_out(fs::path(cfg.out_dir) / "summary.csv");
    out << "r_mean,alpha_mean,beta_mean\n"
        << summary.r_mean << "," << summary.alpha_mean << "," << summary.beta_mean << "\n";
    if (cc.fixed_noise_var) {
      out << "tau2," << *cc.fixed_noise_var << ",fixed (not learned)\n";
    }
    out << "expert,stick,share";
    for (int d = 1; d <= dim; ++d) out << ",h" << d;
    out << ",v,sigma2";
    for (int d = 1; d <= dim; ++d) out << ",l" << d;
    out << "\n";
    for (std::size_t rank = 0; rank < summary.experts.size(); ++rank) {
      const auto& e = summary.experts[rank];
      out << (rank + 1) << "," << (e.stick + 1) << "," << e.share;
      for (int d = 0; d < dim; ++d) out << "," << e.h_mean(d);
      out << "," << e.v_mean << "," << e.sigma2_mean;
      for (int d = 0; d < dim; ++d) out << "," << e.l_mean(d);
      out << "\n";
    }
  }

  // Predictive samples at 9 evenly spaced diagonal locations, one draw per
  // retained record per location.
  {
    auto out = open_out(fs::path(cfg.out_dir) / "predictive_samples.csv");
    out << "location,x1,x2,iter,component,y_std,y_raw\n";
    Rng rng = make_rng(seed, "predict");
    const auto retained = trace.retained();
    for (const TraceRecord* rec : retained) {
      RecordPredictor predictor(*rec, false, trace.X, trace.y, cfg.priors, rng);
      for (int k = 0; k < 9; ++k) {
        const double t = -2.0 + 8.0 * k / 8.0;
        Eigen::Vector2d x_raw(t, t);
        const Eigen::VectorXd x_norm = ds.transform.normalize_x(x_raw);
        const PredictiveMixture mix = predictor.mixture(x_norm);
        int component = -1;
        const double y_std = sample_mixture(mix, rng, &component);
        out << k << "," << x_raw(0) << "," << x_raw(1) << "," << rec->iter << ","
            << component << "," << y_std << "," << ds.transform.destandardize_y(y_std)
            << "\n";
      }
    }
  }

  return summary;
}

BenchReport cmd_bench(const RunConfig& config) {
  RunConfig cfg = config;
  if (cfg.fast) cfg.apply_fast();
  cfg.validate();
  require(cfg.dataset != "demo", "dataset: bench expects all or an id in 1..5");
  fs::create_directories(cfg.out_dir);
  echo_config(cfg, cfg.out_dir);

  std::vector<int> dataset_ids;
  if (cfg.dataset == "all") {
    dataset_ids = {1, 2, 3, 4, 5};
  } else {
    dataset_ids = {std::stoi(cfg.dataset)};
  }
  std::vector<std::string> models;
  if (cfg.model == "both") {
    models = {"gpksbp", "rg"};
  } else {
    models = {cfg.model};
  }

  struct Job {
    int dataset_id;
    std::string model;
    int seed;
  };
  std::vector<Job> jobs;
  for (int id : dataset_ids) {
    for (const auto& model : models) {
      for (int seed = cfg.seed_lo; seed <= cfg.seed_hi; ++seed) {
        jobs.push_back({id, model, seed});
      }
    }
  }

  BenchReport report;
  report.rows.resize(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex io_mutex;

  auto worker = [&]() {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= jobs.size()) return;
      const Job& job = jobs[k];
      BenchRow row;
      row.dataset_id = job.dataset_id;
      row.model = job.model;
      row.seed = job.seed;
      const auto start = std::chrono::steady_clock::now();
      try {
        const Dataset ds = sample_design(job.dataset_id, 30, 300, job.seed);
        const ChainTrace trace =
            run_model(job.model, ds, cfg.priors, cfg.chain_config(), job.seed);
        MetricsOptions opts;
        opts.per_record_rmse = cfg.per_record_rmse;
        row.metrics = score_trace(trace, ds.X_test_norm, ds.y_test_std, cfg.priors,
                                  job.seed, opts);
        if (cfg.save_traces) {
          const std::string name = "trace_" + job.model + "_ds" +
                                   std::to_string(job.dataset_id) + "_seed" +
                                   std::to_string(job.seed) + ".jsonl";
          std::lock_guard<std::mutex> lock(io_mutex);
          write_trace(trace, (fs::path(cfg.out_dir) / name).string());
        }
      } catch (const std::exception& e) {
        row.error = e.what();
      }
      row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                        .count();
      report.rows[k] = std::move(row);
    }
  };

  std::vector<std::thread> pool;
  const int n_workers = std::min<int>(cfg.workers, static_cast<int>(jobs.size()));
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  for (const auto& row : report.rows) {
    if (!row.error.empty()) ++report.failures;
  }

  {
    auto out = open_out(fs::path(cfg.out_dir) / "runs.csv");
    out << "dataset,model,seed,rmse,nlpd,crps,clamped_densities,seconds,error\n";
    for (const auto& row : report.rows) {
      out << row.dataset_id << "," << row.model << "," << row.seed << ",";
      if (row.error.empty()) {
        out << row.metrics.rmse << "," << row.metrics.nlpd << "," << row.metrics.crps
            << "," << row.metrics.clamped_densities;
      } else {
        out << ",,,";
      }
      std::string sanitized = row.error;
      for (char& c : sanitized) {
        if (c == ',' || c == '\n') c = ';';
      }
      out << "," << row.seconds << "," << sanitized << "\n";
    }
  }

  {
    auto out = open_out(fs::path(cfg.out_dir) / "aggregate.csv");
    out << "dataset,model,seeds_ok,seeds_failed,rmse,nlpd,crps\n";
    for (int id : dataset_ids) {
      for (const auto& model : models) {
        double sum_rmse = 0.0, sum_nlpd = 0.0, sum_crps = 0.0;
        int ok = 0, failed = 0;
        for (const auto& row : report.rows) {
          if (row.dataset_id != id || row.model != model) continue;
          if (!row.error.empty()) {
            ++failed;
            continue;
          }
          ++ok;
          sum_rmse += row.metrics.rmse;
          sum_nlpd += row.metrics.nlpd;
          sum_crps += row.metrics.crps;
        }
        out << id << "," << model << "," << ok << "," << failed;
        if (ok > 0) {
          out << "," << sum_rmse / ok << "," << sum_nlpd / ok << "," << sum_crps / ok;
        } else {
          out << ",,,";
        }
        out << "\n";
      }
    }
  }

  return report;
}

int cmd_predict(const std::string& trace_path, const std::string& test_csv_path,
                const std::string& out_csv_path, const Priors& priors) {
  const ChainTrace trace = read_trace(trace_path);
  const CsvTable table = read_csv(test_csv_path);

  const int dim = static_cast<int>(trace.X.cols());
  std::vector<int> x_cols(dim, -1);
  int y_col = -1;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    const std::string& name = table.header[c];
    if (name == "y") {
      y_col = static_cast<int>(c);
    } else if (name.size() >= 2 && name[0] == 'x') {
      const int d = std::atoi(name.c_str() + 1);
      if (d >= 1 && d <= dim) x_cols[d - 1] = static_cast<int>(c);
    }
  }
  for (int d = 0; d < dim; ++d) {
    if (x_cols[d] < 0) {
      throw std::runtime_error(test_csv_path + ": missing column x" + std::to_string(d + 1));
    }
  }
  const bool have_truth = y_col >= 0;

  auto out = open_out(out_csv_path);
  out << "mean,variance";
  if (have_truth) out << ",density,nlpd,crps";
  out << "\n";
  if (table.rows.empty()) return 0;

  const auto retained = trace.retained();
  if (retained.empty()) throw std::runtime_error(trace_path + ": no retained records");
  const int S = static_cast<int>(retained.size());
  const bool is_rg = trace.model == "rg";
  const double sd = trace.transform.y_sd;

  Rng rng = make_rng(trace.seed, "predict");
  std::vector<RecordPredictor> predictors;
  predictors.reserve(S);
  for (const TraceRecord* rec : retained) {
    predictors.emplace_back(*rec, is_rg, trace.X, trace.y, priors, rng);
  }

  for (const auto& row : table.rows) {
    Eigen::VectorXd x_raw(dim);
    for (int d = 0; d < dim; ++d) x_raw(d) = row[x_cols[d]];
    const Eigen::VectorXd x = trace.transform.normalize_x(x_raw);

    double mean_acc = 0.0, second_acc = 0.0, var_acc = 0.0;
    double dens_acc = 0.0, crps_acc = 0.0;
    const double y_std =
        have_truth ? trace.transform.standardize_y(row[y_col]) : 0.0;
    for (const auto& predictor : predictors) {
      const PredictiveMixture mix = predictor.mixture(x);
      const double m = mixture_mean(mix);
      mean_acc += m;
      second_acc += m * m;
      var_acc += mix.weights.dot(
          (mix.variances + (mix.means.array() - m).square().matrix()).eval());
      if (have_truth) {
        dens_acc += mixture_density(mix, y_std);
        crps_acc += crps(mix, y_std);
      }
    }
    const double mean_std = mean_acc / S;
    // Total variance: mean within-record variance plus across-record spread.
    const double var_std =
        var_acc / S + (second_acc / S - mean_std * mean_std);

    out << trace.transform.destandardize_y(mean_std) << "," << var_std * sd * sd;
    if (have_truth) {
      const double dens_raw = (dens_acc / S) / sd;
      out << "," << dens_raw << "," << -std::log(std::max(dens_raw, 1e-300)) << ","
          << (crps_acc / S) * sd;
    }
    out << "\n";
  }
  return 0;
}

int run_demo_command(const RunConfig& config) {
  try {
    cmd_demo(config);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }
}

int run_bench_command(const RunConfig& config) {
  try {
    const BenchReport report = cmd_bench(config);
    if (report.failures > 0) {
      std::cerr << report.failures << " run(s) failed; see runs.csv\n";
      return 2;
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace gpmix
