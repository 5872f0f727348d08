#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "s2p/errors.hpp"
#include "s2p/experiment.hpp"

namespace fs = std::filesystem;
using s2p::Json;

namespace {

struct GlobalOpts {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir = "out";
  int jobs = static_cast<int>(std::thread::hardware_concurrency());
  bool quiet = false;
  bool verbose = false;
};

void log_info(const GlobalOpts& g, const std::string& msg) {
  if (!g.quiet) std::cerr << "[s2p] " << msg << '\n';
}

void print_aggregate_table(const std::vector<s2p::AggregateRow>& aggregates) {
  std::printf("%-16s %-8s %12s %12s\n", "row", "horizon", "peak MSE", "peak MAE");
  for (const auto& a : aggregates) {
    if (a.cells == 0) continue;
    const std::string horizon = a.horizon_days == 0 ? "avg" : std::to_string(a.horizon_days);
    std::printf("%-16s %-8s %12.6f %12.6f\n", a.label.c_str(), horizon.c_str(), a.mean.mse,
                a.mean.mae);
  }
}

double total_runtime(const std::vector<s2p::CellResult>& cells) {
  double t = 0.0;
  for (const auto& c : cells) t += c.runtime_s;
  return t;
}

void report_cell_errors(const std::vector<s2p::CellResult>& cells) {
  for (const auto& c : cells) {
    if (!c.error.empty()) {
      std::cerr << "[s2p] cell " << c.label << " h" << c.horizon_days << " seed " << c.seed
                << " failed: " << c.error << '\n';
    }
  }
}

int run_fetch(const GlobalOpts& g, const std::string& name, const std::string& url,
              const std::string& cache_dir) {
  s2p::DatasetConfig d;
  if (!name.empty()) {
    d.kind = s2p::DatasetConfig::Kind::kNamed;
    d.name = name;
    d.url = url;
    d.cache_dir = cache_dir;
  } else {
    const s2p::ExperimentConfig cfg = s2p::load_config_file(g.config_path, g.overrides);
    if (cfg.dataset.kind != s2p::DatasetConfig::Kind::kNamed) {
      throw s2p::ConfigError("fetch needs --name or a config with dataset.kind=named");
    }
    d = cfg.dataset;
  }
  const std::string path = s2p::fetch_dataset(d.name, d.url, d.cache_dir);
  std::printf("%s\n", path.c_str());
  return 0;
}

int run_synth(const GlobalOpts& g) {
  const s2p::ExperimentConfig cfg = s2p::load_config_file(g.config_path, g.overrides);
  if (cfg.dataset.kind != s2p::DatasetConfig::Kind::kSynthetic) {
    throw s2p::ConfigError("synth needs dataset.kind=synthetic");
  }
  s2p::write_run_manifest(g.out_dir, "synth", s2p::resolved_config_json(cfg));
  const s2p::TimeSeriesFrame frame = s2p::gen_synthetic(cfg.dataset.synth);
  const std::string path = (fs::path(g.out_dir) / "synthetic.csv").string();
  s2p::write_csv(frame, path);
  std::printf("wrote %s (%d hours x %d channels)\n", path.c_str(), frame.length(),
              frame.channels());
  return 0;
}

int run_acf(const GlobalOpts& g, const std::string& channel, int max_lag) {
  const s2p::ExperimentConfig cfg = s2p::load_config_file(g.config_path, g.overrides);
  s2p::write_run_manifest(g.out_dir, "acf", s2p::resolved_config_json(cfg));

  s2p::TimeSeriesFrame frame;
  switch (cfg.dataset.kind) {
    case s2p::DatasetConfig::Kind::kSynthetic:
      frame = s2p::gen_synthetic(cfg.dataset.synth);
      break;
    case s2p::DatasetConfig::Kind::kCsv:
      frame = s2p::load_csv(cfg.dataset.path, cfg.dataset.missing);
      break;
    case s2p::DatasetConfig::Kind::kNamed:
      frame = s2p::load_csv(
          s2p::fetch_dataset(cfg.dataset.name, cfg.dataset.url, cfg.dataset.cache_dir),
          cfg.dataset.missing);
      break;
  }
  int col = 0;
  if (!channel.empty()) {
    col = frame.channel_index(channel);
    if (col < 0) throw s2p::ConfigError("channel '" + channel + "' not found");
  }
  std::vector<double> series(frame.length());
  for (int r = 0; r < frame.length(); ++r) series[r] = frame.values(r, col);
  const s2p::AcfResult result = s2p::acf(series, max_lag);

  const fs::path path = fs::path(g.out_dir) / "acf.csv";
  std::ofstream out(path);
  out << "lag,acf,limit\n";
  out.precision(17);
  for (int k = 0; k <= max_lag; ++k) {
    out << k << ',' << result.values[k] << ',' << result.significance_limit << '\n';
  }
  std::printf("acf of channel %s: r(24)=%.4f, limit=%.4f, %d lags -> %s\n",
              frame.channel_names[col].c_str(), max_lag >= 24 ? result.values[24] : 0.0,
              result.significance_limit, max_lag, path.string().c_str());
  return 0;
}

void require_single_horizon(const s2p::ExperimentConfig& cfg) {
  if (cfg.horizon_days.size() != 1) {
    throw s2p::ConfigError("this command needs exactly one horizon_days entry");
  }
}

int run_train(const GlobalOpts& g, const std::string& checkpoint) {
  s2p::ExperimentConfig cfg = s2p::load_config_file(g.config_path, g.overrides);
  require_single_horizon(cfg);
  if (cfg.alpha.has_value() && cfg.paradigm != s2p::Paradigm::kSeq2Peak) {
    throw s2p::ConfigError("alpha only applies to the seq2peak paradigm");
  }
  s2p::write_run_manifest(g.out_dir, "train", s2p::resolved_config_json(cfg));

  const s2p::DatasetBundle bundle = s2p::assemble_dataset(cfg);
  const auto sets = s2p::build_horizon_sets(bundle, cfg);
  const s2p::SplitSets& data = sets.at(cfg.horizon_days[0]);

  s2p::Pipeline pipe(
      cfg.pipeline_spec(cfg.paradigm, cfg.horizon_days[0], bundle.channels, cfg.alpha));
  s2p::TrainConfig tc = cfg.train;
  tc.seed = cfg.seeds.front();
  log_info(g, "training " + s2p::to_string(cfg.paradigm) + "/" + cfg.model + " on " +
                  cfg.dataset.describe());
  const s2p::TrainResult result = s2p::train(pipe, data.train, data.val, bundle.stats, tc);

  const std::string ck =
      checkpoint.empty() ? (fs::path(g.out_dir) / "checkpoint.s2pk").string() : checkpoint;
  s2p::save_checkpoint(ck, pipe);
  {
    std::ofstream hist(fs::path(g.out_dir) / "history.csv");
    hist << "epoch,train_loss,val_peak_mse\n";
    hist.precision(17);
    for (const auto& e : result.history) {
      hist << e.epoch << ',' << e.train_loss << ',' << e.val_peak_mse << '\n';
    }
  }
  std::printf("trained %zu epochs, best epoch %d (val peak MSE %.6f), checkpoint %s\n",
              result.history.size(), result.best_epoch, result.best_val_peak_mse, ck.c_str());
  return 0;
}

int run_eval(const GlobalOpts& g, const std::string& checkpoint) {
  s2p::ExperimentConfig cfg = s2p::load_config_file(g.config_path, g.overrides);
  require_single_horizon(cfg);
  if (checkpoint.empty()) throw s2p::ConfigError("eval needs --checkpoint");
  s2p::write_run_manifest(g.out_dir, "eval", s2p::resolved_config_json(cfg));

  const s2p::DatasetBundle bundle = s2p::assemble_dataset(cfg);
  const auto sets = s2p::build_horizon_sets(bundle, cfg);
  const s2p::SplitSets& data = sets.at(cfg.horizon_days[0]);

  s2p::Pipeline pipe(
      cfg.pipeline_spec(cfg.paradigm, cfg.horizon_days[0], bundle.channels, cfg.alpha));
  s2p::load_checkpoint(checkpoint, pipe);

  s2p::CellResult cell;
  cell.label = s2p::to_string(cfg.paradigm);
  cell.paradigm = cfg.paradigm;
  cell.horizon_days = cfg.horizon_days[0];
  cell.seed = cfg.seeds.front();
  cell.metrics = s2p::evaluate_peaks(pipe, data.test, bundle.stats, &cell.traces);
  const std::vector<s2p::CellResult> cells = {cell};
  const auto aggregates = s2p::aggregate_cells(cells);
  s2p::write_metrics_json(g.out_dir, "eval", cells, aggregates);
  s2p::write_metrics_markdown(g.out_dir, "Evaluation on " + cfg.dataset.describe(), aggregates);
  s2p::write_traces_csv(g.out_dir, cells);
  print_aggregate_table(aggregates);
  return 0;
}

int run_compare(const GlobalOpts& g) {
  const s2p::ExperimentConfig cfg = s2p::load_config_file(g.config_path, g.overrides);
  s2p::write_run_manifest(g.out_dir, "compare", s2p::resolved_config_json(cfg));
  log_info(g, "comparing paradigms on " + cfg.dataset.describe());
  const s2p::SuiteResult suite = s2p::run_paradigm_comparison(cfg, g.jobs);
  report_cell_errors(suite.cells);
  const auto aggregates = s2p::aggregate_cells(suite.cells);
  s2p::write_metrics_json(g.out_dir, "compare", suite.cells, aggregates);
  s2p::write_metrics_markdown(g.out_dir, "Paradigm comparison on " + cfg.dataset.describe(),
                              aggregates);
  s2p::write_traces_csv(g.out_dir, suite.cells);
  print_aggregate_table(aggregates);
  std::printf("total training+eval time: %.1fs\n", total_runtime(suite.cells));
  return 0;
}

int run_ablate(const GlobalOpts& g) {
  const s2p::ExperimentConfig cfg = s2p::load_config_file(g.config_path, g.overrides);
  s2p::write_run_manifest(g.out_dir, "ablate", s2p::resolved_config_json(cfg));
  log_info(g, "running ablation on " + cfg.dataset.describe());
  const s2p::SuiteResult suite = s2p::run_ablation(cfg, g.jobs);
  report_cell_errors(suite.cells);
  const auto aggregates = s2p::aggregate_cells(suite.cells);
  s2p::write_metrics_json(g.out_dir, "ablate", suite.cells, aggregates);
  s2p::write_metrics_markdown(g.out_dir, "Ablation on " + cfg.dataset.describe(), aggregates);
  print_aggregate_table(aggregates);
  std::printf("total training+eval time: %.1fs\n", total_runtime(suite.cells));
  return 0;
}

int run_sweep(const GlobalOpts& g, const std::vector<double>& alphas_flag) {
  const s2p::ExperimentConfig cfg = s2p::load_config_file(g.config_path, g.overrides);
  const std::vector<double>& alphas = alphas_flag.empty() ? cfg.alphas : alphas_flag;
  s2p::write_run_manifest(g.out_dir, "sweep-alpha", s2p::resolved_config_json(cfg));
  log_info(g, "sweeping alpha on " + cfg.dataset.describe());
  const s2p::SuiteResult suite = s2p::run_alpha_sweep(cfg, alphas, g.jobs);
  report_cell_errors(suite.cells);
  const auto aggregates = s2p::aggregate_cells(suite.cells);
  s2p::write_metrics_json(g.out_dir, "sweep-alpha", suite.cells, aggregates);
  s2p::write_sweep_csv(g.out_dir, aggregates);
  print_aggregate_table(aggregates);
  std::printf("total training+eval time: %.1fs\n", total_runtime(suite.cells));
  return 0;
}

int run_check_grads(const GlobalOpts& g, int seed_flag) {
  std::vector<std::uint64_t> seeds;
  if (seed_flag >= 0) {
    seeds.push_back(static_cast<std::uint64_t>(seed_flag));
  } else {
    for (std::uint64_t s = 0; s < 10; ++s) seeds.push_back(s);
  }
  const auto cases = s2p::run_grad_checks({"linear", "dlinear", "mlp"}, {0.0, 0.3, 0.5, 1.0},
                                          seeds, 1e-5, 1e-4);
  bool all_pass = true;
  Json rows = Json::array();
  for (const auto& c : cases) {
    all_pass = all_pass && c.report.pass;
    std::printf("[%s] %s alpha=%.1f seed=%llu: %s\n", c.report.pass ? "PASS" : "FAIL",
                c.model.c_str(), c.alpha, static_cast<unsigned long long>(c.seed),
                c.report.summary().c_str());
    Json row;
    row["model"] = c.model;
    row["alpha"] = c.alpha;
    row["seed"] = c.seed;
    row["pass"] = c.report.pass;
    row["max_rel_err"] = c.report.max_rel_err;
    row["coords_checked"] = c.report.coords_checked;
    row["excluded"] = c.report.excluded.size();
    rows.push_back(std::move(row));
  }
  fs::create_directories(g.out_dir);
  std::ofstream out(fs::path(g.out_dir) / "gradcheck.json");
  Json j;
  j["command"] = "check-grads";
  j["cases"] = rows;
  out << j.dump(2) << '\n';
  std::printf("%s: %zu cases\n", all_pass ? "ALL PASS" : "FAILURES PRESENT", cases.size());
  return all_pass ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Seq2Peak: peak-hour series forecasting experiments"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOpts g;
  if (g.jobs < 1) g.jobs = 1;
  app.add_option("--config", g.config_path, "JSON config file or run.json manifest");
  app.add_option("--set", g.overrides, "dotted-path override, e.g. train.max_epochs=20");
  app.add_option("--out", g.out_dir, "output directory");
  app.add_option("--jobs", g.jobs, "worker pool size for experiment cells");
  app.add_flag("--quiet", g.quiet, "suppress progress logging on stderr");
  app.add_flag("--verbose", g.verbose, "extra progress logging on stderr");

  std::string fetch_name, fetch_url, fetch_cache = "data";
  auto* fetch = app.add_subcommand("fetch", "download or reuse a cached dataset");
  fetch->add_option("--name", fetch_name, "dataset name (ETTh1, ETTh2, or custom)");
  fetch->add_option("--url", fetch_url, "source url (optional for known names)");
  fetch->add_option("--cache-dir", fetch_cache, "cache directory");

  auto* synth = app.add_subcommand("synth", "generate the configured synthetic dataset as CSV");

  std::string acf_channel;
  int acf_max_lag = 96;
  auto* acf_cmd = app.add_subcommand("acf", "autocorrelation of one channel");
  acf_cmd->add_option("--channel", acf_channel, "channel name (default: first channel)");
  acf_cmd->add_option("--max-lag", acf_max_lag, "largest lag to report");

  std::string train_checkpoint;
  auto* train_cmd = app.add_subcommand("train", "train one pipeline (first seed)");
  train_cmd->add_option("--checkpoint", train_checkpoint, "checkpoint output path");

  std::string eval_checkpoint;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "checkpoint to load");

  auto* compare = app.add_subcommand("compare", "train and compare the four paradigms");
  auto* ablate = app.add_subcommand("ablate", "4-row framework ablation");

  std::vector<double> sweep_alphas;
  auto* sweep = app.add_subcommand("sweep-alpha", "train seq2peak across alpha values");
  sweep->add_option("--alphas", sweep_alphas, "alpha grid (overrides config)");

  int grad_seed = -1;
  auto* grads = app.add_subcommand("check-grads", "finite-difference gradient verification");
  grads->add_option("--seed", grad_seed, "single seed (default: seeds 0..9)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*fetch) return run_fetch(g, fetch_name, fetch_url, fetch_cache);
    if (*synth) return run_synth(g);
    if (*acf_cmd) return run_acf(g, acf_channel, acf_max_lag);
    if (*train_cmd) return run_train(g, train_checkpoint);
    if (*eval_cmd) return run_eval(g, eval_checkpoint);
    if (*compare) return run_compare(g);
    if (*ablate) return run_ablate(g);
    if (*sweep) return run_sweep(g, sweep_alphas);
    if (*grads) return run_check_grads(g, grad_seed);
    std::cerr << "no command given\n";
    return 1;
  } catch (const s2p::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const s2p::ParameterError& e) {
    std::cerr << "parameter error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
