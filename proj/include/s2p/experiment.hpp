#pragma once

#include <json.hpp>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "s2p/traineval.hpp"

namespace s2p {

using Json = nlohmann::ordered_json;

struct DatasetConfig {
  enum class Kind { kSynthetic, kCsv, kNamed };
  Kind kind = Kind::kSynthetic;
  SyntheticSpec synth;
  std::string path;
  MissingPolicy missing = MissingPolicy::kForwardFill;
  std::string name;
  std::string url;
  std::string cache_dir = "data";

  std::string describe() const;
};

// Fully resolved experiment description. Parsed strictly: unknown keys are
// rejected so manifests cannot silently drift.
struct ExperimentConfig {
  DatasetConfig dataset;
  double split_train = 0.6, split_val = 0.2, split_test = 0.2;
  int input_days = 30;
  std::vector<int> horizon_days = {5};
  int window_stride = 24;
  Paradigm paradigm = Paradigm::kSeq2Peak;
  std::vector<Paradigm> paradigms = {Paradigm::kPfp, Paradigm::kSfp, Paradigm::kSfs,
                                     Paradigm::kSeq2Peak};
  bool paradigms_given = false;
  std::string model = "dlinear";
  ModelArgs model_args;
  CyclicNormSettings cyclicnorm;
  bool cyclicnorm_given = false;
  std::optional<double> alpha;
  std::vector<double> alphas = {0.0, 0.25, 0.5, 0.75, 1.0};
  TrainConfig train;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};

  int n_hours() const { return input_days * kHoursPerDay; }
  int max_m_hours() const;

  // Paradigm-specific pipeline spec honoring the defaults: CyclicNorm on
  // for seq2peak (off for everything else) unless the config said
  // otherwise, identity shift for linear-family models, affine for mlp.
  PipelineSpec pipeline_spec(Paradigm paradigm, int horizon_days, int channels,
                             std::optional<double> alpha_override = std::nullopt) const;
};

ExperimentConfig parse_experiment_config(const Json& j);
Json resolved_config_json(const ExperimentConfig& cfg);

// Reads a config file, unwraps run.json manifests, applies dotted-path
// overrides ("train.learning_rate=0.01"), and parses strictly.
ExperimentConfig load_config_file(const std::string& path,
                                  const std::vector<std::string>& overrides);
Json load_config_json(const std::string& path, const std::vector<std::string>& overrides);

// Original-scale and standardized splits plus the train-fitted stats.
struct DatasetBundle {
  SplitFrames raw;
  SplitFrames standardized;
  ChannelStats stats;
  int channels = 0;
};

DatasetBundle assemble_dataset(const DatasetConfig& cfg, int min_split_hours,
                               double split_train = 0.6, double split_val = 0.2,
                               double split_test = 0.2);
DatasetBundle assemble_dataset(const ExperimentConfig& cfg);

struct SplitSets {
  SampleSet train, val, test;
};

// Windowed splits for every configured horizon (keyed by days).
std::map<int, SplitSets> build_horizon_sets(const DatasetBundle& bundle,
                                            const ExperimentConfig& cfg);

// One trained-and-evaluated experiment cell.
struct CellResult {
  std::string label;
  Paradigm paradigm = Paradigm::kSeq2Peak;
  int horizon_days = 0;
  std::uint64_t seed = 0;
  std::optional<double> alpha;
  PeakMetrics metrics;
  int best_epoch = -1;
  double best_val_peak_mse = 0.0;
  int epochs_run = 0;
  double runtime_s = 0.0;
  std::string error;  // non-empty: this cell failed, others kept going
  std::vector<TraceRow> traces;
};

struct SuiteResult {
  std::vector<CellResult> cells;
};

SuiteResult run_paradigm_comparison(const ExperimentConfig& cfg, int jobs);
SuiteResult run_ablation(const ExperimentConfig& cfg, int jobs);
SuiteResult run_alpha_sweep(const ExperimentConfig& cfg, const std::vector<double>& alphas,
                            int jobs);

struct AggregateRow {
  std::string label;
  int horizon_days = 0;  // 0 means the across-horizons average row
  std::optional<double> alpha;
  PeakMetrics mean;
  int cells = 0;
};

std::vector<AggregateRow> aggregate_cells(const std::vector<CellResult>& cells);

// Output writers. Metric files carry no wall-clock values, so re-running
// a manifest reproduces them byte for byte.
void write_run_manifest(const std::string& out_dir, const std::string& command,
                        const Json& resolved_config);
void write_metrics_json(const std::string& out_dir, const std::string& command,
                        const std::vector<CellResult>& cells,
                        const std::vector<AggregateRow>& aggregates);
void write_metrics_markdown(const std::string& out_dir, const std::string& title,
                            const std::vector<AggregateRow>& aggregates);
void write_traces_csv(const std::string& out_dir, const std::vector<CellResult>& cells);
void write_sweep_csv(const std::string& out_dir, const std::vector<AggregateRow>& aggregates);

// Finite-difference verification of full pipeline gradients (model plus
// CyclicNorm affine shift under the hybrid loss) on small random
// instances. Backs the check-grads command and the gradient acceptance
// criterion.
struct GradCheckCase {
  std::string model;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  grad::FiniteDiffReport report;
};

std::vector<GradCheckCase> run_grad_checks(const std::vector<std::string>& models,
                                           const std::vector<double>& alphas,
                                           const std::vector<std::uint64_t>& seeds, double h,
                                           double tol);

std::string version_string();

}  // namespace s2p
