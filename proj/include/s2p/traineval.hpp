#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "s2p/data.hpp"
#include "s2p/seq2peak.hpp"

namespace s2p {

struct TrainConfig {
  enum class Optimizer { kSgd, kAdam };
  Optimizer optimizer = Optimizer::kAdam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int batch_size = 32;
  int max_epochs = 100;
  int patience = 10;  // epochs without validation improvement before stopping
  std::uint64_t seed = 0;

  void validate() const;
};

// Windowed samples on the standardized scale plus the matching
// original-scale peak targets used for reporting.
struct SampleSet {
  std::vector<WindowSample> samples;
  std::vector<Matrix> raw_peaks;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

// Builds windows over parallel standardized/raw frames (same origins).
SampleSet build_sample_set(const TimeSeriesFrame& standardized, const TimeSeriesFrame& raw,
                           int n_hours, int m_hours, int stride);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_peak_mse = 0.0;  // original scale
};

struct TrainResult {
  std::vector<EpochRecord> history;
  int best_epoch = -1;
  double best_val_peak_mse = 0.0;
};

// Deterministic mini-batch training with early stopping on validation
// peak-MSE; restores the best-validation parameters before returning.
TrainResult train(Pipeline& pipe, const SampleSet& train_set, const SampleSet& val_set,
                  const ChannelStats& stats, const TrainConfig& cfg);

struct PeakMetrics {
  double mse = 0.0;
  double mae = 0.0;
};

struct TraceRow {
  int window = 0;
  int day = 0;
  int channel = 0;
  double y_true = 0.0;
  double y_pred = 0.0;
};

// Peak MSE/MAE on the original scale over every window, day, and channel.
PeakMetrics evaluate_peaks(Pipeline& pipe, const SampleSet& test_set, const ChannelStats& stats,
                           std::vector<TraceRow>* traces = nullptr);

// Checkpoint file: magic "S2PK", u16 version, u32 tensor count, then per
// tensor a u32-length-prefixed name, u32 rows, u32 cols, and row-major f64
// payload. Everything little-endian, tensors in params() order.
void save_checkpoint(const std::string& path, Pipeline& pipe);
void load_checkpoint(const std::string& path, Pipeline& pipe);

// Runs tasks[i] for i in [0, n) on `jobs` worker threads. Each task owns
// its output slot, so results are identical for any job count.
void run_parallel(std::vector<std::function<void()>>& tasks, int jobs);

}  // namespace s2p
