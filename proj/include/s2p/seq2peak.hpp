#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "s2p/cyclicnorm.hpp"
#include "s2p/data.hpp"
#include "s2p/gradengine.hpp"
#include "s2p/models.hpp"

namespace s2p {

// The four ways of turning a time-series forecaster into a peak-hour
// forecaster:
//   pfp       peak history -> peak forecast
//   sfp       full history -> peak forecast
//   sfs       full history -> full forecast, post-hoc daily max
//   seq2peak  full history -> full forecast, differentiable max-pool
//             decoder plus hybrid sequence/peak loss
enum class Paradigm { kPfp, kSfp, kSfs, kSeq2Peak };

Paradigm paradigm_from_string(const std::string& s);
std::string to_string(Paradigm p);

struct CyclicNormSettings {
  bool enabled = false;
  ShiftKind shift = ShiftKind::kIdentity;
};

struct PipelineSpec {
  Paradigm paradigm = Paradigm::kSeq2Peak;
  std::string model = "linear";
  ModelArgs model_args;
  CyclicNormSettings cyclicnorm;
  std::optional<double> alpha;  // hybrid loss weight; only valid for seq2peak
  int n_hours = 0;
  int m_hours = 0;
  int channels = 0;
};

// Stride-24, kernel-24 max pool over the forecast; value-equal to
// extract_peak but lets gradients reach the forecaster.
grad::Node* peak_decode(grad::Graph& g, grad::Node* forecast);

// alpha * MSE(forecast, target) + (1 - alpha) * MSE(peak forecast, peak target)
grad::Node* hybrid_loss(grad::Graph& g, grad::Node* forecast, grad::Node* target,
                        grad::Node* peak_forecast, grad::Node* peak_target, double alpha);

// A runnable train/predict object for one paradigm. Owns the forecaster
// and shift parameters; graphs are built per sample.
class Pipeline {
 public:
  explicit Pipeline(const PipelineSpec& spec);

  const PipelineSpec& spec() const { return spec_; }
  double alpha() const { return alpha_; }
  Forecaster& forecaster() { return *forecaster_; }

  // Deterministic initialization of forecaster weights; the shift starts
  // neutral (exact identity) regardless of seed.
  void init(std::uint64_t seed);

  // Forecaster tensors first, then shift tensors. Stable order.
  std::vector<grad::ParamTensor*> params();

  // Per-sample precomputation shared across epochs: paradigm-specific
  // model input, targets, and (when CyclicNorm runs) the phase statistics.
  struct Prepared {
    Matrix model_input;
    Matrix y;       // M x c, standardized-dataset scale
    Matrix y_peak;  // (M/24) x c
    PhaseStats stats;
    bool has_stats = false;
    int forecast_anchor = 0;
  };

  Prepared prepare(const WindowSample& sample) const;

  // Scalar training loss for one sample.
  grad::Node* build_loss(grad::Graph& g, const Prepared& p);

  // Peak prediction on the standardized-dataset scale.
  Matrix predict_peak(const Prepared& p);

  // Full-series forecast; only sfs/seq2peak emit one.
  std::optional<Matrix> predict_sequence(const Prepared& p);

 private:
  grad::Node* forecast_node(grad::Graph& g, const Prepared& p);

  PipelineSpec spec_;
  double alpha_ = 0.5;
  std::unique_ptr<Forecaster> forecaster_;
  ShiftParams shift_;
};

Pipeline build_pipeline(const PipelineSpec& spec);

}  // namespace s2p
