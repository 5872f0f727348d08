#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "s2p/gradengine.hpp"

namespace s2p {

struct ModelArgs {
  int hidden = 64;          // mlp hidden width
  int kernel = 25;          // dlinear trend moving-average kernel
  bool per_channel = false; // linear/dlinear: one weight set per channel
};

// Common forecaster contract: a differentiable map from an input window
// (in_rows x channels) to a forecast (out_rows x channels), built from
// graph ops. params() order is stable so checkpoints are reproducible.
class Forecaster {
 public:
  Forecaster(int in_rows, int out_rows, int channels)
      : in_rows_(in_rows), out_rows_(out_rows), channels_(channels) {}
  virtual ~Forecaster() = default;

  virtual grad::Node* forward(grad::Graph& g, grad::Node* input) = 0;
  virtual std::vector<grad::ParamTensor*> params() = 0;
  virtual void init(std::uint64_t seed) = 0;
  virtual std::string kind() const = 0;

  int in_rows() const { return in_rows_; }
  int out_rows() const { return out_rows_; }
  int channels() const { return channels_; }

 protected:
  int in_rows_;
  int out_rows_;
  int channels_;
};

// Repeats the input's trailing 24 rows cyclically across the forecast.
// Zero parameters; the sanity baseline.
class PersistenceForecaster final : public Forecaster {
 public:
  PersistenceForecaster(int in_rows, int out_rows, int channels);
  grad::Node* forward(grad::Graph& g, grad::Node* input) override;
  std::vector<grad::ParamTensor*> params() override { return {}; }
  void init(std::uint64_t) override {}
  std::string kind() const override { return "persistence"; }

 private:
  Matrix selector_;
};

// One affine map shared across channels (per-channel optional).
class LinearForecaster final : public Forecaster {
 public:
  LinearForecaster(int in_rows, int out_rows, int channels, const ModelArgs& args);
  grad::Node* forward(grad::Graph& g, grad::Node* input) override;
  std::vector<grad::ParamTensor*> params() override;
  void init(std::uint64_t seed) override;
  std::string kind() const override { return "linear"; }

 private:
  bool per_channel_;
  std::vector<grad::ParamTensor> tensors_;  // [w, b] or [w0, b0, w1, b1, ...]
};

// Trend/seasonal decomposition with separate linear heads: a moving
// average (edge-replicated) gives the trend, the remainder the seasonal
// part, and the forecast is w_t * trend + w_s * seasonal + b.
class DLinearForecaster final : public Forecaster {
 public:
  DLinearForecaster(int in_rows, int out_rows, int channels, const ModelArgs& args);
  grad::Node* forward(grad::Graph& g, grad::Node* input) override;
  std::vector<grad::ParamTensor*> params() override;
  void init(std::uint64_t seed) override;
  std::string kind() const override { return "dlinear"; }

 private:
  int kernel_;
  bool per_channel_;
  std::vector<grad::ParamTensor> tensors_;  // [w_trend, w_seasonal, b] per head
};

// Per-channel column MLP: affine(in->hidden), tanh, affine(hidden->out),
// weights shared across channels.
class MlpForecaster final : public Forecaster {
 public:
  MlpForecaster(int in_rows, int out_rows, int channels, const ModelArgs& args);
  grad::Node* forward(grad::Graph& g, grad::Node* input) override;
  std::vector<grad::ParamTensor*> params() override;
  void init(std::uint64_t seed) override;
  std::string kind() const override { return "mlp"; }

 private:
  int hidden_;
  std::vector<grad::ParamTensor> tensors_;  // [w1, b1, w2, b2]
};

std::unique_ptr<Forecaster> make_forecaster(const std::string& kind, int in_rows, int out_rows,
                                            int channels, const ModelArgs& args);

}  // namespace s2p
