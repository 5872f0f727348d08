#include "s2p/models.hpp"

#include <cmath>

#include "s2p/data.hpp"
#include "s2p/errors.hpp"
#include "s2p/rng.hpp"

namespace s2p {

namespace {

void fill_fan_in(grad::ParamTensor& t, int fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (std::size_t i = 0; i < t.value.size(); ++i) t.value.data()[i] = rng.uniform(-bound, bound);
}

// c x 1 selector picking one channel column out of the input.
Matrix column_selector(int channels, int j) {
  Matrix e(channels, 1);
  e(j, 0) = 1.0;
  return e;
}

// 1 x c selector placing a column vector back at channel j.
Matrix column_placer(int channels, int j) {
  Matrix e(1, channels);
  e(0, j) = 1.0;
  return e;
}

}  // namespace

PersistenceForecaster::PersistenceForecaster(int in_rows, int out_rows, int channels)
    : Forecaster(in_rows, out_rows, channels) {
  if (in_rows < kHoursPerDay) {
    throw ConfigError("persistence forecaster needs at least 24 input rows, got " +
                      std::to_string(in_rows));
  }
  selector_ = Matrix(out_rows, in_rows);
  for (int r = 0; r < out_rows; ++r) {
    selector_(r, in_rows - kHoursPerDay + (r % kHoursPerDay)) = 1.0;
  }
}

grad::Node* PersistenceForecaster::forward(grad::Graph& g, grad::Node* input) {
  return g.matmul(g.constant(selector_), input);
}

LinearForecaster::LinearForecaster(int in_rows, int out_rows, int channels, const ModelArgs& args)
    : Forecaster(in_rows, out_rows, channels), per_channel_(args.per_channel) {
  const int heads = per_channel_ ? channels : 1;
  for (int h = 0; h < heads; ++h) {
    const std::string suffix = per_channel_ ? "." + std::to_string(h) : "";
    tensors_.emplace_back("linear.w" + suffix, out_rows, in_rows);
    tensors_.emplace_back("linear.b" + suffix, out_rows, 1);
  }
}

grad::Node* LinearForecaster::forward(grad::Graph& g, grad::Node* input) {
  if (!per_channel_) {
    return g.affine(g.param(tensors_[0]), input, g.param(tensors_[1]));
  }
  grad::Node* out = nullptr;
  for (int j = 0; j < channels_; ++j) {
    grad::Node* col = g.matmul(input, g.constant(column_selector(channels_, j)));
    grad::Node* y = g.affine(g.param(tensors_[2 * j]), col, g.param(tensors_[2 * j + 1]));
    grad::Node* placed = g.matmul(y, g.constant(column_placer(channels_, j)));
    out = out ? g.add(out, placed) : placed;
  }
  return out;
}

std::vector<grad::ParamTensor*> LinearForecaster::params() {
  std::vector<grad::ParamTensor*> out;
  for (auto& t : tensors_) out.push_back(&t);
  return out;
}

void LinearForecaster::init(std::uint64_t) {
  // Zero start: the untrained map predicts the (standardized) mean, and
  // under CyclicNorm the initial forecast is exactly the phase statistics.
  for (auto& t : tensors_) t.value.zero();
}

DLinearForecaster::DLinearForecaster(int in_rows, int out_rows, int channels,
                                     const ModelArgs& args)
    : Forecaster(in_rows, out_rows, channels), kernel_(args.kernel),
      per_channel_(args.per_channel) {
  if (kernel_ < 1 || kernel_ % 2 == 0) throw ConfigError("dlinear kernel must be odd and >= 1");
  if (in_rows < kernel_) {
    throw ConfigError("dlinear needs input length >= kernel (" + std::to_string(kernel_) + ")");
  }
  const int heads = per_channel_ ? channels : 1;
  for (int h = 0; h < heads; ++h) {
    const std::string suffix = per_channel_ ? "." + std::to_string(h) : "";
    tensors_.emplace_back("dlinear.w_trend" + suffix, out_rows, in_rows);
    tensors_.emplace_back("dlinear.w_seasonal" + suffix, out_rows, in_rows);
    tensors_.emplace_back("dlinear.b" + suffix, out_rows, 1);
  }
}

grad::Node* DLinearForecaster::forward(grad::Graph& g, grad::Node* input) {
  grad::Node* trend = g.moving_average(input, kernel_);
  grad::Node* seasonal = g.scale_add(input, 1.0, trend, -1.0);
  if (!per_channel_) {
    grad::Node* t = g.matmul(g.param(tensors_[0]), trend);
    grad::Node* s = g.affine(g.param(tensors_[1]), seasonal, g.param(tensors_[2]));
    return g.add(t, s);
  }
  grad::Node* out = nullptr;
  for (int j = 0; j < channels_; ++j) {
    grad::Node* selector = g.constant(column_selector(channels_, j));
    grad::Node* t = g.matmul(g.param(tensors_[3 * j]), g.matmul(trend, selector));
    grad::Node* s =
        g.affine(g.param(tensors_[3 * j + 1]), g.matmul(seasonal, selector), g.param(tensors_[3 * j + 2]));
    grad::Node* placed = g.matmul(g.add(t, s), g.constant(column_placer(channels_, j)));
    out = out ? g.add(out, placed) : placed;
  }
  return out;
}

std::vector<grad::ParamTensor*> DLinearForecaster::params() {
  std::vector<grad::ParamTensor*> out;
  for (auto& t : tensors_) out.push_back(&t);
  return out;
}

void DLinearForecaster::init(std::uint64_t) {
  for (auto& t : tensors_) t.value.zero();
}

MlpForecaster::MlpForecaster(int in_rows, int out_rows, int channels, const ModelArgs& args)
    : Forecaster(in_rows, out_rows, channels), hidden_(args.hidden) {
  if (hidden_ < 1) throw ConfigError("mlp hidden width must be >= 1");
  tensors_.emplace_back("mlp.w1", hidden_, in_rows);
  tensors_.emplace_back("mlp.b1", hidden_, 1);
  tensors_.emplace_back("mlp.w2", out_rows, hidden_);
  tensors_.emplace_back("mlp.b2", out_rows, 1);
}

grad::Node* MlpForecaster::forward(grad::Graph& g, grad::Node* input) {
  grad::Node* h = g.affine(g.param(tensors_[0]), input, g.param(tensors_[1]));
  grad::Node* a = g.tanh(h);
  return g.affine(g.param(tensors_[2]), a, g.param(tensors_[3]));
}

std::vector<grad::ParamTensor*> MlpForecaster::params() {
  std::vector<grad::ParamTensor*> out;
  for (auto& t : tensors_) out.push_back(&t);
  return out;
}

void MlpForecaster::init(std::uint64_t seed) {
  Rng rng(seed);
  fill_fan_in(tensors_[0], in_rows_, rng);
  fill_fan_in(tensors_[1], in_rows_, rng);
  fill_fan_in(tensors_[2], hidden_, rng);
  fill_fan_in(tensors_[3], hidden_, rng);
}

std::unique_ptr<Forecaster> make_forecaster(const std::string& kind, int in_rows, int out_rows,
                                            int channels, const ModelArgs& args) {
  if (kind == "persistence") {
    return std::make_unique<PersistenceForecaster>(in_rows, out_rows, channels);
  }
  if (kind == "linear") {
    return std::make_unique<LinearForecaster>(in_rows, out_rows, channels, args);
  }
  if (kind == "dlinear") {
    return std::make_unique<DLinearForecaster>(in_rows, out_rows, channels, args);
  }
  if (kind == "mlp") {
    return std::make_unique<MlpForecaster>(in_rows, out_rows, channels, args);
  }
  throw ConfigError("unknown model '" + kind + "' (want persistence|linear|dlinear|mlp)");
}

}  // namespace s2p
