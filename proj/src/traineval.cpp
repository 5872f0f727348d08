#include "s2p/traineval.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <thread>

#include "s2p/errors.hpp"
#include "s2p/rng.hpp"

namespace s2p {

void TrainConfig::validate() const {
  if (learning_rate <= 0) throw ConfigError("learning_rate must be > 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (patience < 1) throw ConfigError("patience must be >= 1");
  if (max_epochs < 0) throw ConfigError("max_epochs must be >= 0");
}

SampleSet build_sample_set(const TimeSeriesFrame& standardized, const TimeSeriesFrame& raw,
                           int n_hours, int m_hours, int stride) {
  if (standardized.length() != raw.length() || standardized.channels() != raw.channels()) {
    throw ShapeError("standardized and raw frames must align");
  }
  SampleSet out;
  out.samples = make_windows(standardized, n_hours, m_hours, stride);
  out.raw_peaks.reserve(out.samples.size());
  for (const WindowSample& s : out.samples) {
    Matrix raw_y(m_hours, raw.channels());
    for (int r = 0; r < m_hours; ++r) {
      for (int j = 0; j < raw.channels(); ++j) {
        raw_y(r, j) = raw.values(s.origin_index + n_hours + r, j);
      }
    }
    out.raw_peaks.push_back(extract_peak(raw_y));
  }
  return out;
}

namespace {

// Adam/SGD over the pipeline's parameter list. State order follows the
// stable params() order, so training is reproducible bit for bit.
class Optimizer {
 public:
  Optimizer(const TrainConfig& cfg, const std::vector<grad::ParamTensor*>& params)
      : cfg_(cfg) {
    if (cfg.optimizer == TrainConfig::Optimizer::kAdam) {
      for (const grad::ParamTensor* p : params) {
        m_.emplace_back(p->value.rows(), p->value.cols());
        v_.emplace_back(p->value.rows(), p->value.cols());
      }
    }
  }

  void step(const std::vector<grad::ParamTensor*>& params) {
    if (cfg_.optimizer == TrainConfig::Optimizer::kSgd) {
      for (grad::ParamTensor* p : params) axpy(p->value, -cfg_.learning_rate, p->grad);
      return;
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
    for (std::size_t k = 0; k < params.size(); ++k) {
      grad::ParamTensor& p = *params[k];
      double* m = m_[k].data();
      double* v = v_[k].data();
      double* w = p.value.data();
      const double* g = p.grad.data();
      const std::size_t n = p.value.size();
      for (std::size_t i = 0; i < n; ++i) {
        m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
        v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        w[i] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.eps);
      }
    }
  }

 private:
  TrainConfig cfg_;
  std::vector<Matrix> m_, v_;
  long t_ = 0;
};

std::vector<Matrix> snapshot(const std::vector<grad::ParamTensor*>& params) {
  std::vector<Matrix> out;
  out.reserve(params.size());
  for (const grad::ParamTensor* p : params) out.push_back(p->value);
  return out;
}

void restore(const std::vector<grad::ParamTensor*>& params, const std::vector<Matrix>& snap) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = snap[i];
}

double validation_peak_mse(Pipeline& pipe, const std::vector<Pipeline::Prepared>& prepared,
                           const SampleSet& set, const ChannelStats& stats) {
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < prepared.size(); ++i) {
    const Matrix pred = pipe.predict_peak(prepared[i]);
    const Matrix& truth = set.raw_peaks[i];
    for (int d = 0; d < pred.rows(); ++d) {
      for (int j = 0; j < pred.cols(); ++j) {
        const double raw = pred(d, j) * stats.stddev[j] + stats.mean[j];
        const double diff = raw - truth(d, j);
        acc += diff * diff;
      }
    }
    count += pred.size();
  }
  return acc / static_cast<double>(count);
}

}  // namespace

TrainResult train(Pipeline& pipe, const SampleSet& train_set, const SampleSet& val_set,
                  const ChannelStats& stats, const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.empty() || val_set.empty()) {
    throw ConfigError("train and validation splits must hold at least one window each");
  }

  pipe.init(derive_seed(cfg.seed, 1));
  Rng shuffle_rng(derive_seed(cfg.seed, 2));

  std::vector<Pipeline::Prepared> train_prepared;
  train_prepared.reserve(train_set.size());
  for (const WindowSample& s : train_set.samples) train_prepared.push_back(pipe.prepare(s));
  std::vector<Pipeline::Prepared> val_prepared;
  val_prepared.reserve(val_set.size());
  for (const WindowSample& s : val_set.samples) val_prepared.push_back(pipe.prepare(s));

  const auto params = pipe.params();
  Optimizer opt(cfg, params);

  TrainResult result;
  result.best_val_peak_mse = std::numeric_limits<double>::infinity();
  std::vector<Matrix> best_params;
  int epochs_since_best = 0;

  std::vector<std::size_t> order(train_prepared.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t cursor = 0;
    while (cursor < order.size()) {
      const std::size_t batch_end = std::min(cursor + cfg.batch_size, order.size());
      const double batch_count = static_cast<double>(batch_end - cursor);
      for (grad::ParamTensor* p : params) p->zero_grad();
      double batch_loss = 0.0;
      for (std::size_t i = cursor; i < batch_end; ++i) {
        grad::Graph g;
        grad::Node* loss = pipe.build_loss(g, train_prepared[order[i]]);
        batch_loss += loss->value(0, 0);
        g.backward(loss);
      }
      if (!std::isfinite(batch_loss)) {
        throw DivergenceError("training diverged (non-finite loss) at epoch " +
                              std::to_string(epoch));
      }
      for (grad::ParamTensor* p : params) {
        double* gd = p->grad.data();
        for (std::size_t i = 0; i < p->grad.size(); ++i) gd[i] /= batch_count;
      }
      opt.step(params);
      epoch_loss += batch_loss;
      cursor = batch_end;
    }
    epoch_loss /= static_cast<double>(order.size());

    const double val_mse = validation_peak_mse(pipe, val_prepared, val_set, stats);
    result.history.push_back({epoch, epoch_loss, val_mse});

    if (val_mse < result.best_val_peak_mse) {
      result.best_val_peak_mse = val_mse;
      result.best_epoch = epoch;
      best_params = snapshot(params);
      epochs_since_best = 0;
    } else {
      ++epochs_since_best;
      if (epochs_since_best >= cfg.patience) break;
    }
  }

  if (!best_params.empty()) restore(params, best_params);
  return result;
}

PeakMetrics evaluate_peaks(Pipeline& pipe, const SampleSet& test_set, const ChannelStats& stats,
                           std::vector<TraceRow>* traces) {
  if (test_set.empty()) throw ConfigError("test split holds no windows");
  double sq = 0.0, ab = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    const Pipeline::Prepared p = pipe.prepare(test_set.samples[i]);
    const Matrix pred = pipe.predict_peak(p);
    const Matrix& truth = test_set.raw_peaks[i];
    if (!pred.same_shape(truth)) throw ShapeError("prediction/target peak shape mismatch");
    for (int d = 0; d < pred.rows(); ++d) {
      for (int j = 0; j < pred.cols(); ++j) {
        const double raw = pred(d, j) * stats.stddev[j] + stats.mean[j];
        const double diff = raw - truth(d, j);
        sq += diff * diff;
        ab += std::fabs(diff);
        if (traces) traces->push_back({static_cast<int>(i), d, j, truth(d, j), raw});
      }
    }
    count += pred.size();
  }
  PeakMetrics m;
  m.mse = sq / static_cast<double>(count);
  m.mae = ab / static_cast<double>(count);
  if (!std::isfinite(m.mse) || !std::isfinite(m.mae)) {
    throw DivergenceError("evaluation produced non-finite metrics");
  }
  return m;
}

namespace {

constexpr char kCheckpointMagic[4] = {'S', '2', 'P', 'K'};
constexpr std::uint16_t kCheckpointVersion = 1;

template <typename T>
void write_le(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
void read_le(std::ifstream& in, T& value) {
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw Error("checkpoint truncated");
}

}  // namespace

void save_checkpoint(const std::string& path, Pipeline& pipe) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint '" + path + "'");
  out.write(kCheckpointMagic, 4);
  write_le(out, kCheckpointVersion);
  const auto params = pipe.params();
  write_le(out, static_cast<std::uint32_t>(params.size()));
  for (const grad::ParamTensor* p : params) {
    write_le(out, static_cast<std::uint32_t>(p->name.size()));
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    write_le(out, static_cast<std::uint32_t>(p->value.rows()));
    write_le(out, static_cast<std::uint32_t>(p->value.cols()));
    out.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(p->value.size() * sizeof(double)));
  }
  if (!out) throw Error("write failure on checkpoint '" + path + "'");
}

void load_checkpoint(const std::string& path, Pipeline& pipe) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint '" + path + "'");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kCheckpointMagic, 4) != 0) {
    throw Error("'" + path + "' is not an S2PK checkpoint");
  }
  std::uint16_t version;
  read_le(in, version);
  if (version != kCheckpointVersion) {
    throw Error("unsupported checkpoint version " + std::to_string(version));
  }
  std::uint32_t count;
  read_le(in, count);
  const auto params = pipe.params();
  if (count != params.size()) {
    throw Error("checkpoint holds " + std::to_string(count) + " tensors, pipeline expects " +
                std::to_string(params.size()));
  }
  for (grad::ParamTensor* p : params) {
    std::uint32_t name_len;
    read_le(in, name_len);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    std::uint32_t rows, cols;
    read_le(in, rows);
    read_le(in, cols);
    if (!in || name != p->name || static_cast<int>(rows) != p->value.rows() ||
        static_cast<int>(cols) != p->value.cols()) {
      throw Error("checkpoint tensor '" + name + "' does not match pipeline tensor '" + p->name +
                  "'");
    }
    in.read(reinterpret_cast<char*>(p->value.data()),
            static_cast<std::streamsize>(p->value.size() * sizeof(double)));
    if (!in) throw Error("checkpoint truncated in tensor '" + name + "'");
  }
}

void run_parallel(std::vector<std::function<void()>>& tasks, int jobs) {
  if (jobs < 1) jobs = 1;
  if (jobs == 1 || tasks.size() <= 1) {
    for (auto& t : tasks) t();
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      tasks[i]();
    }
  };
  std::vector<std::thread> pool;
  const int n = std::min<int>(jobs, static_cast<int>(tasks.size()));
  pool.reserve(n);
  for (int i = 0; i < n; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

}  // namespace s2p
