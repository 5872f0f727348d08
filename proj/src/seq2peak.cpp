#include "s2p/seq2peak.hpp"

#include "s2p/errors.hpp"

namespace s2p {

Paradigm paradigm_from_string(const std::string& s) {
  if (s == "pfp") return Paradigm::kPfp;
  if (s == "sfp") return Paradigm::kSfp;
  if (s == "sfs") return Paradigm::kSfs;
  if (s == "seq2peak") return Paradigm::kSeq2Peak;
  throw ConfigError("unknown paradigm '" + s + "' (want pfp|sfp|sfs|seq2peak)");
}

std::string to_string(Paradigm p) {
  switch (p) {
    case Paradigm::kPfp: return "pfp";
    case Paradigm::kSfp: return "sfp";
    case Paradigm::kSfs: return "sfs";
    case Paradigm::kSeq2Peak: return "seq2peak";
  }
  return "?";
}

grad::Node* peak_decode(grad::Graph& g, grad::Node* forecast) {
  return g.maxpool_time(forecast, kHoursPerDay);
}

grad::Node* hybrid_loss(grad::Graph& g, grad::Node* forecast, grad::Node* target,
                        grad::Node* peak_forecast, grad::Node* peak_target, double alpha) {
  if (alpha < 0.0 || alpha > 1.0) {
    throw ParameterError("alpha must lie in [0, 1], got " + std::to_string(alpha));
  }
  grad::Node* l_seq = g.mse(forecast, target);
  grad::Node* l_peak = g.mse(peak_forecast, peak_target);
  return g.scale_add(l_seq, alpha, l_peak, 1.0 - alpha);
}

Pipeline::Pipeline(const PipelineSpec& spec) : spec_(spec) {
  if (spec.n_hours <= 0 || spec.n_hours % kHoursPerDay != 0 || spec.m_hours <= 0 ||
      spec.m_hours % kHoursPerDay != 0) {
    throw ConfigError("pipeline N and M must be positive multiples of 24 hours");
  }
  if (spec.channels < 1) throw ConfigError("pipeline needs at least one channel");

  const bool full_series = spec.paradigm == Paradigm::kSfs || spec.paradigm == Paradigm::kSeq2Peak;
  if (spec.alpha.has_value() && spec.paradigm != Paradigm::kSeq2Peak) {
    throw ConfigError("alpha only applies to the seq2peak paradigm");
  }
  if (spec.cyclicnorm.enabled && !full_series) {
    throw ConfigError("cyclicnorm applies only to sfs and seq2peak pipelines");
  }
  if (spec.alpha.has_value()) {
    if (*spec.alpha < 0.0 || *spec.alpha > 1.0) {
      throw ParameterError("alpha must lie in [0, 1], got " + std::to_string(*spec.alpha));
    }
    alpha_ = *spec.alpha;
  }

  int in_rows = spec.n_hours;
  int out_rows = spec.m_hours;
  switch (spec.paradigm) {
    case Paradigm::kPfp:
      in_rows = spec.n_hours / kHoursPerDay;
      out_rows = spec.m_hours / kHoursPerDay;
      break;
    case Paradigm::kSfp:
      out_rows = spec.m_hours / kHoursPerDay;
      break;
    case Paradigm::kSfs:
    case Paradigm::kSeq2Peak:
      break;
  }
  forecaster_ = make_forecaster(spec.model, in_rows, out_rows, spec.channels, spec.model_args);
  if (spec.cyclicnorm.enabled) {
    shift_ = ShiftParams(spec.cyclicnorm.shift, spec.channels);
  }
}

void Pipeline::init(std::uint64_t seed) { forecaster_->init(seed); }

std::vector<grad::ParamTensor*> Pipeline::params() {
  std::vector<grad::ParamTensor*> out = forecaster_->params();
  for (grad::ParamTensor* t : shift_.params()) out.push_back(t);
  return out;
}

Pipeline::Prepared Pipeline::prepare(const WindowSample& sample) const {
  if (sample.x.rows() != spec_.n_hours || sample.y.rows() != spec_.m_hours ||
      sample.x.cols() != spec_.channels) {
    throw ShapeError("sample does not match pipeline dimensions");
  }
  Prepared p;
  p.y = sample.y;
  p.y_peak = sample.y_peak;
  p.forecast_anchor = (sample.start_phase + spec_.n_hours) % kHoursPerDay;
  switch (spec_.paradigm) {
    case Paradigm::kPfp:
      p.model_input = extract_peak(sample.x);
      break;
    case Paradigm::kSfp:
      p.model_input = sample.x;
      break;
    case Paradigm::kSfs:
    case Paradigm::kSeq2Peak:
      if (spec_.cyclicnorm.enabled) {
        p.stats = compute_phase_stats(sample.x, sample.start_phase);
        p.has_stats = true;
        p.model_input = normalize(sample.x, p.stats);
      } else {
        p.model_input = sample.x;
      }
      break;
  }
  return p;
}

grad::Node* Pipeline::forecast_node(grad::Graph& g, const Prepared& p) {
  grad::Node* out = forecaster_->forward(g, g.constant(p.model_input));
  if (p.has_stats) {
    auto [mu, sigma] = shift_.apply_node(g, p.stats);
    out = denormalize_node(g, out, mu, sigma, p.forecast_anchor);
  }
  return out;
}

grad::Node* Pipeline::build_loss(grad::Graph& g, const Prepared& p) {
  switch (spec_.paradigm) {
    case Paradigm::kPfp:
    case Paradigm::kSfp: {
      grad::Node* peaks = forecast_node(g, p);
      return g.mse(peaks, g.constant(p.y_peak));
    }
    case Paradigm::kSfs: {
      grad::Node* forecast = forecast_node(g, p);
      return g.mse(forecast, g.constant(p.y));
    }
    case Paradigm::kSeq2Peak: {
      grad::Node* forecast = forecast_node(g, p);
      grad::Node* peaks = peak_decode(g, forecast);
      return hybrid_loss(g, forecast, g.constant(p.y), peaks, g.constant(p.y_peak), alpha_);
    }
  }
  throw Error("unreachable paradigm");
}

Matrix Pipeline::predict_peak(const Prepared& p) {
  grad::Graph g;
  switch (spec_.paradigm) {
    case Paradigm::kPfp:
    case Paradigm::kSfp:
      return forecast_node(g, p)->value;
    case Paradigm::kSfs:
      // Post-hoc daily max: outside the graph, no peak gradient exists.
      return extract_peak(forecast_node(g, p)->value);
    case Paradigm::kSeq2Peak:
      return peak_decode(g, forecast_node(g, p))->value;
  }
  throw Error("unreachable paradigm");
}

std::optional<Matrix> Pipeline::predict_sequence(const Prepared& p) {
  if (spec_.paradigm != Paradigm::kSfs && spec_.paradigm != Paradigm::kSeq2Peak) {
    return std::nullopt;
  }
  grad::Graph g;
  return forecast_node(g, p)->value;
}

Pipeline build_pipeline(const PipelineSpec& spec) { return Pipeline(spec); }

}  // namespace s2p
