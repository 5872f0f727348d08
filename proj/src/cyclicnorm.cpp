#include "s2p/cyclicnorm.hpp"

#include <algorithm>
#include <cmath>

#include "s2p/data.hpp"
#include "s2p/errors.hpp"

namespace s2p {

namespace {

void check_anchor(int anchor) {
  if (anchor < 0 || anchor >= kHoursPerDay) {
    throw AlignmentError("anchor phase " + std::to_string(anchor) + " outside [0, 24)");
  }
}

}  // namespace

PhaseStats compute_phase_stats(const Matrix& x, int anchor_phase) {
  check_anchor(anchor_phase);
  if (x.rows() == 0 || x.rows() % kHoursPerDay != 0) {
    throw ShapeError("phase stats need a row count that is a positive multiple of 24, got " +
                     std::to_string(x.rows()));
  }
  const int c = x.cols();
  const int days = x.rows() / kHoursPerDay;
  PhaseStats stats;
  stats.anchor_phase = anchor_phase;
  stats.source_rows = x.rows();
  stats.means = Matrix(kHoursPerDay, c);
  stats.stds = Matrix(kHoursPerDay, c);

  for (int r = 0; r < x.rows(); ++r) {
    const int phase = (anchor_phase + r) % kHoursPerDay;
    for (int j = 0; j < c; ++j) stats.means(phase, j) += x(r, j);
  }
  for (int i = 0; i < kHoursPerDay; ++i) {
    for (int j = 0; j < c; ++j) stats.means(i, j) /= days;
  }
  for (int r = 0; r < x.rows(); ++r) {
    const int phase = (anchor_phase + r) % kHoursPerDay;
    for (int j = 0; j < c; ++j) {
      const double d = x(r, j) - stats.means(phase, j);
      stats.stds(phase, j) += d * d;
    }
  }
  for (int i = 0; i < kHoursPerDay; ++i) {
    for (int j = 0; j < c; ++j) {
      stats.stds(i, j) = std::max(std::sqrt(stats.stds(i, j) / days), kPhaseStdFloor);
    }
  }
  return stats;
}

Matrix normalize(const Matrix& x, const PhaseStats& stats) {
  if (x.rows() != stats.source_rows || x.cols() != stats.means.cols()) {
    throw AlignmentError("normalize: window shape does not match the statistics' source window");
  }
  Matrix out(x.rows(), x.cols());
  for (int r = 0; r < x.rows(); ++r) {
    const int phase = (stats.anchor_phase + r) % kHoursPerDay;
    for (int j = 0; j < x.cols(); ++j) {
      out(r, j) = (x(r, j) - stats.means(phase, j)) / stats.stds(phase, j);
    }
  }
  return out;
}

Matrix denormalize(const Matrix& yn, const PhaseStats& stats, int forecast_anchor_phase) {
  check_anchor(forecast_anchor_phase);
  if (forecast_anchor_phase != (stats.anchor_phase + stats.source_rows) % kHoursPerDay) {
    throw AlignmentError("denormalize: forecast anchor does not continue the input window's cycle");
  }
  if (yn.cols() != stats.means.cols()) {
    throw AlignmentError("denormalize: channel count mismatch with statistics");
  }
  Matrix out(yn.rows(), yn.cols());
  for (int r = 0; r < yn.rows(); ++r) {
    const int phase = (forecast_anchor_phase + r) % kHoursPerDay;
    for (int j = 0; j < yn.cols(); ++j) {
      out(r, j) = yn(r, j) * stats.stds(phase, j) + stats.means(phase, j);
    }
  }
  return out;
}

Matrix phase_expansion(int rows, int anchor_phase) {
  check_anchor(anchor_phase);
  Matrix p(rows, kHoursPerDay);
  for (int r = 0; r < rows; ++r) p(r, (anchor_phase + r) % kHoursPerDay) = 1.0;
  return p;
}

grad::Node* denormalize_node(grad::Graph& g, grad::Node* yn, grad::Node* mu, grad::Node* sigma,
                             int forecast_anchor_phase) {
  grad::Node* p = g.constant(phase_expansion(yn->value.rows(), forecast_anchor_phase));
  grad::Node* sigma_rows = g.matmul(p, sigma);
  grad::Node* mu_rows = g.matmul(p, mu);
  return g.add(g.mul(yn, sigma_rows), mu_rows);
}

ShiftKind shift_kind_from_string(const std::string& s) {
  if (s == "identity") return ShiftKind::kIdentity;
  if (s == "affine") return ShiftKind::kAffine;
  if (s == "linear") return ShiftKind::kLinearMix;
  throw ConfigError("unknown cyclicnorm shift '" + s + "' (want identity|affine|linear)");
}

std::string to_string(ShiftKind kind) {
  switch (kind) {
    case ShiftKind::kIdentity: return "identity";
    case ShiftKind::kAffine: return "affine";
    case ShiftKind::kLinearMix: return "linear";
  }
  return "?";
}

ShiftParams::ShiftParams(ShiftKind kind, int channels) : kind_(kind), channels_(channels) {
  if (channels < 1) throw ShapeError("shift params need at least one channel");
  const int t = kHoursPerDay;
  switch (kind_) {
    case ShiftKind::kIdentity:
      break;  // no parameters
    case ShiftKind::kAffine: {
      tensors_.emplace_back("shift.scale_mu", t, channels);
      tensors_.emplace_back("shift.bias_mu", t, channels);
      tensors_.emplace_back("shift.scale_sigma", t, channels);
      tensors_.emplace_back("shift.bias_sigma", t, channels);
      tensors_[0].value.fill(1.0);
      tensors_[2].value.fill(1.0);
      break;
    }
    case ShiftKind::kLinearMix: {
      tensors_.emplace_back("shift.w_mu", t, t);
      tensors_.emplace_back("shift.b_mu", t, channels);
      tensors_.emplace_back("shift.w_sigma", t, t);
      tensors_.emplace_back("shift.b_sigma", t, channels);
      for (int i = 0; i < t; ++i) {
        tensors_[0].value(i, i) = 1.0;
        tensors_[2].value(i, i) = 1.0;
      }
      break;
    }
  }
}

std::vector<grad::ParamTensor*> ShiftParams::params() {
  std::vector<grad::ParamTensor*> out;
  out.reserve(tensors_.size());
  for (auto& t : tensors_) out.push_back(&t);
  return out;
}

PhaseStats ShiftParams::apply(const PhaseStats& stats) const {
  PhaseStats out = stats;
  switch (kind_) {
    case ShiftKind::kIdentity:
      return out;
    case ShiftKind::kAffine: {
      if (stats.means.cols() != channels_) throw ShapeError("shift params channel mismatch");
      for (int i = 0; i < kHoursPerDay; ++i) {
        for (int j = 0; j < channels_; ++j) {
          out.means(i, j) = tensors_[0].value(i, j) * stats.means(i, j) + tensors_[1].value(i, j);
          out.stds(i, j) = std::max(
              tensors_[2].value(i, j) * stats.stds(i, j) + tensors_[3].value(i, j), kPhaseStdFloor);
        }
      }
      return out;
    }
    case ShiftKind::kLinearMix: {
      if (stats.means.cols() != channels_) throw ShapeError("shift params channel mismatch");
      Matrix mu = matmul(tensors_[0].value, stats.means);
      Matrix sigma = matmul(tensors_[2].value, stats.stds);
      for (int i = 0; i < kHoursPerDay; ++i) {
        for (int j = 0; j < channels_; ++j) {
          out.means(i, j) = mu(i, j) + tensors_[1].value(i, j);
          out.stds(i, j) = std::max(sigma(i, j) + tensors_[3].value(i, j), kPhaseStdFloor);
        }
      }
      return out;
    }
  }
  return out;
}

std::pair<grad::Node*, grad::Node*> ShiftParams::apply_node(grad::Graph& g,
                                                            const PhaseStats& stats) {
  grad::Node* mu = g.constant(stats.means);
  grad::Node* sigma = g.constant(stats.stds);
  switch (kind_) {
    case ShiftKind::kIdentity:
      return {mu, sigma};
    case ShiftKind::kAffine: {
      grad::Node* mu_out = g.add(g.mul(g.param(tensors_[0]), mu), g.param(tensors_[1]));
      grad::Node* sigma_out = g.clamp_min(
          g.add(g.mul(g.param(tensors_[2]), sigma), g.param(tensors_[3])), kPhaseStdFloor);
      return {mu_out, sigma_out};
    }
    case ShiftKind::kLinearMix: {
      grad::Node* mu_out = g.add(g.matmul(g.param(tensors_[0]), mu), g.param(tensors_[1]));
      grad::Node* sigma_out = g.clamp_min(
          g.add(g.matmul(g.param(tensors_[2]), sigma), g.param(tensors_[3])), kPhaseStdFloor);
      return {mu_out, sigma_out};
    }
  }
  return {mu, sigma};
}

}  // namespace s2p
