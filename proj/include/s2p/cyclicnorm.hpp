#pragma once

#include <string>
#include <utility>
#include <vector>

#include "s2p/gradengine.hpp"
#include "s2p/matrix.hpp"

namespace s2p {

inline constexpr double kPhaseStdFloor = 1e-5;

// Per hour-of-day statistics of one input window. Row i of means/stds is
// the population mean/std of the window rows that fall on hour-of-day i.
struct PhaseStats {
  Matrix means;  // 24 x c
  Matrix stds;   // 24 x c, every entry >= kPhaseStdFloor
  int anchor_phase = 0;  // hour-of-day of the window's first row
  int source_rows = 0;   // row count of the window the stats came from
};

PhaseStats compute_phase_stats(const Matrix& x, int anchor_phase);

// X'[r][j] = (X[r][j] - mu_phase(r)[j]) / sigma_phase(r)[j]
Matrix normalize(const Matrix& x, const PhaseStats& stats);

// Y[r][j] = Y'[r][j] * sigma'_phase(r)[j] + mu'_phase(r)[j], with phases
// continuing the input window's hour-of-day cycle. The caller-supplied
// forecast anchor must equal (stats.anchor_phase + stats.source_rows) % 24.
Matrix denormalize(const Matrix& yn, const PhaseStats& stats, int forecast_anchor_phase);

// 0/1 matrix P (rows x 24) with P[r][(anchor + r) % 24] = 1; P * stats
// expands hour-of-day statistics onto consecutive window rows.
Matrix phase_expansion(int rows, int anchor_phase);

// Graph-side denormalization, differentiable with respect to the forecast
// and the (possibly shifted) statistics nodes.
grad::Node* denormalize_node(grad::Graph& g, grad::Node* yn, grad::Node* mu, grad::Node* sigma,
                             int forecast_anchor_phase);

// The non-stationary shifting module: identity, an elementwise affine map
// per phase, or a phase-mixing linear layer shared across channels.
// Shifted stds are clamped at kPhaseStdFloor. All variants initialize
// neutrally, so an untrained shift is exactly the identity.
enum class ShiftKind { kIdentity, kAffine, kLinearMix };

ShiftKind shift_kind_from_string(const std::string& s);
std::string to_string(ShiftKind kind);

class ShiftParams {
 public:
  ShiftParams() = default;
  ShiftParams(ShiftKind kind, int channels);

  ShiftKind kind() const { return kind_; }
  int channels() const { return channels_; }

  std::vector<grad::ParamTensor*> params();

  // Value-level application (used by tests and non-training paths).
  PhaseStats apply(const PhaseStats& stats) const;

  // Graph-level application; returns shifted (means, stds) nodes.
  std::pair<grad::Node*, grad::Node*> apply_node(grad::Graph& g, const PhaseStats& stats);

 private:
  ShiftKind kind_ = ShiftKind::kIdentity;
  int channels_ = 0;
  std::vector<grad::ParamTensor> tensors_;
};

}  // namespace s2p
