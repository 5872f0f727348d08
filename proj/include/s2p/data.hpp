#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "s2p/matrix.hpp"

namespace s2p {

// Daily cycle length in hours. The whole pipeline downsamples peaks over
// this interval.
inline constexpr int kHoursPerDay = 24;

// Timestamp helpers. Timestamps are hours since 1970-01-01 00:00:00 (no
// timezone); frames only need the hour-of-day and strict hourly spacing.
std::int64_t parse_datetime_hours(const std::string& text);  // "YYYY-MM-DD HH:MM:SS"
std::string format_datetime_hours(std::int64_t hours);

// Hourly multivariate series. Rows are hours, columns are channels.
struct TimeSeriesFrame {
  std::int64_t start_hour = 0;  // epoch hour of row 0; rows are consecutive
  Matrix values;                // length x channels
  std::vector<std::string> channel_names;

  int length() const { return values.rows(); }
  int channels() const { return values.cols(); }
  int hour_of_day(int row) const {
    return static_cast<int>(((start_hour + row) % kHoursPerDay + kHoursPerDay) % kHoursPerDay);
  }
  int channel_index(const std::string& name) const;  // -1 when absent
};

// One supervised windowed instance.
struct WindowSample {
  Matrix x;        // N x c history
  Matrix y;        // M x c future
  Matrix y_peak;   // (M/24) x c daily maxima of y
  int start_phase = 0;   // hour-of-day of x's first row
  int origin_index = 0;  // offset of x's first row in the source frame
};

// Deterministic synthetic stand-in for the hourly benchmark datasets:
// a daily sinusoid per channel (seeded phase offset), linear trend,
// gaussian noise, and an extra perturbation on each day's argmax hour.
struct SyntheticSpec {
  int length = 0;  // hours
  int channels = 1;
  double daily_amplitude = 1.0;
  double trend_slope = 0.0;  // per hour
  double noise_std = 0.0;
  double peak_jitter_std = 0.0;  // applied at each day's argmax hour only
  std::uint64_t seed = 0;
};

enum class MissingPolicy { kRejectRow, kForwardFill };

TimeSeriesFrame load_csv(const std::string& path, MissingPolicy policy = MissingPolicy::kForwardFill);
void write_csv(const TimeSeriesFrame& frame, const std::string& path);

TimeSeriesFrame gen_synthetic(const SyntheticSpec& spec);

struct SplitFrames {
  TimeSeriesFrame train;
  TimeSeriesFrame val;
  TimeSeriesFrame test;
};

// Contiguous chronological split with floor rounding; the remainder goes to
// test. min_split_hours lets the caller enforce that every split can hold at
// least one window (pass N+M).
SplitFrames split(const TimeSeriesFrame& frame, double train_ratio, double val_ratio,
                  double test_ratio, int min_split_hours = 0);

// Dataset-level z-scoring fitted on train only (population std, floored).
struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> stddev;  // >= kStandardizeFloor
};

inline constexpr double kStandardizeFloor = 1e-8;

ChannelStats compute_channel_stats(const TimeSeriesFrame& train);
TimeSeriesFrame apply_standardize(const TimeSeriesFrame& frame, const ChannelStats& stats);

std::vector<WindowSample> make_windows(const TimeSeriesFrame& frame, int n_hours, int m_hours,
                                       int stride);

// Daily maxima per channel; y must have a row count divisible by 24.
Matrix extract_peak(const Matrix& y);

// Daily-max downsampling of a whole frame (length must divide by 24).
Matrix extract_peak_series(const TimeSeriesFrame& frame);

// Biased autocorrelation estimate plus the 5% white-noise significance
// limit 1.96/sqrt(n). Index k of the returned vector is r(k), r(0) == 1.
struct AcfResult {
  std::vector<double> values;  // size max_lag + 1
  double significance_limit = 0.0;
};

AcfResult acf(const std::vector<double>& series, int max_lag);

// Dataset retrieval with a sha256-checked local cache.
// Cache layout: <cache_dir>/<name>.csv and <cache_dir>/<name>.sha256.
// Known names (ETTh1, ETTh2) have default URLs; everything else needs url.
std::string fetch_dataset(const std::string& name, const std::string& url,
                          const std::string& cache_dir);
std::string sha256_file(const std::string& path);

}  // namespace s2p
