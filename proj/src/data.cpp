#include "s2p/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "s2p/errors.hpp"
#include "s2p/rng.hpp"

namespace s2p {

namespace {

// Days since 1970-01-01 for a civil date (Howard Hinnant's algorithm).
std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(yy + (m <= 2));
}

bool parse_int_field(const char* s, int len, int& out) {
  auto [ptr, ec] = std::from_chars(s, s + len, out);
  return ec == std::errc() && ptr == s + len;
}

}  // namespace

std::int64_t parse_datetime_hours(const std::string& text) {
  // Expected layout: YYYY-MM-DD HH:MM:SS
  int y, mo, d, h, mi, se;
  if (text.size() != 19 || text[4] != '-' || text[7] != '-' || text[10] != ' ' ||
      text[13] != ':' || text[16] != ':' || !parse_int_field(text.data(), 4, y) ||
      !parse_int_field(text.data() + 5, 2, mo) || !parse_int_field(text.data() + 8, 2, d) ||
      !parse_int_field(text.data() + 11, 2, h) || !parse_int_field(text.data() + 14, 2, mi) ||
      !parse_int_field(text.data() + 17, 2, se)) {
    throw ParseError("unparsable timestamp '" + text + "'");
  }
  if (mi != 0 || se != 0) throw ParseError("timestamp '" + text + "' is not on an hour boundary");
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23) {
    throw ParseError("timestamp '" + text + "' out of range");
  }
  return days_from_civil(y, mo, d) * 24 + h;
}

std::string format_datetime_hours(std::int64_t hours) {
  std::int64_t days = hours / 24;
  int h = static_cast<int>(hours % 24);
  if (h < 0) {
    h += 24;
    days -= 1;
  }
  int y, mo, d;
  civil_from_days(days, y, mo, d);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d %02d:00:00", y, mo, d, h);
  return buf;
}

int TimeSeriesFrame::channel_index(const std::string& name) const {
  for (std::size_t i = 0; i < channel_names.size(); ++i) {
    if (channel_names[i] == name) return static_cast<int>(i);
  }
  return -1;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

TimeSeriesFrame load_csv(const std::string& path, MissingPolicy policy) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw ParseError("'" + path + "' is empty");
  const auto header = split_csv_line(line);
  if (header.size() < 2) throw ParseError("'" + path + "' needs a date column plus data columns");
  if (header[0] != "date") throw ParseError("first column must be named 'date', got '" + header[0] + "'");

  const int channels = static_cast<int>(header.size()) - 1;
  std::vector<std::string> names(header.begin() + 1, header.end());

  std::vector<std::int64_t> hours;
  std::vector<double> flat;
  std::vector<bool> seen(channels, false);
  int row_no = 1;  // header was row 0
  while (std::getline(in, line)) {
    if (line.empty()) {
      ++row_no;
      continue;
    }
    const auto fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) != channels + 1) {
      throw ParseError("row " + std::to_string(row_no) + ": expected " +
                       std::to_string(channels + 1) + " fields, got " +
                       std::to_string(fields.size()));
    }
    hours.push_back(parse_datetime_hours(fields[0]));
    for (int j = 0; j < channels; ++j) {
      const std::string& cell = fields[j + 1];
      if (cell.empty()) {
        if (policy == MissingPolicy::kRejectRow) {
          throw ParseError("row " + std::to_string(row_no) + ", column '" + names[j] +
                           "': missing value");
        }
        if (flat.empty() || hours.size() == 1) {
          throw ParseError("row " + std::to_string(row_no) + ", column '" + names[j] +
                           "': missing value with nothing to forward-fill from");
        }
        flat.push_back(flat[flat.size() - channels]);
        continue;
      }
      double v;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        throw ParseError("row " + std::to_string(row_no) + ", column '" + names[j] +
                         "': non-numeric cell '" + cell + "'");
      }
      flat.push_back(v);
      seen[j] = true;
    }
    ++row_no;
  }
  const int length = static_cast<int>(hours.size());
  if (length == 0) throw ParseError("'" + path + "' has no data rows");
  for (int j = 0; j < channels; ++j) {
    if (!seen[j]) throw ParseError("channel '" + names[j] + "' has no values at all");
  }
  for (int i = 1; i < length; ++i) {
    if (hours[i] - hours[i - 1] != 1) {
      throw ParseError("rows " + std::to_string(i) + ".." + std::to_string(i + 1) +
                       ": timestamps are not strictly increasing with 1-hour spacing");
    }
  }

  TimeSeriesFrame frame;
  frame.start_hour = hours[0];
  frame.channel_names = std::move(names);
  frame.values = Matrix(length, channels);
  std::copy(flat.begin(), flat.end(), frame.values.data());
  return frame;
}

void write_csv(const TimeSeriesFrame& frame, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << "date";
  for (const auto& name : frame.channel_names) out << ',' << name;
  out << '\n';
  out.precision(17);
  for (int r = 0; r < frame.length(); ++r) {
    out << format_datetime_hours(frame.start_hour + r);
    for (int j = 0; j < frame.channels(); ++j) out << ',' << frame.values(r, j);
    out << '\n';
  }
}

TimeSeriesFrame gen_synthetic(const SyntheticSpec& spec) {
  if (spec.length < 2 * kHoursPerDay) throw ParameterError("synthetic length must be >= 48 hours");
  if (spec.channels < 1) throw ParameterError("synthetic channels must be >= 1");
  if (spec.noise_std < 0 || spec.peak_jitter_std < 0) {
    throw ParameterError("synthetic std parameters must be >= 0");
  }

  Rng rng(spec.seed);
  std::vector<int> phase_offset(spec.channels);
  for (int j = 0; j < spec.channels; ++j) phase_offset[j] = rng.uniform_int(0, kHoursPerDay - 1);

  TimeSeriesFrame frame;
  frame.start_hour = 0;  // midnight-aligned: hour_of_day(r) == r mod 24
  frame.values = Matrix(spec.length, spec.channels);
  frame.channel_names.resize(spec.channels);
  for (int j = 0; j < spec.channels; ++j) frame.channel_names[j] = "ch" + std::to_string(j);

  for (int t = 0; t < spec.length; ++t) {
    for (int j = 0; j < spec.channels; ++j) {
      const int phase = (t + phase_offset[j]) % kHoursPerDay;
      double v = spec.daily_amplitude * std::sin(2.0 * M_PI * phase / kHoursPerDay) +
                 spec.trend_slope * t;
      if (spec.noise_std > 0) v += rng.normal(0.0, spec.noise_std);
      frame.values(t, j) = v;
    }
  }

  if (spec.peak_jitter_std > 0) {
    const int days = spec.length / kHoursPerDay;
    for (int d = 0; d < days; ++d) {
      for (int j = 0; j < spec.channels; ++j) {
        int arg = d * kHoursPerDay;
        for (int h = 1; h < kHoursPerDay; ++h) {
          const int t = d * kHoursPerDay + h;
          if (frame.values(t, j) > frame.values(arg, j)) arg = t;
        }
        frame.values(arg, j) += rng.normal(0.0, spec.peak_jitter_std);
      }
    }
  }
  return frame;
}

namespace {

TimeSeriesFrame slice_frame(const TimeSeriesFrame& frame, int begin, int count) {
  TimeSeriesFrame out;
  out.start_hour = frame.start_hour + begin;
  out.channel_names = frame.channel_names;
  out.values = Matrix(count, frame.channels());
  for (int r = 0; r < count; ++r) {
    for (int j = 0; j < frame.channels(); ++j) out.values(r, j) = frame.values(begin + r, j);
  }
  return out;
}

}  // namespace

SplitFrames split(const TimeSeriesFrame& frame, double train_ratio, double val_ratio,
                  double test_ratio, int min_split_hours) {
  if (train_ratio <= 0 || val_ratio <= 0 || test_ratio <= 0) {
    throw ConfigError("split ratios must be positive");
  }
  if (std::fabs(train_ratio + val_ratio + test_ratio - 1.0) > 1e-9) {
    throw ConfigError("split ratios must sum to 1");
  }
  const int length = frame.length();
  const int n_train = static_cast<int>(std::floor(length * train_ratio));
  const int n_val = static_cast<int>(std::floor(length * val_ratio));
  const int n_test = length - n_train - n_val;  // remainder goes to test
  if (n_train < min_split_hours || n_val < min_split_hours || n_test < min_split_hours) {
    throw ConfigError("split too small: need >= " + std::to_string(min_split_hours) +
                      " hours per split, got " + std::to_string(n_train) + "/" +
                      std::to_string(n_val) + "/" + std::to_string(n_test));
  }
  SplitFrames out;
  out.train = slice_frame(frame, 0, n_train);
  out.val = slice_frame(frame, n_train, n_val);
  out.test = slice_frame(frame, n_train + n_val, n_test);
  return out;
}

ChannelStats compute_channel_stats(const TimeSeriesFrame& train) {
  if (train.length() == 0) throw ConfigError("cannot standardize an empty train split");
  const int c = train.channels();
  const int n = train.length();
  ChannelStats stats;
  stats.mean.assign(c, 0.0);
  stats.stddev.assign(c, 0.0);
  for (int r = 0; r < n; ++r) {
    for (int j = 0; j < c; ++j) stats.mean[j] += train.values(r, j);
  }
  for (int j = 0; j < c; ++j) stats.mean[j] /= n;
  for (int r = 0; r < n; ++r) {
    for (int j = 0; j < c; ++j) {
      const double d = train.values(r, j) - stats.mean[j];
      stats.stddev[j] += d * d;
    }
  }
  for (int j = 0; j < c; ++j) {
    stats.stddev[j] = std::max(std::sqrt(stats.stddev[j] / n), kStandardizeFloor);
  }
  return stats;
}

TimeSeriesFrame apply_standardize(const TimeSeriesFrame& frame, const ChannelStats& stats) {
  if (static_cast<int>(stats.mean.size()) != frame.channels()) {
    throw ShapeError("channel stats do not match frame channel count");
  }
  TimeSeriesFrame out = frame;
  for (int r = 0; r < out.length(); ++r) {
    for (int j = 0; j < out.channels(); ++j) {
      out.values(r, j) = (frame.values(r, j) - stats.mean[j]) / stats.stddev[j];
    }
  }
  return out;
}

Matrix extract_peak(const Matrix& y) {
  if (y.rows() % kHoursPerDay != 0) {
    throw ShapeError("peak extraction needs a row count divisible by 24, got " +
                     std::to_string(y.rows()));
  }
  const int days = y.rows() / kHoursPerDay;
  Matrix out(days, y.cols());
  for (int d = 0; d < days; ++d) {
    for (int j = 0; j < y.cols(); ++j) {
      double m = y(d * kHoursPerDay, j);
      for (int h = 1; h < kHoursPerDay; ++h) m = std::max(m, y(d * kHoursPerDay + h, j));
      out(d, j) = m;
    }
  }
  return out;
}

Matrix extract_peak_series(const TimeSeriesFrame& frame) { return extract_peak(frame.values); }

std::vector<WindowSample> make_windows(const TimeSeriesFrame& frame, int n_hours, int m_hours,
                                       int stride) {
  if (n_hours <= 0 || n_hours % kHoursPerDay != 0 || m_hours <= 0 || m_hours % kHoursPerDay != 0) {
    throw ConfigError("window lengths must be positive multiples of 24 hours");
  }
  if (stride < 1) throw ConfigError("window stride must be >= 1");
  if (n_hours + m_hours > frame.length()) {
    throw ConfigError("frame too short for one window: need " + std::to_string(n_hours + m_hours) +
                      " hours, have " + std::to_string(frame.length()));
  }
  std::vector<WindowSample> samples;
  const int c = frame.channels();
  for (int origin = 0; origin + n_hours + m_hours <= frame.length(); origin += stride) {
    WindowSample s;
    s.origin_index = origin;
    s.start_phase = frame.hour_of_day(origin);
    s.x = Matrix(n_hours, c);
    s.y = Matrix(m_hours, c);
    for (int r = 0; r < n_hours; ++r) {
      for (int j = 0; j < c; ++j) s.x(r, j) = frame.values(origin + r, j);
    }
    for (int r = 0; r < m_hours; ++r) {
      for (int j = 0; j < c; ++j) s.y(r, j) = frame.values(origin + n_hours + r, j);
    }
    s.y_peak = extract_peak(s.y);
    samples.push_back(std::move(s));
  }
  return samples;
}

AcfResult acf(const std::vector<double>& series, int max_lag) {
  const int n = static_cast<int>(series.size());
  if (max_lag < 1) throw ParameterError("acf max_lag must be >= 1");
  if (n <= max_lag) throw ParameterError("acf needs series longer than max_lag");
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= n;
  double denom = 0.0;
  for (double v : series) denom += (v - mean) * (v - mean);
  if (denom <= 0.0) throw ParameterError("acf input series has zero variance");

  AcfResult out;
  out.values.resize(max_lag + 1);
  for (int k = 0; k <= max_lag; ++k) {
    double num = 0.0;
    for (int t = 0; t + k < n; ++t) num += (series[t] - mean) * (series[t + k] - mean);
    out.values[k] = num / denom;
  }
  out.significance_limit = 1.96 / std::sqrt(static_cast<double>(n));
  return out;
}

}  // namespace s2p
