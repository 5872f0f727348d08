#include "s2p/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>

#include "s2p/errors.hpp"
#include "s2p/rng.hpp"

namespace s2p {

namespace fs = std::filesystem;

std::string version_string() {
#ifdef S2P_VERSION
  return S2P_VERSION;
#else
  return "unknown";
#endif
}

std::string DatasetConfig::describe() const {
  switch (kind) {
    case Kind::kSynthetic:
      return "synthetic(length=" + std::to_string(synth.length) +
             ",channels=" + std::to_string(synth.channels) +
             ",seed=" + std::to_string(synth.seed) + ")";
    case Kind::kCsv:
      return path;
    case Kind::kNamed:
      return name;
  }
  return "?";
}

int ExperimentConfig::max_m_hours() const {
  int m = 0;
  for (int d : horizon_days) m = std::max(m, d * kHoursPerDay);
  return m;
}

namespace {

ShiftKind default_shift_for_model(const std::string& model) {
  return model == "mlp" ? ShiftKind::kAffine : ShiftKind::kIdentity;
}

void require_keys(const Json& obj, const std::string& ctx,
                  const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError("'" + ctx + "' must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) {
      throw ConfigError("unknown key '" + ctx + (ctx.empty() ? "" : ".") + key + "'");
    }
  }
}

double get_number(const Json& obj, const std::string& key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) throw ConfigError("'" + key + "' must be a number");
  return obj[key].get<double>();
}

int get_int(const Json& obj, const std::string& key, int fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer()) throw ConfigError("'" + key + "' must be an integer");
  return obj[key].get<int>();
}

std::string get_string(const Json& obj, const std::string& key, const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_string()) throw ConfigError("'" + key + "' must be a string");
  return obj[key].get<std::string>();
}

bool get_bool(const Json& obj, const std::string& key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_boolean()) throw ConfigError("'" + key + "' must be a boolean");
  return obj[key].get<bool>();
}

DatasetConfig parse_dataset(const Json& j) {
  DatasetConfig d;
  const std::string kind = get_string(j, "kind", "synthetic");
  if (kind == "synthetic") {
    require_keys(j, "dataset",
                 {"kind", "length", "channels", "daily_amplitude", "trend_slope", "noise_std",
                  "peak_jitter_std", "seed"});
    d.kind = DatasetConfig::Kind::kSynthetic;
    d.synth.length = get_int(j, "length", 7200);
    d.synth.channels = get_int(j, "channels", 3);
    d.synth.daily_amplitude = get_number(j, "daily_amplitude", 1.0);
    d.synth.trend_slope = get_number(j, "trend_slope", 0.0);
    d.synth.noise_std = get_number(j, "noise_std", 0.5);
    d.synth.peak_jitter_std = get_number(j, "peak_jitter_std", 0.5);
    d.synth.seed = static_cast<std::uint64_t>(get_int(j, "seed", 0));
  } else if (kind == "csv") {
    require_keys(j, "dataset", {"kind", "path", "missing_policy"});
    d.kind = DatasetConfig::Kind::kCsv;
    d.path = get_string(j, "path", "");
    if (d.path.empty()) throw ConfigError("dataset.path is required for kind=csv");
    const std::string policy = get_string(j, "missing_policy", "forward-fill");
    if (policy == "forward-fill") {
      d.missing = MissingPolicy::kForwardFill;
    } else if (policy == "reject-row") {
      d.missing = MissingPolicy::kRejectRow;
    } else {
      throw ConfigError("dataset.missing_policy must be forward-fill or reject-row");
    }
  } else if (kind == "named") {
    require_keys(j, "dataset", {"kind", "name", "url", "cache_dir"});
    d.kind = DatasetConfig::Kind::kNamed;
    d.name = get_string(j, "name", "");
    if (d.name.empty()) throw ConfigError("dataset.name is required for kind=named");
    d.url = get_string(j, "url", "");
    d.cache_dir = get_string(j, "cache_dir", "data");
  } else {
    throw ConfigError("dataset.kind must be synthetic, csv, or named");
  }
  return d;
}

}  // namespace

ExperimentConfig parse_experiment_config(const Json& j) {
  require_keys(j, "",
               {"dataset", "split", "input_days", "horizon_days", "window_stride", "paradigm",
                "paradigms", "model", "model_args", "cyclicnorm", "alpha", "alphas", "train",
                "seeds"});
  ExperimentConfig cfg;
  if (j.contains("dataset")) cfg.dataset = parse_dataset(j["dataset"]);

  if (j.contains("split")) {
    const Json& s = j["split"];
    if (!s.is_array() || s.size() != 3) throw ConfigError("'split' must be [train, val, test]");
    cfg.split_train = s[0].get<double>();
    cfg.split_val = s[1].get<double>();
    cfg.split_test = s[2].get<double>();
  }
  if (cfg.split_train <= 0 || cfg.split_val <= 0 || cfg.split_test <= 0 ||
      std::fabs(cfg.split_train + cfg.split_val + cfg.split_test - 1.0) > 1e-9) {
    throw ConfigError("split ratios must be positive and sum to 1");
  }

  cfg.input_days = get_int(j, "input_days", 30);
  if (cfg.input_days < 1) throw ConfigError("input_days must be >= 1");

  if (j.contains("horizon_days")) {
    if (!j["horizon_days"].is_array() || j["horizon_days"].empty()) {
      throw ConfigError("'horizon_days' must be a non-empty array of day counts");
    }
    cfg.horizon_days.clear();
    for (const auto& h : j["horizon_days"]) {
      if (!h.is_number_integer() || h.get<int>() < 1) {
        throw ConfigError("horizon_days entries must be integers >= 1");
      }
      cfg.horizon_days.push_back(h.get<int>());
    }
  }

  cfg.window_stride = get_int(j, "window_stride", 24);
  if (cfg.window_stride < 1) throw ConfigError("window_stride must be >= 1");

  if (j.contains("paradigm")) cfg.paradigm = paradigm_from_string(get_string(j, "paradigm", ""));
  if (j.contains("paradigms")) {
    if (!j["paradigms"].is_array() || j["paradigms"].empty()) {
      throw ConfigError("'paradigms' must be a non-empty array");
    }
    cfg.paradigms.clear();
    cfg.paradigms_given = true;
    for (const auto& p : j["paradigms"]) {
      cfg.paradigms.push_back(paradigm_from_string(p.get<std::string>()));
    }
  }

  cfg.model = get_string(j, "model", "dlinear");
  if (j.contains("model_args")) {
    const Json& m = j["model_args"];
    require_keys(m, "model_args", {"hidden", "kernel", "per_channel"});
    cfg.model_args.hidden = get_int(m, "hidden", cfg.model_args.hidden);
    cfg.model_args.kernel = get_int(m, "kernel", cfg.model_args.kernel);
    cfg.model_args.per_channel = get_bool(m, "per_channel", cfg.model_args.per_channel);
  }

  if (j.contains("cyclicnorm")) {
    const Json& c = j["cyclicnorm"];
    require_keys(c, "cyclicnorm", {"enabled", "shift"});
    cfg.cyclicnorm_given = true;
    cfg.cyclicnorm.enabled = get_bool(c, "enabled", true);
    cfg.cyclicnorm.shift = c.contains("shift")
                               ? shift_kind_from_string(get_string(c, "shift", "identity"))
                               : default_shift_for_model(cfg.model);
  }

  if (j.contains("alpha")) {
    const double a = get_number(j, "alpha", 0.5);
    if (a < 0.0 || a > 1.0) throw ConfigError("alpha must lie in [0, 1]");
    cfg.alpha = a;
  }
  if (j.contains("alphas")) {
    if (!j["alphas"].is_array()) throw ConfigError("'alphas' must be an array");
    cfg.alphas.clear();
    for (const auto& a : j["alphas"]) cfg.alphas.push_back(a.get<double>());
  }

  if (j.contains("train")) {
    const Json& t = j["train"];
    require_keys(t, "train", {"optimizer", "learning_rate", "batch_size", "max_epochs", "patience"});
    const std::string opt = get_string(t, "optimizer", "adam");
    if (opt == "adam") {
      cfg.train.optimizer = TrainConfig::Optimizer::kAdam;
    } else if (opt == "sgd") {
      cfg.train.optimizer = TrainConfig::Optimizer::kSgd;
    } else {
      throw ConfigError("train.optimizer must be adam or sgd");
    }
    cfg.train.learning_rate = get_number(t, "learning_rate", cfg.train.learning_rate);
    cfg.train.batch_size = get_int(t, "batch_size", cfg.train.batch_size);
    cfg.train.max_epochs = get_int(t, "max_epochs", cfg.train.max_epochs);
    cfg.train.patience = get_int(t, "patience", cfg.train.patience);
  }
  cfg.train.validate();

  if (j.contains("seeds")) {
    if (!j["seeds"].is_array() || j["seeds"].empty()) {
      throw ConfigError("'seeds' must be a non-empty array");
    }
    cfg.seeds.clear();
    for (const auto& s : j["seeds"]) cfg.seeds.push_back(s.get<std::uint64_t>());
  }
  return cfg;
}

Json resolved_config_json(const ExperimentConfig& cfg) {
  Json j;
  Json d;
  switch (cfg.dataset.kind) {
    case DatasetConfig::Kind::kSynthetic:
      d["kind"] = "synthetic";
      d["length"] = cfg.dataset.synth.length;
      d["channels"] = cfg.dataset.synth.channels;
      d["daily_amplitude"] = cfg.dataset.synth.daily_amplitude;
      d["trend_slope"] = cfg.dataset.synth.trend_slope;
      d["noise_std"] = cfg.dataset.synth.noise_std;
      d["peak_jitter_std"] = cfg.dataset.synth.peak_jitter_std;
      d["seed"] = cfg.dataset.synth.seed;
      break;
    case DatasetConfig::Kind::kCsv:
      d["kind"] = "csv";
      d["path"] = cfg.dataset.path;
      d["missing_policy"] =
          cfg.dataset.missing == MissingPolicy::kForwardFill ? "forward-fill" : "reject-row";
      break;
    case DatasetConfig::Kind::kNamed:
      d["kind"] = "named";
      d["name"] = cfg.dataset.name;
      if (!cfg.dataset.url.empty()) d["url"] = cfg.dataset.url;
      d["cache_dir"] = cfg.dataset.cache_dir;
      break;
  }
  j["dataset"] = d;
  j["split"] = {cfg.split_train, cfg.split_val, cfg.split_test};
  j["input_days"] = cfg.input_days;
  j["horizon_days"] = cfg.horizon_days;
  j["window_stride"] = cfg.window_stride;
  j["paradigm"] = to_string(cfg.paradigm);
  if (cfg.paradigms_given) {
    Json arr = Json::array();
    for (Paradigm p : cfg.paradigms) arr.push_back(to_string(p));
    j["paradigms"] = arr;
  }
  j["model"] = cfg.model;
  j["model_args"] = {{"hidden", cfg.model_args.hidden},
                     {"kernel", cfg.model_args.kernel},
                     {"per_channel", cfg.model_args.per_channel}};
  if (cfg.cyclicnorm_given) {
    j["cyclicnorm"] = {{"enabled", cfg.cyclicnorm.enabled},
                       {"shift", to_string(cfg.cyclicnorm.shift)}};
  }
  if (cfg.alpha.has_value()) j["alpha"] = *cfg.alpha;
  j["alphas"] = cfg.alphas;
  j["train"] = {
      {"optimizer", cfg.train.optimizer == TrainConfig::Optimizer::kAdam ? "adam" : "sgd"},
      {"learning_rate", cfg.train.learning_rate},
      {"batch_size", cfg.train.batch_size},
      {"max_epochs", cfg.train.max_epochs},
      {"patience", cfg.train.patience}};
  j["seeds"] = cfg.seeds;
  return j;
}

namespace {

Json parse_override_value(const std::string& text) {
  const Json parsed = Json::parse(text, nullptr, false);
  if (parsed.is_discarded()) return Json(text);  // bare strings stay strings
  return parsed;
}

void apply_override(Json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' must look like key.path=value");
  }
  const std::string path = assignment.substr(0, eq);
  const Json value = parse_override_value(assignment.substr(eq + 1));
  Json* node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
    if (key.empty()) throw ConfigError("override '" + assignment + "' has an empty path segment");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

}  // namespace

Json load_config_json(const std::string& path, const std::vector<std::string>& overrides) {
  Json j;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    j = Json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config file '" + path + "' is not valid JSON");
    // run.json manifests wrap the config; accept them directly.
    if (j.is_object() && j.contains("command") && j.contains("config")) j = j["config"];
  } else {
    j = Json::object();
  }
  for (const std::string& o : overrides) apply_override(j, o);
  return j;
}

ExperimentConfig load_config_file(const std::string& path,
                                  const std::vector<std::string>& overrides) {
  return parse_experiment_config(load_config_json(path, overrides));
}

PipelineSpec ExperimentConfig::pipeline_spec(Paradigm paradigm, int horizon, int channels,
                                             std::optional<double> alpha_override) const {
  PipelineSpec spec;
  spec.paradigm = paradigm;
  spec.model = model;
  spec.model_args = model_args;
  spec.n_hours = n_hours();
  spec.m_hours = horizon * kHoursPerDay;
  spec.channels = channels;
  const bool full_series = paradigm == Paradigm::kSfs || paradigm == Paradigm::kSeq2Peak;
  if (full_series) {
    if (cyclicnorm_given) {
      spec.cyclicnorm = cyclicnorm;
    } else {
      spec.cyclicnorm.enabled = paradigm == Paradigm::kSeq2Peak;
      spec.cyclicnorm.shift = default_shift_for_model(model);
    }
  }
  if (paradigm == Paradigm::kSeq2Peak) {
    spec.alpha = alpha_override.has_value() ? alpha_override : alpha;
  }
  return spec;
}

DatasetBundle assemble_dataset(const DatasetConfig& cfg, int min_split_hours, double split_train,
                               double split_val, double split_test) {
  TimeSeriesFrame frame;
  switch (cfg.kind) {
    case DatasetConfig::Kind::kSynthetic:
      frame = gen_synthetic(cfg.synth);
      break;
    case DatasetConfig::Kind::kCsv:
      frame = load_csv(cfg.path, cfg.missing);
      break;
    case DatasetConfig::Kind::kNamed: {
      const std::string path = fetch_dataset(cfg.name, cfg.url, cfg.cache_dir);
      frame = load_csv(path, cfg.missing);
      break;
    }
  }
  DatasetBundle bundle;
  bundle.channels = frame.channels();
  bundle.raw = split(frame, split_train, split_val, split_test, min_split_hours);
  bundle.stats = compute_channel_stats(bundle.raw.train);
  bundle.standardized.train = apply_standardize(bundle.raw.train, bundle.stats);
  bundle.standardized.val = apply_standardize(bundle.raw.val, bundle.stats);
  bundle.standardized.test = apply_standardize(bundle.raw.test, bundle.stats);
  return bundle;
}

DatasetBundle assemble_dataset(const ExperimentConfig& cfg) {
  return assemble_dataset(cfg.dataset, cfg.n_hours() + cfg.max_m_hours(), cfg.split_train,
                          cfg.split_val, cfg.split_test);
}

std::map<int, SplitSets> build_horizon_sets(const DatasetBundle& bundle,
                                            const ExperimentConfig& cfg) {
  std::map<int, SplitSets> out;
  for (int days : cfg.horizon_days) {
    if (out.count(days)) continue;
    const int n = cfg.n_hours();
    const int m = days * kHoursPerDay;
    SplitSets sets;
    sets.train = build_sample_set(bundle.standardized.train, bundle.raw.train, n, m,
                                  cfg.window_stride);
    sets.val = build_sample_set(bundle.standardized.val, bundle.raw.val, n, m, cfg.window_stride);
    sets.test =
        build_sample_set(bundle.standardized.test, bundle.raw.test, n, m, cfg.window_stride);
    out.emplace(days, std::move(sets));
  }
  return out;
}

namespace {

struct CellSpec {
  std::string label;
  Paradigm paradigm = Paradigm::kSeq2Peak;
  int horizon_days = 0;
  std::uint64_t seed = 0;
  std::optional<double> alpha_override;
  std::optional<CyclicNormSettings> cyclicnorm_override;
  bool collect_traces = false;
};

SuiteResult run_suite(const ExperimentConfig& cfg, const std::vector<CellSpec>& specs, int jobs) {
  const DatasetBundle bundle = assemble_dataset(cfg);
  const std::map<int, SplitSets> sets = build_horizon_sets(bundle, cfg);

  SuiteResult result;
  result.cells.resize(specs.size());
  std::vector<std::function<void()>> tasks;
  tasks.reserve(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    tasks.push_back([&, i] {
      const CellSpec& spec = specs[i];
      CellResult& cell = result.cells[i];
      cell.label = spec.label;
      cell.paradigm = spec.paradigm;
      cell.horizon_days = spec.horizon_days;
      cell.seed = spec.seed;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        PipelineSpec ps =
            cfg.pipeline_spec(spec.paradigm, spec.horizon_days, bundle.channels, spec.alpha_override);
        if (spec.cyclicnorm_override.has_value()) ps.cyclicnorm = *spec.cyclicnorm_override;
        Pipeline pipe(ps);
        cell.alpha = spec.paradigm == Paradigm::kSeq2Peak
                         ? std::optional<double>(pipe.alpha())
                         : std::nullopt;
        TrainConfig tc = cfg.train;
        tc.seed = spec.seed;
        const SplitSets& data = sets.at(spec.horizon_days);
        const TrainResult tr = train(pipe, data.train, data.val, bundle.stats, tc);
        cell.best_epoch = tr.best_epoch;
        cell.best_val_peak_mse = tr.best_val_peak_mse;
        cell.epochs_run = static_cast<int>(tr.history.size());
        cell.metrics = evaluate_peaks(pipe, data.test, bundle.stats,
                                      spec.collect_traces ? &cell.traces : nullptr);
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
      cell.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    });
  }
  run_parallel(tasks, jobs);
  return result;
}

}  // namespace

SuiteResult run_paradigm_comparison(const ExperimentConfig& cfg, int jobs) {
  std::vector<CellSpec> specs;
  for (Paradigm p : cfg.paradigms) {
    for (int horizon : cfg.horizon_days) {
      for (std::uint64_t seed : cfg.seeds) {
        CellSpec s;
        s.label = to_string(p);
        s.paradigm = p;
        s.horizon_days = horizon;
        s.seed = seed;
        s.collect_traces = seed == cfg.seeds.front();
        specs.push_back(std::move(s));
      }
    }
  }
  return run_suite(cfg, specs, jobs);
}

SuiteResult run_ablation(const ExperimentConfig& cfg, int jobs) {
  const ShiftKind shift =
      cfg.cyclicnorm_given ? cfg.cyclicnorm.shift : default_shift_for_model(cfg.model);
  struct Row {
    const char* label;
    Paradigm paradigm;
    bool cyclicnorm;
  };
  static constexpr Row kRows[] = {
      {"baseline", Paradigm::kSfs, false},
      {"+Decoder", Paradigm::kSeq2Peak, false},
      {"+CyclicNorm", Paradigm::kSfs, true},
      {"+Seq2Peak", Paradigm::kSeq2Peak, true},
  };
  std::vector<CellSpec> specs;
  for (const Row& row : kRows) {
    for (int horizon : cfg.horizon_days) {
      for (std::uint64_t seed : cfg.seeds) {
        CellSpec s;
        s.label = row.label;
        s.paradigm = row.paradigm;
        s.horizon_days = horizon;
        s.seed = seed;
        s.cyclicnorm_override = CyclicNormSettings{row.cyclicnorm, shift};
        specs.push_back(std::move(s));
      }
    }
  }
  return run_suite(cfg, specs, jobs);
}

SuiteResult run_alpha_sweep(const ExperimentConfig& cfg, const std::vector<double>& alphas,
                            int jobs) {
  if (alphas.size() < 3) throw ConfigError("alpha sweep needs at least 3 points");
  for (double a : alphas) {
    if (a < 0.0 || a > 1.0) throw ConfigError("sweep alphas must lie in [0, 1]");
  }
  std::vector<CellSpec> specs;
  for (double a : alphas) {
    char label[32];
    std::snprintf(label, sizeof(label), "alpha=%g", a);
    for (int horizon : cfg.horizon_days) {
      for (std::uint64_t seed : cfg.seeds) {
        CellSpec s;
        s.label = label;
        s.paradigm = Paradigm::kSeq2Peak;
        s.horizon_days = horizon;
        s.seed = seed;
        s.alpha_override = a;
        specs.push_back(std::move(s));
      }
    }
  }
  return run_suite(cfg, specs, jobs);
}

std::vector<AggregateRow> aggregate_cells(const std::vector<CellResult>& cells) {
  std::vector<AggregateRow> rows;
  auto find_row = [&rows](const std::string& label, int horizon,
                          std::optional<double> alpha) -> AggregateRow& {
    for (AggregateRow& r : rows) {
      if (r.label == label && r.horizon_days == horizon) return r;
    }
    rows.push_back({label, horizon, alpha, {}, 0});
    return rows.back();
  };
  for (const CellResult& c : cells) {
    if (!c.error.empty()) continue;
    AggregateRow& r = find_row(c.label, c.horizon_days, c.alpha);
    r.mean.mse += c.metrics.mse;
    r.mean.mae += c.metrics.mae;
    ++r.cells;
  }
  for (AggregateRow& r : rows) {
    if (r.cells > 0) {
      r.mean.mse /= r.cells;
      r.mean.mae /= r.cells;
    }
  }
  // Across-horizon average per label (horizon_days == 0).
  std::vector<AggregateRow> averages;
  for (const AggregateRow& r : rows) {
    bool found = false;
    for (AggregateRow& a : averages) {
      if (a.label == r.label) {
        a.mean.mse += r.mean.mse;
        a.mean.mae += r.mean.mae;
        ++a.cells;
        found = true;
        break;
      }
    }
    if (!found) averages.push_back({r.label, 0, r.alpha, r.mean, 1});
  }
  for (AggregateRow& a : averages) {
    a.mean.mse /= a.cells;
    a.mean.mae /= a.cells;
  }
  rows.insert(rows.end(), averages.begin(), averages.end());
  return rows;
}

namespace {

std::string sanitize_label(const std::string& label) {
  std::string out;
  for (char ch : label) {
    if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.') {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    } else if (ch == '=' || ch == '+') {
      out.push_back('_');
    }
  }
  return out.empty() ? "row" : out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

void write_run_manifest(const std::string& out_dir, const std::string& command,
                        const Json& resolved_config) {
  fs::create_directories(out_dir);
  Json manifest;
  manifest["command"] = command;
  manifest["version"] = version_string();
  manifest["config"] = resolved_config;
  std::ofstream out(fs::path(out_dir) / "run.json");
  out << manifest.dump(2) << '\n';
}

void write_metrics_json(const std::string& out_dir, const std::string& command,
                        const std::vector<CellResult>& cells,
                        const std::vector<AggregateRow>& aggregates) {
  Json j;
  j["command"] = command;
  Json rows = Json::array();
  for (const CellResult& c : cells) {
    Json row;
    row["label"] = c.label;
    row["paradigm"] = to_string(c.paradigm);
    row["horizon_days"] = c.horizon_days;
    row["seed"] = c.seed;
    if (c.alpha.has_value()) row["alpha"] = *c.alpha;
    if (c.error.empty()) {
      row["peak_mse"] = c.metrics.mse;
      row["peak_mae"] = c.metrics.mae;
      row["best_epoch"] = c.best_epoch;
      row["epochs_run"] = c.epochs_run;
    } else {
      row["error"] = c.error;
    }
    rows.push_back(std::move(row));
  }
  j["cells"] = rows;
  Json aggs = Json::array();
  for (const AggregateRow& a : aggregates) {
    if (a.cells == 0) continue;
    Json row;
    row["label"] = a.label;
    if (a.horizon_days == 0) {
      row["horizon_days"] = "avg";
    } else {
      row["horizon_days"] = a.horizon_days;
    }
    if (a.alpha.has_value()) row["alpha"] = *a.alpha;
    row["peak_mse"] = a.mean.mse;
    row["peak_mae"] = a.mean.mae;
    aggs.push_back(std::move(row));
  }
  j["aggregates"] = aggs;
  std::ofstream out(fs::path(out_dir) / "metrics.json");
  out << j.dump(2) << '\n';
}

void write_metrics_markdown(const std::string& out_dir, const std::string& title,
                            const std::vector<AggregateRow>& aggregates) {
  // Column per label, row per horizon plus the across-horizon average,
  // mirroring the usual MSE/MAE benchmark table layout.
  std::vector<std::string> labels;
  std::vector<int> horizons;
  for (const AggregateRow& a : aggregates) {
    if (std::find(labels.begin(), labels.end(), a.label) == labels.end()) labels.push_back(a.label);
    if (a.horizon_days != 0 &&
        std::find(horizons.begin(), horizons.end(), a.horizon_days) == horizons.end()) {
      horizons.push_back(a.horizon_days);
    }
  }
  std::sort(horizons.begin(), horizons.end());

  auto lookup = [&aggregates](const std::string& label, int horizon) -> const AggregateRow* {
    for (const AggregateRow& a : aggregates) {
      if (a.label == label && a.horizon_days == horizon && a.cells > 0) return &a;
    }
    return nullptr;
  };

  std::ofstream out(fs::path(out_dir) / "metrics.md");
  out << "# " << title << "\n\n";
  out << "| Horizon (days) |";
  for (const auto& l : labels) out << ' ' << l << " MSE | " << l << " MAE |";
  out << '\n';
  out << "|---|";
  for (std::size_t i = 0; i < labels.size(); ++i) out << "---|---|";
  out << '\n';
  auto emit_row = [&](const std::string& name, int horizon) {
    out << "| " << name << " |";
    for (const auto& l : labels) {
      const AggregateRow* a = lookup(l, horizon);
      if (a) {
        out << ' ' << fmt(a->mean.mse) << " | " << fmt(a->mean.mae) << " |";
      } else {
        out << " - | - |";
      }
    }
    out << '\n';
  };
  for (int h : horizons) emit_row(std::to_string(h), h);
  emit_row("Avg", 0);
}

void write_traces_csv(const std::string& out_dir, const std::vector<CellResult>& cells) {
  for (const CellResult& c : cells) {
    if (c.traces.empty()) continue;
    const std::string name = "traces_" + sanitize_label(c.label) + "_h" +
                             std::to_string(c.horizon_days) + ".csv";
    std::ofstream out(fs::path(out_dir) / name);
    out << "window,day,channel,y_true_peak,y_pred_peak\n";
    out.precision(17);
    for (const TraceRow& t : c.traces) {
      out << t.window << ',' << t.day << ',' << t.channel << ',' << t.y_true << ',' << t.y_pred
          << '\n';
    }
  }
}

std::vector<GradCheckCase> run_grad_checks(const std::vector<std::string>& models,
                                           const std::vector<double>& alphas,
                                           const std::vector<std::uint64_t>& seeds, double h,
                                           double tol) {
  // Small dimensions keep the per-coordinate probing cheap while still
  // exercising every op the full-size pipelines use.
  constexpr int kN = 48, kM = 24, kChannels = 2;
  std::vector<GradCheckCase> cases;
  for (const std::string& model : models) {
    for (double alpha : alphas) {
      for (std::uint64_t seed : seeds) {
        PipelineSpec spec;
        spec.paradigm = Paradigm::kSeq2Peak;
        spec.model = model;
        spec.model_args.hidden = 6;
        spec.model_args.kernel = 25;
        spec.cyclicnorm = {true, ShiftKind::kAffine};
        spec.alpha = alpha;
        spec.n_hours = kN;
        spec.m_hours = kM;
        spec.channels = kChannels;
        Pipeline pipe(spec);
        pipe.init(derive_seed(seed, 1));

        Rng rng(derive_seed(seed, 3));
        // Move the shift away from its neutral point so the check covers a
        // generic operating region, not just the identity.
        for (grad::ParamTensor* t : pipe.params()) {
          if (t->name.rfind("shift.", 0) == 0) {
            for (std::size_t i = 0; i < t->value.size(); ++i) {
              t->value.data()[i] += rng.uniform(-0.1, 0.1);
            }
          }
        }

        WindowSample sample;
        sample.x = Matrix(kN, kChannels);
        sample.y = Matrix(kM, kChannels);
        for (std::size_t i = 0; i < sample.x.size(); ++i) sample.x.data()[i] = rng.normal();
        for (std::size_t i = 0; i < sample.y.size(); ++i) sample.y.data()[i] = rng.normal();
        sample.start_phase = static_cast<int>(seed % kHoursPerDay);
        sample.y_peak = extract_peak(sample.y);

        const Pipeline::Prepared prepared = pipe.prepare(sample);
        auto build = [&pipe, &prepared](grad::Graph& g) { return pipe.build_loss(g, prepared); };
        GradCheckCase c;
        c.model = model;
        c.alpha = alpha;
        c.seed = seed;
        c.report = grad::finite_diff_check(build, pipe.params(), h, tol);
        cases.push_back(std::move(c));
      }
    }
  }
  return cases;
}

void write_sweep_csv(const std::string& out_dir, const std::vector<AggregateRow>& aggregates) {
  std::vector<const AggregateRow*> rows;
  for (const AggregateRow& a : aggregates) {
    if (a.horizon_days == 0 && a.alpha.has_value() && a.cells > 0) rows.push_back(&a);
  }
  std::sort(rows.begin(), rows.end(),
            [](const AggregateRow* a, const AggregateRow* b) { return *a->alpha < *b->alpha; });
  std::ofstream out(fs::path(out_dir) / "sweep.csv");
  out << "alpha,mse,mae\n";
  out.precision(17);
  for (const AggregateRow* a : rows) {
    out << *a->alpha << ',' << a->mean.mse << ',' << a->mean.mae << '\n';
  }
}

}  // namespace s2p
