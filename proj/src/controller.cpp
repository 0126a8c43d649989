#include "buoyancy/controller.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "buoyancy/engine.hpp"
#include "buoyancy/exposition.hpp"
#include "buoyancy/json_io.hpp"

namespace buoyancy {

using nlohmann::json;

std::string_view to_string(ControlMode mode) {
  return mode == ControlMode::Latency ? "latency" : "buoyancy";
}

ControlMode control_mode_from_string(std::string_view text) {
  if (text == "latency") return ControlMode::Latency;
  if (text == "buoyancy") return ControlMode::Buoyancy;
  throw Error(ErrorCode::ConfigError,
              "mode must be \"latency\" or \"buoyancy\", got '" + std::string(text) + "'");
}

const ControllerConfig& validate_controller_config(const ControllerConfig& c) {
  auto bad = [](const std::string& what) {
    throw Error(ErrorCode::ConfigError, "controller: " + what);
  };
  if (!(c.perturb_amplitude > 0)) bad("perturb_amplitude must be > 0");
  if (c.perturb_period < 4) bad("perturb_period must be >= 4");
  if (!(c.min_cores > 0 && c.min_cores <= c.max_cores)) bad("need 0 < min_cores <= max_cores");
  if (!(c.gain >= 0)) bad("gain must be >= 0");
  if (!(c.max_step > 0)) bad("max_step must be > 0");
  if (c.min_gradient && !(*c.min_gradient > 0)) bad("min_gradient must be > 0");
  if (!std::isfinite(c.setpoint)) bad("setpoint must be finite");
  if (c.workload_id.empty()) bad("workload_id is required");
  if (!(c.load_rps >= 0)) bad("load_rps must be >= 0");
  if (!(c.slo_ms > 0)) bad("slo_ms must be > 0");
  if (!(c.alpha >= 0 && c.alpha <= 1)) bad("alpha must lie in [0, 1]");
  if (c.repetitions < 1) bad("repetitions must be >= 1");
  return c;
}

ControllerConfig controller_config_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, "controller config must be an object");
  ControllerConfig c;
  auto num = [&](const char* key, double fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    if (!j.at(key).is_number())
      throw Error(ErrorCode::ConfigError, std::string("'") + key + "' must be a number");
    return j.at(key).get<double>();
  };
  c.mode = control_mode_from_string(j.value("mode", "buoyancy"));
  if (!j.contains("setpoint")) throw Error(ErrorCode::ConfigError, "missing 'setpoint'");
  c.setpoint = num("setpoint", 0);
  c.perturb_amplitude = num("perturb_amplitude", c.perturb_amplitude);
  c.perturb_period = static_cast<int>(num("perturb_period", c.perturb_period));
  c.gain = num("gain", c.gain);
  if (j.contains("actuation_bounds")) {
    const json& b = j.at("actuation_bounds");
    c.min_cores = b.value("min_cores", c.min_cores);
    c.max_cores = b.value("max_cores", c.max_cores);
  }
  c.max_step = num("max_step", c.max_step);
  if (j.contains("min_gradient")) c.min_gradient = num("min_gradient", 0);
  c.workload_id = j.value("workload_id", "");
  c.load_rps = num("load_rps", c.load_rps);
  c.initial_cores = num("initial_cores", c.initial_cores);
  if (j.contains("llc_kib") && !j.at("llc_kib").is_null()) c.llc_kib = num("llc_kib", 0);
  c.slo_ms = num("slo_ms", c.slo_ms);
  c.alpha = num("alpha", c.alpha);
  c.repetitions = static_cast<int>(num("repetitions", c.repetitions));
  if (j.contains("background")) {
    for (const auto& a : j.at("background")) c.background.push_back(allocation_from_json(a));
  }
  return validate_controller_config(c);
}

double InterferenceSchedule::level_at(int window) const {
  double level = 0;
  for (const auto& [start, value] : steps) {
    if (start <= window) level = value;
  }
  return level;
}

InterferenceSchedule schedule_from_json(const json& j) {
  InterferenceSchedule s;
  if (!j.is_object() || !j.contains("windows") || !j.at("windows").is_number_unsigned()) {
    throw Error(ErrorCode::ConfigError, "schedule needs an integer 'windows'");
  }
  s.windows = j.at("windows").get<int>();
  if (j.contains("steps")) {
    for (const auto& st : j.at("steps")) {
      if (!st.contains("window") || !st.contains("interference")) {
        throw Error(ErrorCode::ConfigError, "schedule steps need 'window' and 'interference'");
      }
      const double level = st.at("interference").get<double>();
      if (!(level >= 0 && level <= 1)) {
        throw Error(ErrorCode::ConfigError, "interference must lie in [0, 1]");
      }
      s.steps.emplace_back(st.at("window").get<int>(), level);
    }
  }
  std::stable_sort(s.steps.begin(), s.steps.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  return s;
}

ExtremumSeeker::ExtremumSeeker(const ControllerConfig& config)
    : config_(validate_controller_config(config)),
      centre_(std::clamp(config.initial_cores, config.min_cores, config.max_cores)) {}

double ExtremumSeeker::dither(int window) const {
  const double phase = 2 * std::numbers::pi * (window % config_.perturb_period) /
                       config_.perturb_period;
  return config_.perturb_amplitude * std::sin(phase);
}

double ExtremumSeeker::allocation() const {
  return std::clamp(centre_ + dither(window_), config_.min_cores, config_.max_cores);
}

void ExtremumSeeker::observe(double error) {
  errors_.push_back(error);
  offsets_.push_back(allocation() - centre_);
  ++window_;
  if (static_cast<int>(errors_.size()) < config_.perturb_period) return;

  const double n = static_cast<double>(errors_.size());
  double mean_e = 0;
  double mean_d = 0;
  for (std::size_t i = 0; i < errors_.size(); ++i) {
    mean_e += errors_[i];
    mean_d += offsets_[i];
  }
  mean_e /= n;
  mean_d /= n;
  double sed = 0;
  double sdd = 0;
  for (std::size_t i = 0; i < errors_.size(); ++i) {
    sed += (errors_[i] - mean_e) * (offsets_[i] - mean_d);
    sdd += (offsets_[i] - mean_d) * (offsets_[i] - mean_d);
  }
  errors_.clear();
  offsets_.clear();

  const double floor =
      config_.min_gradient.value_or(0.01 * std::max(std::abs(config_.setpoint), 1e-3));
  // More cores never hurt in this plant, so the slope is held negative.
  const double slope = sdd > 0 ? sed / sdd : 0.0;
  gradient_ = slope;
  const double effective = std::min(slope, -floor);
  const double step =
      std::clamp(-config_.gain * mean_e / effective, -config_.max_step, config_.max_step);
  centre_ = std::clamp(centre_ + step, config_.min_cores, config_.max_cores);
}

double control_error(ControlMode mode, double setpoint, double p95_ms, double buoyancy) {
  return mode == ControlMode::Latency ? p95_ms - setpoint : setpoint - buoyancy;
}

std::vector<WindowRecord> run_closed_loop(const PlantConfig& plant_config,
                                          const ControllerConfig& ctrl,
                                          const InterferenceSchedule& schedule,
                                          std::uint64_t seed) {
  validate_controller_config(ctrl);
  PlantConfig pc = plant_config;
  pc.seed = seed;
  Plant plant(pc);
  EngineConfig ec;
  ec.alpha = ctrl.alpha;
  ec.node_cores = pc.total_cores;
  Engine engine(ec, pc.topology,
                {{ctrl.workload_id, SloSpec{.kpi_name = "p95_latency_ms", .slo_value = ctrl.slo_ms}}});
  ExtremumSeeker seeker(ctrl);

  std::vector<WindowRecord> records;
  records.reserve(static_cast<std::size_t>(std::max(schedule.windows, 0)));
  for (int t = 0; t < schedule.windows; ++t) {
    const double interference = schedule.level_at(t);
    std::vector<Allocation> allocations = ctrl.background;
    allocations.push_back(Allocation{ctrl.workload_id, seeker.allocation(), ctrl.llc_kib,
                                     ctrl.load_rps});
    const PlantWindow window = plant.step(allocations, interference);
    const NodeReport report = engine.step(window.batch);
    const auto it = std::find_if(report.workload_reports.begin(), report.workload_reports.end(),
                                 [&](const auto& w) { return w.workload_id == ctrl.workload_id; });

    WindowRecord rec;
    rec.window = t;
    rec.seed = seed;
    rec.cores = seeker.allocation();
    rec.p95_ms = window.true_p95_ms.at(ctrl.workload_id);
    rec.buoyancy = it->buoyancy;
    rec.setpoint = ctrl.setpoint;
    rec.mode = ctrl.mode;
    rec.error = control_error(ctrl.mode, ctrl.setpoint, rec.p95_ms, rec.buoyancy);
    rec.interference = interference;
    records.push_back(rec);
    seeker.observe(rec.error);
  }
  return records;
}

double percentile(std::vector<double> v, double q) {
  if (v.empty()) throw Error(ErrorCode::InsufficientData, "percentile of nothing");
  std::sort(v.begin(), v.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

ExperimentResult run_experiment(const PlantConfig& plant, const ControllerConfig& ctrl,
                                const InterferenceSchedule& schedule) {
  validate_controller_config(ctrl);
  ExperimentResult result;
  for (int r = 0; r < ctrl.repetitions; ++r) {
    result.runs.push_back(
        run_closed_loop(plant, ctrl, schedule, plant.seed + static_cast<std::uint64_t>(r)));
  }
  auto band = [&](int t, double WindowRecord::*field) {
    std::vector<double> v;
    for (const auto& run : result.runs) v.push_back(run[static_cast<std::size_t>(t)].*field);
    return Band{percentile(v, 0.1), percentile(v, 0.5), percentile(v, 0.9)};
  };
  for (int t = 0; t < schedule.windows; ++t) {
    result.cores.push_back(band(t, &WindowRecord::cores));
    result.p95_ms.push_back(band(t, &WindowRecord::p95_ms));
    result.buoyancy.push_back(band(t, &WindowRecord::buoyancy));
  }
  return result;
}

std::string format_runs_csv(const ExperimentResult& result) {
  std::string out = "window,seed,cores,p95_ms,buoyancy,setpoint,mode\n";
  for (const auto& run : result.runs) {
    for (const auto& r : run) {
      out += std::to_string(r.window) + "," + std::to_string(r.seed) + "," +
             format_metric_value(r.cores) + "," + format_metric_value(r.p95_ms) + "," +
             format_metric_value(r.buoyancy) + "," + format_metric_value(r.setpoint) + "," +
             std::string(to_string(r.mode)) + "\n";
    }
  }
  return out;
}

std::string format_bands_csv(const ExperimentResult& result) {
  std::string out =
      "window,cores_p10,cores_median,cores_p90,p95_p10,p95_median,p95_p90,"
      "buoyancy_p10,buoyancy_median,buoyancy_p90\n";
  for (std::size_t t = 0; t < result.cores.size(); ++t) {
    out += std::to_string(t);
    for (const Band* b : {&result.cores[t], &result.p95_ms[t], &result.buoyancy[t]}) {
      out += "," + format_metric_value(b->p10) + "," + format_metric_value(b->median) + "," +
             format_metric_value(b->p90);
    }
    out += "\n";
  }
  return out;
}

}  // namespace buoyancy
