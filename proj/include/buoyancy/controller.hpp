#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "buoyancy/plant.hpp"

namespace buoyancy {

enum class ControlMode { Latency, Buoyancy };

std::string_view to_string(ControlMode mode);
ControlMode control_mode_from_string(std::string_view text);

/**
 * Extremum-seeking allocator settings plus the operating point it controls.
 * Setpoints are in ms for latency mode and in buoyancy units otherwise.
 * Numeric defaults were tuned against the synthetic plant.
 */
struct ControllerConfig {
  ControlMode mode = ControlMode::Buoyancy;
  double setpoint = 0;
  double perturb_amplitude = 0.25;  // cores
  int perturb_period = 8;           // windows
  double gain = 0.5;
  double min_cores = 1;
  double max_cores = 8;
  // Largest change of the allocation centre per period, in cores.
  double max_step = 1.0;
  // Floor on the magnitude of the estimated d(error)/d(cores); defaults to
  // 1% of |setpoint| per core.
  std::optional<double> min_gradient;

  std::string workload_id;
  double load_rps = 0;
  double initial_cores = 4;
  std::optional<double> llc_kib;
  double slo_ms = 0;
  double alpha = 0.7;
  // Other workloads sharing the node, held at fixed allocations.
  std::vector<Allocation> background;
  int repetitions = 10;
};

const ControllerConfig& validate_controller_config(const ControllerConfig& c);
ControllerConfig controller_config_from_json(const nlohmann::json& j);

// Step function of the external interference level.
struct InterferenceSchedule {
  int windows = 0;
  std::vector<std::pair<int, double>> steps;  // (first window, level)

  double level_at(int window) const;
};

InterferenceSchedule schedule_from_json(const nlohmann::json& j);

/**
 * Perturbation-correlation extremum seeker. A sinusoidal dither of
 * perturb_amplitude cores rides on the allocation centre. After every full
 * dither period the slope of error against dither is estimated by least
 * squares and the centre takes a damped Newton step towards zero mean error.
 */
class ExtremumSeeker {
 public:
  explicit ExtremumSeeker(const ControllerConfig& config);

  // Allocation to apply in the current window.
  double allocation() const;
  // Error measured for the window that used allocation(); positive means
  // worse than the setpoint.
  void observe(double error);

  double centre() const { return centre_; }
  std::optional<double> last_gradient() const { return gradient_; }
  int window() const { return window_; }

 private:
  double dither(int window) const;

  ControllerConfig config_;
  double centre_;
  int window_ = 0;
  std::vector<double> errors_;
  std::vector<double> offsets_;
  std::optional<double> gradient_;
};

// Signed so that positive means worse than the setpoint in both modes.
double control_error(ControlMode mode, double setpoint, double p95_ms,
                     double buoyancy);

struct WindowRecord {
  int window = 0;
  std::uint64_t seed = 0;
  double cores = 0;
  double p95_ms = 0;
  double buoyancy = 0;
  double setpoint = 0;
  ControlMode mode = ControlMode::Buoyancy;
  double error = 0;
  double interference = 0;
};

struct Band {
  double p10 = 0;
  double median = 0;
  double p90 = 0;
};

struct ExperimentResult {
  std::vector<std::vector<WindowRecord>> runs;  // one per seed
  std::vector<Band> cores;
  std::vector<Band> p95_ms;
  std::vector<Band> buoyancy;
};

// One closed-loop run with the given plant seed.
std::vector<WindowRecord> run_closed_loop(const PlantConfig& plant,
                                          const ControllerConfig& ctrl,
                                          const InterferenceSchedule& schedule,
                                          std::uint64_t seed);

// ctrl.repetitions runs with seeds plant.seed, plant.seed + 1, ...
ExperimentResult run_experiment(const PlantConfig& plant,
                                const ControllerConfig& ctrl,
                                const InterferenceSchedule& schedule);

// Linear-interpolated percentile, q in [0, 1].
double percentile(std::vector<double> values, double q);

std::string format_runs_csv(const ExperimentResult& result);
std::string format_bands_csv(const ExperimentResult& result);

}  // namespace buoyancy
