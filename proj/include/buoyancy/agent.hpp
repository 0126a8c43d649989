#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <variant>

#include <json.hpp>

#include "buoyancy/engine.hpp"
#include "buoyancy/source.hpp"

namespace httplib {
class Server;
}

namespace buoyancy {

/**
 * Agent configuration file (JSON):
 *
 *   {
 *     "window_s": 1.0, "alpha": 0.7, "violation_threshold": 0.1,
 *     "ema_factor": 1.0, "node_cores": 8, "expiry_windows": 3,
 *     "topology": {...},
 *     "slo": {"<workload_id>": {"kpi_name": "p95_latency_ms", "slo_value": 12}},
 *     "source": {"type": "replay", "path": "...", "strict": true, "loop": false}
 *            | {"type": "plant", "plant": {...} | "plant_path": "...",
 *               "allocations": [...], "interference": 0.0}
 *   }
 *
 * Relative paths resolve against the directory of the config file.
 */
struct AgentConfig {
  double window_s = 1.0;
  EngineConfig engine;
  CacheTopology topology;
  std::map<std::string, SloSpec> slos;
  std::variant<ReplaySourceConfig, PlantSourceConfig> source;
};

AgentConfig agent_config_from_json(const nlohmann::json& j,
                                   const std::string& base_dir = ".");
AgentConfig load_agent_config(const std::string& path);

std::unique_ptr<TelemetrySource> make_source(const AgentConfig& config);

// Everything a reader needs for one window, rendered once.
struct Snapshot {
  NodeReport report;
  std::string metrics;
  std::string node_json;
  std::map<std::string, std::string> workload_json;
};

/**
 * Scoring loop plus HTTP endpoints:
 *   GET /metrics              OpenMetrics text
 *   GET /v1/node              NodeReport JSON
 *   GET /v1/workloads/{id}    BuoyancyReport JSON, 404 if unknown
 *   GET /healthz              "ok"
 *
 * One thread runs step(); handlers only read the current snapshot, which is
 * replaced whole after each window.
 */
class Agent {
 public:
  explicit Agent(AgentConfig config);
  Agent(AgentConfig config, std::unique_ptr<TelemetrySource> source);
  ~Agent();

  Agent(const Agent&) = delete;
  Agent& operator=(const Agent&) = delete;

  // Binds (port 0 picks a free port) and starts the HTTP and scoring
  // threads. Throws BindError.
  void start(const std::string& host, int port);
  void stop();

  // Advances one window synchronously. False at end of stream.
  bool step_once();

  int port() const { return port_; }
  std::shared_ptr<const Snapshot> snapshot() const;
  bool source_exhausted() const { return exhausted_; }
  std::optional<std::string> failure() const;

 private:
  void run_loop(std::stop_token stop);
  void publish(NodeReport report);

  AgentConfig config_;
  Engine engine_;
  std::unique_ptr<TelemetrySource> source_;
  std::unique_ptr<httplib::Server> server_;
  std::thread http_thread_;
  std::jthread loop_thread_;
  int port_ = 0;

  mutable std::mutex snapshot_mu_;
  std::shared_ptr<const Snapshot> snapshot_;
  std::atomic<bool> exhausted_{false};
  mutable std::mutex failure_mu_;
  std::optional<std::string> failure_;
};

// "host:port" or ":port".
std::pair<std::string, int> parse_listen_address(const std::string& addr);

}  // namespace buoyancy
