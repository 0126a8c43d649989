#include "buoyancy/agent.hpp"

#include <condition_variable>
#include <filesystem>
#include <iostream>

#include <httplib.h>

#include "buoyancy/exposition.hpp"
#include "buoyancy/json_io.hpp"

namespace buoyancy {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& what) {
  throw Error(ErrorCode::ConfigError, what);
}

double number_or(const json& j, const char* key, double fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  if (!j.at(key).is_number()) config_error(std::string("'") + key + "' must be a number");
  return j.at(key).get<double>();
}

std::string resolve(const std::string& base_dir, const std::string& path) {
  const std::filesystem::path p(path);
  return p.is_absolute() ? path : (std::filesystem::path(base_dir) / p).string();
}

}  // namespace

AgentConfig agent_config_from_json(const json& j, const std::string& base_dir) {
  if (!j.is_object()) config_error("config must be a JSON object");
  AgentConfig c;
  c.window_s = number_or(j, "window_s", c.window_s);
  if (!(c.window_s > 0)) config_error("'window_s' must be > 0");
  c.engine.alpha = number_or(j, "alpha", c.engine.alpha);
  c.engine.violation_threshold =
      number_or(j, "violation_threshold", c.engine.violation_threshold);
  c.engine.ema_factor = number_or(j, "ema_factor", c.engine.ema_factor);
  if (j.contains("node_cores") && !j.at("node_cores").is_null()) {
    c.engine.node_cores = number_or(j, "node_cores", 0);
  }
  if (j.contains("expiry_windows")) {
    if (!j.at("expiry_windows").is_number_unsigned())
      config_error("'expiry_windows' must be a non-negative integer");
    c.engine.expiry_windows = j.at("expiry_windows").get<std::uint32_t>();
  }
  if (!j.contains("topology")) config_error("missing 'topology'");
  c.topology = topology_from_json(j.at("topology"));
  if (j.contains("slo")) c.slos = slos_from_json(j.at("slo"));
  try {
    validate_engine_config(c.engine);
    validate_topology(c.topology);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    config_error(e.what());
  }

  if (!j.contains("source") || !j.at("source").is_object()) {
    config_error("missing 'source' object");
  }
  const json& src = j.at("source");
  const std::string type = src.value("type", "");
  if (type == "replay") {
    ReplaySourceConfig r;
    if (!src.contains("path") || !src.at("path").is_string())
      config_error("replay source needs 'path'");
    r.path = resolve(base_dir, src.at("path").get<std::string>());
    r.strict = src.value("strict", true);
    r.loop = src.value("loop", false);
    c.source = r;
  } else if (type == "plant") {
    PlantSourceConfig p;
    if (src.contains("plant")) {
      p.plant = plant_config_from_json(src.at("plant"));
    } else if (src.contains("plant_path") && src.at("plant_path").is_string()) {
      p.plant = plant_config_from_json(
          load_json_file(resolve(base_dir, src.at("plant_path").get<std::string>())));
    } else {
      config_error("plant source needs 'plant' or 'plant_path'");
    }
    if (!src.contains("allocations") || !src.at("allocations").is_array())
      config_error("plant source needs an 'allocations' array");
    for (const auto& a : src.at("allocations")) {
      p.allocations.push_back(allocation_from_json(a));
    }
    p.interference = number_or(src, "interference", 0);
    c.source = p;
  } else {
    config_error("source.type must be \"replay\" or \"plant\"");
  }
  return c;
}

AgentConfig load_agent_config(const std::string& path) {
  const std::string dir = std::filesystem::path(path).parent_path().string();
  return agent_config_from_json(load_json_file(path), dir.empty() ? "." : dir);
}

std::unique_ptr<TelemetrySource> make_source(const AgentConfig& config) {
  try {
    if (const auto* r = std::get_if<ReplaySourceConfig>(&config.source)) {
      return std::make_unique<ReplayFileSource>(*r);
    }
    return std::make_unique<PlantSource>(std::get<PlantSourceConfig>(config.source));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    config_error(e.what());
  }
}

std::pair<std::string, int> parse_listen_address(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos) config_error("listen address must be host:port");
  std::string host = addr.substr(0, colon);
  if (host.empty()) host = "0.0.0.0";
  int port = -1;
  try {
    std::size_t used = 0;
    port = std::stoi(addr.substr(colon + 1), &used);
    if (used != addr.size() - colon - 1) port = -1;
  } catch (const std::exception&) {
  }
  if (port < 0 || port > 65535) config_error("bad port in '" + addr + "'");
  return {host, port};
}

Agent::Agent(AgentConfig config) : Agent(config, make_source(config)) {}

Agent::Agent(AgentConfig config, std::unique_ptr<TelemetrySource> source)
    : config_(std::move(config)),
      engine_(config_.engine, config_.topology, config_.slos),
      source_(std::move(source)) {}

Agent::~Agent() { stop(); }

void Agent::publish(NodeReport report) {
  auto snap = std::make_shared<Snapshot>();
  snap->metrics = render_openmetrics(&report);
  snap->node_json = to_json(report).dump();
  for (const auto& w : report.workload_reports) {
    snap->workload_json.emplace(w.workload_id, to_json(w).dump());
  }
  snap->report = std::move(report);
  std::lock_guard lock(snapshot_mu_);
  snapshot_ = std::move(snap);
}

std::shared_ptr<const Snapshot> Agent::snapshot() const {
  std::lock_guard lock(snapshot_mu_);
  return snapshot_;
}

std::optional<std::string> Agent::failure() const {
  std::lock_guard lock(failure_mu_);
  return failure_;
}

bool Agent::step_once() {
  auto batch = source_->next();
  if (!batch) {
    exhausted_ = true;
    return false;
  }
  publish(engine_.step(*batch));
  return true;
}

void Agent::run_loop(std::stop_token stop) {
  std::mutex mu;
  std::condition_variable_any cv;
  const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      Seconds(config_.window_s));
  auto next_tick = std::chrono::steady_clock::now();
  while (!stop.stop_requested()) {
    try {
      if (!step_once()) return;
    } catch (const std::exception& e) {
      std::lock_guard lock(failure_mu_);
      failure_ = e.what();
      return;
    }
    next_tick += period;
    std::unique_lock lock(mu);
    cv.wait_until(lock, stop, next_tick, [] { return false; });
  }
}

void Agent::start(const std::string& host, int port) {
  server_ = std::make_unique<httplib::Server>();
  // httplib defaults to SO_REUSEPORT, which lets a second agent share the
  // port silently. Keep SO_REUSEADDR only so a taken port fails to bind.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  });
  server_->Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("ok", "text/plain");
  });
  server_->Get("/metrics", [this](const httplib::Request&, httplib::Response& res) {
    const auto snap = snapshot();
    res.set_content(snap ? snap->metrics : render_openmetrics(nullptr),
                    std::string(kOpenMetricsContentType));
  });
  server_->Get("/v1/node", [this](const httplib::Request&, httplib::Response& res) {
    const auto snap = snapshot();
    if (!snap) {
      res.status = 503;
      res.set_content(R"({"error":"no report yet"})", "application/json");
      return;
    }
    res.set_content(snap->node_json, "application/json");
  });
  server_->Get(R"(/v1/workloads/([^/]+))",
               [this](const httplib::Request& req, httplib::Response& res) {
                 const auto snap = snapshot();
                 const std::string id = req.matches[1];
                 if (snap) {
                   if (const auto it = snap->workload_json.find(id);
                       it != snap->workload_json.end()) {
                     res.set_content(it->second, "application/json");
                     return;
                   }
                 }
                 res.status = 404;
                 res.set_content(json{{"error", "unknown workload"}, {"workload_id", id}}.dump(),
                                 "application/json");
               });

  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
    if (port_ <= 0) throw Error(ErrorCode::BindError, "cannot bind " + host);
  } else {
    if (!server_->bind_to_port(host, port)) {
      throw Error(ErrorCode::BindError,
                  "cannot bind " + host + ":" + std::to_string(port));
    }
    port_ = port;
  }
  http_thread_ = std::thread([this] { server_->listen_after_bind(); });
  loop_thread_ = std::jthread([this](std::stop_token st) { run_loop(st); });
}

void Agent::stop() {
  if (loop_thread_.joinable()) {
    loop_thread_.request_stop();
    loop_thread_.join();
  }
  if (server_) server_->stop();
  if (http_thread_.joinable()) http_thread_.join();
}

}  // namespace buoyancy
