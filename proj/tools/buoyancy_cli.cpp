// buoyancy: node agent and offline analysis tools.
//
//   buoyancy serve --config PATH --listen ADDR
//   buoyancy score --input PATH [--config PATH]
//   buoyancy analyze --input PATH --slo PATH --format csv|table
//   buoyancy surface --alpha F --step F
//   buoyancy controller-sim --plant PATH --ctrl PATH --schedule PATH --out CSV

#include <csignal>
#include <ctime>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "buoyancy/agent.hpp"
#include "buoyancy/analysis.hpp"
#include "buoyancy/controller.hpp"
#include "buoyancy/json_io.hpp"

namespace {

using namespace buoyancy;

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

int serve(const std::string& config_path, const std::string& listen) {
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  // Block before any thread starts so only sigtimedwait sees them.
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  const AgentConfig config = load_agent_config(config_path);
  const auto [host, port] = parse_listen_address(listen);
  Agent agent(config);
  agent.start(host, port);
  std::cerr << "serving on " << host << ":" << agent.port() << "\n";

  const timespec poll{0, 200'000'000};
  int status = 0;
  while (true) {
    if (sigtimedwait(&signals, nullptr, &poll) > 0) break;
    if (auto failure = agent.failure()) {
      std::cerr << "error: " << *failure << "\n";
      status = kExitRuntime;
      break;
    }
  }
  agent.stop();
  if (const auto snap = agent.snapshot()) std::cout << snap->node_json << "\n";
  return status;
}

int score(const std::string& input, const std::string& config_path, bool strict) {
  EngineConfig engine_config;
  CacheTopology topology = xeon_4309y_topology();
  std::map<std::string, SloSpec> slos;
  if (!config_path.empty()) {
    nlohmann::json j = load_json_file(config_path);
    j["source"] = nlohmann::json{{"type", "replay"}, {"path", input}};
    const AgentConfig c = agent_config_from_json(j);
    engine_config = c.engine;
    topology = c.topology;
    slos = c.slos;
  }
  Engine engine(engine_config, topology, slos);
  ReplaySource source = ReplaySource::open(input, strict);
  while (auto batch = source.next()) {
    std::cout << to_json(engine.step(*batch)).dump() << "\n";
  }
  return 0;
}

int analyze(const std::string& input, const std::string& slo_path,
            const std::string& format) {
  std::vector<SegmentMedians> medians;
  if (looks_like_medians_csv(input)) {
    medians = read_medians_csv(input);
  } else {
    if (slo_path.empty()) {
      throw Error(ErrorCode::ConfigError, "--slo is required for telemetry replays");
    }
    // Either a bare SLO map or a full agent config with "slo", "topology",
    // "alpha" and friends.
    const nlohmann::json j = load_json_file(slo_path);
    EngineConfig engine_config;
    CacheTopology topology = xeon_4309y_topology();
    std::map<std::string, SloSpec> slos;
    if (j.contains("slo") && j.contains("topology")) {
      nlohmann::json copy = j;
      copy["source"] = nlohmann::json{{"type", "replay"}, {"path", input}};
      const AgentConfig c = agent_config_from_json(copy);
      engine_config = c.engine;
      topology = c.topology;
      slos = c.slos;
    } else {
      slos = slos_from_json(j.contains("slo") ? j.at("slo") : j);
    }
    Engine engine(engine_config, topology, slos);
    medians = segment_medians(read_replay_file(input), engine);
  }
  const HeadroomTable table = headroom_table(medians);
  std::cout << (format == "csv" ? format_headroom_csv(table) : format_headroom_text(table));
  return 0;
}

int surface(double alpha, double step, double threshold) {
  std::vector<SurfacePoint> points;
  try {
    points = buoyancy_surface(alpha, step, threshold);
  } catch (const Error& e) {
    // Only the command-line arguments can be wrong here.
    throw Error(ErrorCode::ConfigError, e.what());
  }
  std::cout << format_surface_csv(points);
  return 0;
}

int controller_sim(const std::string& plant_path, const std::string& ctrl_path,
                   const std::string& schedule_path, const std::string& out_path,
                   const std::string& bands_path) {
  const PlantConfig plant = plant_config_from_json(load_json_file(plant_path));
  const ControllerConfig ctrl = controller_config_from_json(load_json_file(ctrl_path));
  const InterferenceSchedule schedule = schedule_from_json(load_json_file(schedule_path));
  const ExperimentResult result = run_experiment(plant, ctrl, schedule);

  auto write = [](const std::string& path, const std::string& text) {
    if (path == "-") {
      std::cout << text;
      return;
    }
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + path);
    out << text;
  };
  write(out_path, format_runs_csv(result));
  if (!bands_path.empty()) write(bands_path, format_bands_csv(result));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Workload buoyancy scoring agent and analysis tools"};
  app.require_subcommand(1);

  std::string config_path;
  std::string listen = "127.0.0.1:9464";
  auto* serve_cmd = app.add_subcommand("serve", "Run the scoring agent with an HTTP endpoint");
  serve_cmd->add_option("--config", config_path, "Agent config (JSON)")->required();
  serve_cmd->add_option("--listen", listen, "host:port to listen on");

  std::string input;
  bool lenient = false;
  auto* score_cmd = app.add_subcommand("score", "Replay telemetry and print one NodeReport per window");
  score_cmd->add_option("--input", input, "Telemetry JSONL")->required();
  score_cmd->add_option("--config", config_path, "Agent config supplying topology, SLOs and weights");
  score_cmd->add_flag("--lenient", lenient, "Ignore unknown fields instead of rejecting them");

  std::string slo_path;
  std::string format = "table";
  auto* analyze_cmd = app.add_subcommand("analyze", "Compare latency and buoyancy between load levels");
  analyze_cmd->add_option("--input", input, "Telemetry JSONL with low/high segments, or medians CSV")
      ->required();
  analyze_cmd->add_option("--slo", slo_path, "SLO map or agent config (JSON)");
  analyze_cmd->add_option("--format", format, "csv or table")
      ->check(CLI::IsMember({"csv", "table"}));

  double alpha = 0.7;
  double step = 0.05;
  double threshold = 0.1;
  auto* surface_cmd = app.add_subcommand("surface", "Dump buoyancy over a (P, r) grid as CSV");
  surface_cmd->add_option("--alpha", alpha, "Weight of the worst resource")
      ->check(CLI::Range(0.0, 1.0));
  surface_cmd->add_option("--step", step, "Grid step in (0, 0.5]");
  surface_cmd->add_option("--threshold", threshold, "Approaching-violation threshold");

  std::string plant_path, ctrl_path, schedule_path, out_path, bands_path;
  auto* sim_cmd = app.add_subcommand("controller-sim", "Closed-loop extremum seeking against the plant");
  sim_cmd->add_option("--plant", plant_path, "Plant config (JSON)")->required();
  sim_cmd->add_option("--ctrl", ctrl_path, "Controller config (JSON)")->required();
  sim_cmd->add_option("--schedule", schedule_path, "Interference schedule (JSON)")->required();
  sim_cmd->add_option("--out", out_path, "Per-window CSV, '-' for stdout")->required();
  sim_cmd->add_option("--bands", bands_path, "Optional CSV of median and p10/p90 bands");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*serve_cmd) return serve(config_path, listen);
    if (*score_cmd) return score(input, config_path, !lenient);
    if (*analyze_cmd) return analyze(input, slo_path, format);
    if (*surface_cmd) return surface(alpha, step, threshold);
    if (*sim_cmd) return controller_sim(plant_path, ctrl_path, schedule_path, out_path, bands_path);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::ConfigError ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
