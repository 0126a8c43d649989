#include "buoyancy/source.hpp"

#include <iostream>

namespace buoyancy {

ReplayFileSource::ReplayFileSource(ReplaySourceConfig config)
    : config_(std::move(config)),
      source_(ReplaySource::open(config_.path, config_.strict)) {
  source_.set_warning_sink([](const std::string& w) { std::cerr << "warning: " << w << "\n"; });
}

std::optional<std::vector<TelemetrySample>> ReplayFileSource::next() {
  auto batch = source_.next();
  if (!batch && config_.loop) {
    source_ = ReplaySource::open(config_.path, config_.strict);
    batch = source_.next();
  }
  return batch;
}

PlantSource::PlantSource(PlantSourceConfig config)
    : config_(std::move(config)), plant_(config_.plant) {}

std::optional<std::vector<TelemetrySample>> PlantSource::next() {
  return plant_.step(config_.allocations, config_.interference).batch;
}

}  // namespace buoyancy
