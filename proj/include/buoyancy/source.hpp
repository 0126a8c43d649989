#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "buoyancy/plant.hpp"
#include "buoyancy/replay.hpp"

namespace buoyancy {

// Producer of one batch of samples per window. Single consumer.
class TelemetrySource {
 public:
  virtual ~TelemetrySource() = default;
  // nullopt at end of stream.
  virtual std::optional<std::vector<TelemetrySample>> next() = 0;
};

struct ReplaySourceConfig {
  std::string path;
  bool strict = true;
  bool loop = false;  // restart from the top at end of file
};

struct PlantSourceConfig {
  PlantConfig plant;
  std::vector<Allocation> allocations;
  double interference = 0;
};

class ReplayFileSource : public TelemetrySource {
 public:
  explicit ReplayFileSource(ReplaySourceConfig config);
  std::optional<std::vector<TelemetrySample>> next() override;

 private:
  ReplaySourceConfig config_;
  ReplaySource source_;
};

class PlantSource : public TelemetrySource {
 public:
  explicit PlantSource(PlantSourceConfig config);
  std::optional<std::vector<TelemetrySample>> next() override;

 private:
  PlantSourceConfig config_;
  Plant plant_;
};

}  // namespace buoyancy
