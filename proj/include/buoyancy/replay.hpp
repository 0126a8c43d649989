#pragma once

#include <functional>
#include <istream>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "buoyancy/model.hpp"

namespace buoyancy {

// RFC 3339 timestamps, e.g. "2025-01-01T00:00:00Z" or with fractional
// seconds and a numeric offset.
Timestamp parse_rfc3339(std::string_view text);
std::string format_rfc3339(Timestamp ts);

struct ReplayRecord {
  TelemetrySample sample;
  // Optional "segment" label used by offline analysis ("low" / "high").
  std::optional<std::string> segment;
  std::size_t line = 0;
};

// Parses one JSONL line. Throws ParseError for malformed JSON and
// SchemaError naming the offending field. In non-strict mode unknown fields
// are passed to `warn` instead of rejected.
ReplayRecord parse_telemetry_line(
    std::string_view line, std::size_t line_number, bool strict = true,
    const std::function<void(const std::string&)>& warn = {});

std::string to_jsonl(const TelemetrySample& sample,
                     const std::optional<std::string>& segment = std::nullopt);

/**
 * Reads workload-window records from a JSONL stream and groups consecutive
 * records with the same window_start into one batch, in file order.
 * Blank lines are skipped.
 */
class ReplaySource {
 public:
  explicit ReplaySource(std::unique_ptr<std::istream> input, bool strict = true);
  static ReplaySource open(const std::string& path, bool strict = true);

  // Next window, or nullopt at end of stream.
  std::optional<std::vector<ReplayRecord>> next_records();
  std::optional<std::vector<TelemetrySample>> next();

  void set_warning_sink(std::function<void(const std::string&)> sink) {
    warn_ = std::move(sink);
  }

 private:
  std::optional<ReplayRecord> read_record();

  std::unique_ptr<std::istream> input_;
  bool strict_;
  std::size_t line_ = 0;
  std::optional<ReplayRecord> pending_;
  std::function<void(const std::string&)> warn_;
};

// Reads a whole replay file.
std::vector<std::vector<ReplayRecord>> read_replay_file(const std::string& path,
                                                        bool strict = true);

}  // namespace buoyancy
