#include "buoyancy/replay.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include <json.hpp>

namespace buoyancy {

using nlohmann::json;

namespace {

bool parse_int(std::string_view s, int& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

[[noreturn]] void bad_timestamp(std::string_view text) {
  throw Error(ErrorCode::InvalidArgument,
              "not an RFC 3339 timestamp: '" + std::string(text) + "'");
}

const std::set<std::string, std::less<>> kKnownFields{
    "workload_id", "window_start", "window_end", "cpu_user_time_s",
    "cpu_alloc_cores", "mem_refs", "l1_miss", "l2_miss", "l3_miss",
    "mbw_bytes", "mbw_alloc_bytes_per_s", "llc_alloc_kib", "kpi_value",
    "segment"};

}  // namespace

Timestamp parse_rfc3339(std::string_view t) {
  // YYYY-MM-DDTHH:MM:SS[.frac](Z|+HH:MM|-HH:MM)
  if (t.size() < 20 || t[4] != '-' || t[7] != '-' ||
      (t[10] != 'T' && t[10] != 't' && t[10] != ' ') || t[13] != ':' ||
      t[16] != ':') {
    bad_timestamp(t);
  }
  int year, month, day, hour, minute, second;
  if (!parse_int(t.substr(0, 4), year) || !parse_int(t.substr(5, 2), month) ||
      !parse_int(t.substr(8, 2), day) || !parse_int(t.substr(11, 2), hour) ||
      !parse_int(t.substr(14, 2), minute) ||
      !parse_int(t.substr(17, 2), second)) {
    bad_timestamp(t);
  }
  std::size_t pos = 19;
  std::int64_t micros = 0;
  if (pos < t.size() && t[pos] == '.') {
    ++pos;
    int digits = 0;
    while (pos < t.size() && t[pos] >= '0' && t[pos] <= '9') {
      if (digits < 6) micros = micros * 10 + (t[pos] - '0');
      ++digits;
      ++pos;
    }
    if (digits == 0) bad_timestamp(t);
    for (int d = digits; d < 6; ++d) micros *= 10;
  }
  int offset_minutes = 0;
  if (pos < t.size() && (t[pos] == 'Z' || t[pos] == 'z')) {
    ++pos;
  } else if (pos + 6 == t.size() && (t[pos] == '+' || t[pos] == '-') &&
             t[pos + 3] == ':') {
    int oh, om;
    if (!parse_int(t.substr(pos + 1, 2), oh) ||
        !parse_int(t.substr(pos + 4, 2), om)) {
      bad_timestamp(t);
    }
    offset_minutes = (oh * 60 + om) * (t[pos] == '-' ? -1 : 1);
    pos += 6;
  } else {
    bad_timestamp(t);
  }
  if (pos != t.size()) bad_timestamp(t);

  const std::chrono::year_month_day ymd{
      std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
      std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok() || hour > 23 || minute > 59 || second > 60) bad_timestamp(t);

  using namespace std::chrono;
  const auto local = sys_days{ymd} + hours{hour} + minutes{minute} +
                     seconds{second} + microseconds{micros};
  return Timestamp{local - minutes{offset_minutes}};
}

std::string format_rfc3339(Timestamp ts) {
  using namespace std::chrono;
  const auto day = floor<days>(ts);
  const year_month_day ymd{day};
  const auto micros = (ts - day).count();
  const std::int64_t secs = micros / 1'000'000;
  const std::int64_t frac = micros % 1'000'000;
  char buf[48];
  int n = std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lld",
                        static_cast<int>(ymd.year()),
                        static_cast<unsigned>(ymd.month()),
                        static_cast<unsigned>(ymd.day()),
                        static_cast<long long>(secs / 3600),
                        static_cast<long long>(secs / 60 % 60),
                        static_cast<long long>(secs % 60));
  if (frac != 0) {
    n += std::snprintf(buf + n, sizeof buf - n, ".%06lld",
                       static_cast<long long>(frac));
  }
  std::snprintf(buf + n, sizeof buf - n, "Z");
  return buf;
}

ReplayRecord parse_telemetry_line(
    std::string_view line, std::size_t line_number, bool strict,
    const std::function<void(const std::string&)>& warn) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(line_number, e.what());
  }
  if (!obj.is_object()) throw ParseError(line_number, "expected a JSON object");

  for (const auto& [key, value] : obj.items()) {
    if (kKnownFields.contains(key)) continue;
    if (strict) throw SchemaError(line_number, key, "unknown field");
    if (warn) warn("line " + std::to_string(line_number) + ": ignoring unknown field '" + key + "'");
  }

  auto schema = [&](const char* field, const std::string& what) {
    return SchemaError(line_number, field, what);
  };
  auto required = [&](const char* field) -> const json& {
    const auto it = obj.find(field);
    if (it == obj.end() || it->is_null()) throw schema(field, "missing");
    return *it;
  };
  auto real = [&](const char* field, const json& v) {
    if (!v.is_number()) throw schema(field, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d) || d < 0) throw schema(field, "must be finite and >= 0");
    return d;
  };
  auto count = [&](const char* field) -> std::uint64_t {
    const json& v = required(field);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) throw schema(field, "must be >= 0");
    if (v.is_number_float() && v.get<double>() < 0) throw schema(field, "must be >= 0");
    throw schema(field, "expected a non-negative integer");
  };
  auto optional_real = [&](const char* field) -> std::optional<double> {
    const auto it = obj.find(field);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    return real(field, *it);
  };
  auto timestamp = [&](const char* field) {
    const json& v = required(field);
    if (!v.is_string()) throw schema(field, "expected an RFC 3339 string");
    try {
      return parse_rfc3339(v.get<std::string>());
    } catch (const Error& e) {
      throw schema(field, e.what());
    }
  };

  ReplayRecord rec;
  rec.line = line_number;
  TelemetrySample& s = rec.sample;
  const json& id = required("workload_id");
  if (!id.is_string() || id.get<std::string>().empty())
    throw schema("workload_id", "expected a non-empty string");
  s.workload_id = id.get<std::string>();
  s.window_start = timestamp("window_start");
  s.window_end = timestamp("window_end");
  if (!(s.window_end > s.window_start))
    throw schema("window_end", "must be later than window_start");
  s.cpu_user_time_s = real("cpu_user_time_s", required("cpu_user_time_s"));
  s.cpu_alloc_cores = real("cpu_alloc_cores", required("cpu_alloc_cores"));
  s.mem_refs = count("mem_refs");
  s.l1_miss = count("l1_miss");
  s.l2_miss = count("l2_miss");
  s.l3_miss = count("l3_miss");
  s.mbw_bytes = count("mbw_bytes");
  s.mbw_alloc_bytes_per_s = optional_real("mbw_alloc_bytes_per_s");
  s.llc_alloc_kib = optional_real("llc_alloc_kib");
  if (s.llc_alloc_kib && !(*s.llc_alloc_kib > 0))
    throw schema("llc_alloc_kib", "must be > 0");
  s.kpi_value = optional_real("kpi_value");
  if (const auto it = obj.find("segment"); it != obj.end() && !it->is_null()) {
    if (!it->is_string()) throw schema("segment", "expected a string");
    rec.segment = it->get<std::string>();
  }
  return rec;
}

std::string to_jsonl(const TelemetrySample& s,
                     const std::optional<std::string>& segment) {
  auto nullable = [](const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
  };
  json obj{
      {"workload_id", s.workload_id},
      {"window_start", format_rfc3339(s.window_start)},
      {"window_end", format_rfc3339(s.window_end)},
      {"cpu_user_time_s", s.cpu_user_time_s},
      {"cpu_alloc_cores", s.cpu_alloc_cores},
      {"mem_refs", s.mem_refs},
      {"l1_miss", s.l1_miss},
      {"l2_miss", s.l2_miss},
      {"l3_miss", s.l3_miss},
      {"mbw_bytes", s.mbw_bytes},
      {"mbw_alloc_bytes_per_s", nullable(s.mbw_alloc_bytes_per_s)},
      {"llc_alloc_kib", nullable(s.llc_alloc_kib)},
      {"kpi_value", nullable(s.kpi_value)},
  };
  if (segment) obj["segment"] = *segment;
  return obj.dump();
}

ReplaySource::ReplaySource(std::unique_ptr<std::istream> input, bool strict)
    : input_(std::move(input)), strict_(strict) {}

ReplaySource ReplaySource::open(const std::string& path, bool strict) {
  auto file = std::make_unique<std::ifstream>(path);
  if (!*file) throw Error(ErrorCode::ConfigError, "cannot open " + path);
  return ReplaySource(std::move(file), strict);
}

std::optional<ReplayRecord> ReplaySource::read_record() {
  std::string text;
  while (std::getline(*input_, text)) {
    ++line_;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    return parse_telemetry_line(text, line_, strict_, warn_);
  }
  return std::nullopt;
}

std::optional<std::vector<ReplayRecord>> ReplaySource::next_records() {
  if (!pending_) pending_ = read_record();
  if (!pending_) return std::nullopt;
  std::vector<ReplayRecord> batch;
  const Timestamp start = pending_->sample.window_start;
  while (pending_ && pending_->sample.window_start == start) {
    batch.push_back(std::move(*pending_));
    pending_ = read_record();
  }
  return batch;
}

std::optional<std::vector<TelemetrySample>> ReplaySource::next() {
  auto records = next_records();
  if (!records) return std::nullopt;
  std::vector<TelemetrySample> batch;
  batch.reserve(records->size());
  for (auto& r : *records) batch.push_back(std::move(r.sample));
  return batch;
}

std::vector<std::vector<ReplayRecord>> read_replay_file(const std::string& path,
                                                        bool strict) {
  ReplaySource source = ReplaySource::open(path, strict);
  std::vector<std::vector<ReplayRecord>> windows;
  while (auto batch = source.next_records()) windows.push_back(std::move(*batch));
  return windows;
}

}  // namespace buoyancy
