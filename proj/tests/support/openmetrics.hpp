#pragma once

// Minimal strict reader for the OpenMetrics text format, enough to check
// what the agent emits: TYPE/HELP/UNIT metadata, contiguous families,
// label sets, float values and the mandatory "# EOF" terminator.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace openmetrics {

struct Sample {
  std::string name;
  std::map<std::string, std::string> labels;
  double value = 0;
};

struct Family {
  std::string name;
  std::string type;
  std::vector<Sample> samples;
};

inline bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    const bool alpha = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == ':';
    if (!(alpha || (i > 0 && c >= '0' && c <= '9'))) return false;
  }
  return true;
}

inline double parse_value(const std::string& s) {
  if (s == "NaN") return std::numeric_limits<double>::quiet_NaN();
  if (s == "+Inf") return std::numeric_limits<double>::infinity();
  if (s == "-Inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::runtime_error("bad value '" + s + "'");
  return v;
}

inline std::vector<Family> parse(const std::string& text) {
  if (text.size() < 6 || text.substr(text.size() - 6) != "# EOF\n") {
    throw std::runtime_error("missing '# EOF' terminator");
  }
  std::vector<Family> families;
  std::set<std::string> closed;
  std::size_t pos = 0;
  bool eof = false;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) throw std::runtime_error("line without newline");
    const std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (eof) throw std::runtime_error("content after # EOF");
    if (line.empty()) throw std::runtime_error("blank line");
    if (line == "# EOF") {
      eof = true;
      continue;
    }
    if (line.rfind("# ", 0) == 0) {
      const std::size_t sp1 = line.find(' ', 2);
      if (sp1 == std::string::npos) throw std::runtime_error("bad metadata: " + line);
      const std::string kind = line.substr(2, sp1 - 2);
      const std::size_t sp2 = line.find(' ', sp1 + 1);
      const std::string name = line.substr(sp1 + 1, sp2 == std::string::npos ? std::string::npos : sp2 - sp1 - 1);
      if (!valid_name(name)) throw std::runtime_error("bad family name: " + name);
      if (kind != "TYPE" && kind != "HELP" && kind != "UNIT")
        throw std::runtime_error("unknown metadata: " + line);
      if (families.empty() || families.back().name != name) {
        if (closed.contains(name)) throw std::runtime_error("family not contiguous: " + name);
        if (!families.empty()) closed.insert(families.back().name);
        families.push_back({name, "unknown", {}});
      }
      if (kind == "TYPE") {
        families.back().type = line.substr(sp2 + 1);
        if (!families.back().samples.empty())
          throw std::runtime_error("TYPE after samples: " + name);
      }
      continue;
    }
    Sample s;
    std::size_t i = 0;
    while (i < line.size() && line[i] != '{' && line[i] != ' ') ++i;
    s.name = line.substr(0, i);
    if (!valid_name(s.name)) throw std::runtime_error("bad sample name: " + line);
    if (i < line.size() && line[i] == '{') {
      ++i;
      while (line.at(i) != '}') {
        const std::size_t eq = line.find('=', i);
        const std::string key = line.substr(i, eq - i);
        if (!valid_name(key)) throw std::runtime_error("bad label name: " + line);
        if (line.at(eq + 1) != '"') throw std::runtime_error("unquoted label: " + line);
        std::string value;
        std::size_t j = eq + 2;
        for (; line.at(j) != '"'; ++j) {
          if (line[j] == '\\') {
            const char e = line.at(++j);
            value += e == 'n' ? '\n' : e;
          } else {
            value += line[j];
          }
        }
        if (!s.labels.emplace(key, value).second)
          throw std::runtime_error("duplicate label: " + line);
        i = j + 1;
        if (line.at(i) == ',') ++i;
      }
      ++i;
    }
    if (i >= line.size() || line[i] != ' ') throw std::runtime_error("missing value: " + line);
    const std::string rest = line.substr(i + 1);
    if (rest.find(' ') != std::string::npos)
      throw std::runtime_error("unexpected timestamp or exemplar: " + line);
    s.value = parse_value(rest);
    if (families.empty() || families.back().name != s.name) {
      if (closed.contains(s.name) ||
          std::any_of(families.begin(), families.end(),
                      [&](const Family& f) { return f.name == s.name; }))
        throw std::runtime_error("family not contiguous: " + s.name);
      if (!families.empty()) closed.insert(families.back().name);
      families.push_back({s.name, "unknown", {}});
    }
    for (const auto& other : families.back().samples) {
      if (other.labels == s.labels) throw std::runtime_error("duplicate sample: " + line);
    }
    families.back().samples.push_back(std::move(s));
  }
  if (!eof) throw std::runtime_error("missing # EOF");
  return families;
}

}  // namespace openmetrics
