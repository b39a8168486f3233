#pragma once

// Event CSV ingestion and export.
//
//   user_id,sample_id,key_index,key_label,down_ms,up_ms,pressure,size,x,y
//
// One row per key press; absent sensor readings are empty fields. Fields may be
// double-quoted (RFC 4180) so labels such as "," survive.

#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "keydyn/core.hpp"
#include "keydyn/error.hpp"

namespace keydyn::harness {

inline constexpr std::string_view kEventCsvHeader = "user_id,sample_id,key_index,key_label,down_ms,up_ms,pressure,size,x,y";

/// A sample whose events parsed but which violates a cross-event invariant.
struct RejectedSample {
  std::string user_id;
  std::string sample_id;
  std::size_t first_line = 0;
  std::vector<std::string> violations;
};

struct LoadResult {
  Dataset dataset;
  std::vector<RejectedSample> rejected;
};

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          fields.back() += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        fields.back() += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.emplace_back();
    } else {
      fields.back() += ch;
    }
  }
  if (quoted) throw Error(ErrorCode::MalformedRow, "unterminated quote on line " + std::to_string(line_no), line_no);
  return fields;
}

inline double parse_real(const std::string& s, std::string_view name, std::size_t line_no) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::MalformedRow, std::string(name) + " '" + s + "' on line " + std::to_string(line_no),
                line_no);
  }
  return v;
}

inline std::optional<double> parse_optional_real(const std::string& s, std::string_view name, std::size_t line_no) {
  if (s.empty()) return std::nullopt;
  return parse_real(s, name, line_no);
}

inline std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

inline std::string format_real(double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

inline void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace detail

/// Parses an event CSV. Row-level problems throw MalformedRow with the 1-based
/// line number; samples failing cross-event validation are returned in
/// `rejected`. Accepted samples are re-based so their first press is at 0 ms.
inline LoadResult parse_events_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw Error(ErrorCode::EmptyFile, "no header");
  ++line_no;
  detail::strip_cr(line);
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (line != kEventCsvHeader) throw Error(ErrorCode::MalformedHeader, "expected '" + std::string(kEventCsvHeader) + "'");

  struct Pending {
    KeystrokeSample sample;
    std::size_t first_line;
  };
  std::vector<Pending> pending;
  std::map<std::pair<std::string, std::string>, std::size_t> slot;

  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line, line_no);
    if (f.size() != 10) {
      throw Error(ErrorCode::MalformedRow,
                  "expected 10 fields, got " + std::to_string(f.size()) + " on line " + std::to_string(line_no), line_no);
    }
    KeystrokeEvent e;
    std::size_t key_index = 0;
    const auto [ptr, ec] = std::from_chars(f[2].data(), f[2].data() + f[2].size(), key_index);
    if (f[2].empty() || ec != std::errc() || ptr != f[2].data() + f[2].size()) {
      throw Error(ErrorCode::MalformedRow, "key_index '" + f[2] + "' on line " + std::to_string(line_no), line_no);
    }
    e.key_index = key_index;
    e.key_label = f[3];
    e.down_ms = detail::parse_real(f[4], "down_ms", line_no);
    e.up_ms = detail::parse_real(f[5], "up_ms", line_no);
    e.pressure = detail::parse_optional_real(f[6], "pressure", line_no);
    e.size = detail::parse_optional_real(f[7], "size", line_no);
    e.x = detail::parse_optional_real(f[8], "x", line_no);
    e.y = detail::parse_optional_real(f[9], "y", line_no);
    if (f[0].empty() || f[1].empty()) {
      throw Error(ErrorCode::MalformedRow, "empty user_id or sample_id on line " + std::to_string(line_no), line_no);
    }
    if (const auto v = validate_event(e, e.key_index); !v.empty()) {
      throw Error(ErrorCode::MalformedRow, v.front() + " on line " + std::to_string(line_no), line_no);
    }

    const auto key = std::make_pair(f[0], f[1]);
    auto it = slot.find(key);
    if (it == slot.end()) {
      it = slot.emplace(key, pending.size()).first;
      pending.push_back({KeystrokeSample{f[0], f[1], {}}, line_no});
    }
    pending[it->second].sample.events.push_back(std::move(e));
  }
  if (pending.empty()) throw Error(ErrorCode::EmptyFile, "header only");

  LoadResult out;
  for (auto& p : pending) {
    auto violations = validate_sample(p.sample);
    if (violations.empty()) {
      out.dataset.samples.push_back(rebase(std::move(p.sample)));
    } else {
      out.rejected.push_back({p.sample.user_id, p.sample.sample_id, p.first_line, std::move(violations)});
    }
  }
  return out;
}

inline LoadResult load_events_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open '" + path + "'");
  return parse_events_csv(in);
}

inline void write_events_csv(std::ostream& os, const Dataset& dataset) {
  auto opt = [](const std::optional<double>& v) { return v ? detail::format_real(*v) : std::string(); };
  os << kEventCsvHeader << '\n';
  for (const auto& s : dataset.samples) {
    for (const auto& e : s.events) {
      os << detail::quote_if_needed(s.user_id) << ',' << detail::quote_if_needed(s.sample_id) << ',' << e.key_index
         << ',' << detail::quote_if_needed(e.key_label) << ',' << detail::format_real(e.down_ms) << ','
         << detail::format_real(e.up_ms) << ',' << opt(e.pressure) << ',' << opt(e.size) << ',' << opt(e.x) << ','
         << opt(e.y) << '\n';
    }
  }
}

inline void save_events_csv(const std::string& path, const Dataset& dataset) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::InvalidArgument, "cannot write '" + path + "'");
  write_events_csv(os, dataset);
}

}  // namespace keydyn::harness
