#pragma once

// Domain model: keystroke events, samples and datasets, plus raw-input validation.

#include <cmath>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace keydyn {

/// One key press. Timestamps are milliseconds; sensor readings are optional
/// because devices differ in what they report (absent is not zero).
struct KeystrokeEvent {
  std::size_t key_index = 0;
  std::string key_label;
  double down_ms = 0.0;
  double up_ms = 0.0;
  std::optional<double> pressure;
  std::optional<double> size;
  std::optional<double> x;
  std::optional<double> y;

  bool operator==(const KeystrokeEvent&) const = default;
};

/// One complete input (e.g. a password entry) by one user.
struct KeystrokeSample {
  std::string user_id;
  std::string sample_id;
  std::vector<KeystrokeEvent> events;

  std::size_t size() const noexcept { return events.size(); }
};

struct Dataset {
  std::vector<KeystrokeSample> samples;
  std::optional<std::string> expected_text;
};

namespace detail {

inline std::string at_index(std::string_view what, std::size_t i) {
  return std::string(what) + " at index " + std::to_string(i);
}

inline void check_sensor(std::vector<std::string>& out, const std::optional<double>& v,
                         std::string_view name, bool non_negative, std::size_t i) {
  if (!v) return;
  if (!std::isfinite(*v)) {
    out.push_back(at_index(std::string(name) + " must be finite", i));
  } else if (non_negative && *v < 0.0) {
    out.push_back(at_index(std::string(name) + " must be non-negative", i));
  }
}

}  // namespace detail

/// Checks only what a single event can violate on its own.
inline std::vector<std::string> validate_event(const KeystrokeEvent& e, std::size_t i) {
  std::vector<std::string> out;
  const bool finite = std::isfinite(e.down_ms) && std::isfinite(e.up_ms);
  if (!finite) {
    out.push_back(detail::at_index("down_ms and up_ms must be finite", i));
  } else {
    if (e.down_ms < 0.0) out.push_back(detail::at_index("down_ms must be non-negative", i));
    if (!(e.up_ms > e.down_ms)) out.push_back(detail::at_index("up_ms must exceed down_ms", i));
  }
  detail::check_sensor(out, e.pressure, "pressure", true, i);
  detail::check_sensor(out, e.size, "size", true, i);
  detail::check_sensor(out, e.x, "x", false, i);
  detail::check_sensor(out, e.y, "y", false, i);
  return out;
}

/// Returns one description per violated sample or event invariant; empty means valid.
inline std::vector<std::string> validate_sample(const KeystrokeSample& sample) {
  std::vector<std::string> out;
  if (sample.events.empty()) {
    out.emplace_back("events must be non-empty");
    return out;
  }
  for (std::size_t i = 0; i < sample.events.size(); ++i) {
    const auto& e = sample.events[i];
    auto local = validate_event(e, i);
    out.insert(out.end(), local.begin(), local.end());
    if (i == 0) {
      if (e.key_index != 0) out.emplace_back("key_index must start at 0");
      continue;
    }
    const auto& prev = sample.events[i - 1];
    if (e.key_index <= prev.key_index) {
      out.push_back(detail::at_index("key_index must be strictly increasing", i));
    }
    if (std::isfinite(e.down_ms) && std::isfinite(prev.down_ms) && e.down_ms < prev.down_ms) {
      out.push_back(detail::at_index("down_ms must be non-decreasing", i));
    }
  }
  return out;
}

/// Dataset-level check: (user_id, sample_id) pairs must be unique.
inline std::vector<std::string> validate_dataset(const Dataset& dataset) {
  std::vector<std::string> out;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& s : dataset.samples) {
    if (!seen.emplace(s.user_id, s.sample_id).second) {
      out.push_back("duplicate sample " + s.user_id + "/" + s.sample_id);
    }
  }
  return out;
}

/// Shifts all timestamps so the first press is at 0 ms.
inline KeystrokeSample rebase(KeystrokeSample sample) {
  if (sample.events.empty()) return sample;
  const double origin = sample.events.front().down_ms;
  for (auto& e : sample.events) {
    e.down_ms -= origin;
    e.up_ms -= origin;
  }
  return sample;
}

}  // namespace keydyn
