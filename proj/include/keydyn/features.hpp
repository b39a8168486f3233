#pragma once

// Timing, sensor and aggregate feature extraction, and the fixed feature layouts
// used by the three classification concepts.

#include <algorithm>
#include <array>
#include <charconv>
#include <cstddef>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "keydyn/core.hpp"
#include "keydyn/error.hpp"

namespace keydyn {

enum class FeatureKind {
  DU1,  // hold: up_i - down_i
  UD,   // flight: down_{i+1} - up_i
  DD,   // down_{i+1} - down_i
  UU,   // up_{i+1} - up_i
  DU2,  // up_{i+1} - down_i
  PRESSURE,
  SIZE,
  XPOS,
  YPOS,
  AVG_TIME,
  AVG_PRESSURE,
  AVG_SIZE,
  DEVICE,
};

constexpr std::string_view to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::DU1: return "DU1";
    case FeatureKind::UD: return "UD";
    case FeatureKind::DD: return "DD";
    case FeatureKind::UU: return "UU";
    case FeatureKind::DU2: return "DU2";
    case FeatureKind::PRESSURE: return "PRESSURE";
    case FeatureKind::SIZE: return "SIZE";
    case FeatureKind::XPOS: return "XPOS";
    case FeatureKind::YPOS: return "YPOS";
    case FeatureKind::AVG_TIME: return "AVG_TIME";
    case FeatureKind::AVG_PRESSURE: return "AVG_PRESSURE";
    case FeatureKind::AVG_SIZE: return "AVG_SIZE";
    case FeatureKind::DEVICE: return "DEVICE";
  }
  return "?";
}

/// Interval kinds in the order AVG_TIME indices refer to them.
inline constexpr std::array<FeatureKind, 5> kIntervalKinds = {
    FeatureKind::DU1, FeatureKind::UD, FeatureKind::DD, FeatureKind::UU, FeatureKind::DU2};

struct FeatureEntry {
  FeatureKind kind;
  std::size_t index;

  auto operator<=>(const FeatureEntry&) const = default;
};

class FeatureLayout {
 public:
  FeatureLayout() = default;

  FeatureLayout(std::string id, std::vector<FeatureEntry> entries)
      : id_(std::move(id)), entries_(std::move(entries)) {
    std::set<FeatureEntry> seen;
    for (const auto& e : entries_) {
      if (!seen.insert(e).second) {
        throw Error(ErrorCode::InvalidLayout, "duplicate entry " + std::string(to_string(e.kind)) +
                                                  "[" + std::to_string(e.index) + "] in " + id_);
      }
      if ((e.kind == FeatureKind::AVG_TIME && e.index >= kIntervalKinds.size()) ||
          ((e.kind == FeatureKind::AVG_PRESSURE || e.kind == FeatureKind::AVG_SIZE) && e.index != 0)) {
        throw Error(ErrorCode::InvalidLayout, "aggregate index out of range in " + id_);
      }
    }
  }

  const std::string& id() const noexcept { return id_; }
  const std::vector<FeatureEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

  /// Smallest event count that populates every indexed entry.
  std::size_t min_events() const {
    std::size_t need = 1;
    for (const auto& e : entries_) {
      switch (e.kind) {
        case FeatureKind::DU1:
        case FeatureKind::PRESSURE:
        case FeatureKind::SIZE:
        case FeatureKind::XPOS:
        case FeatureKind::YPOS:
          need = std::max(need, e.index + 1);
          break;
        case FeatureKind::UD:
        case FeatureKind::DD:
        case FeatureKind::UU:
        case FeatureKind::DU2:
          need = std::max(need, e.index + 2);
          break;
        default:
          break;
      }
    }
    return need;
  }

 private:
  std::string id_;
  std::vector<FeatureEntry> entries_;
};

/// Values aligned with a layout. Unavailable entries hold 0.0 and a false mask bit.
struct FeatureVector {
  std::string layout_id;
  std::vector<double> values;
  std::vector<bool> available;

  std::size_t size() const noexcept { return values.size(); }

  static FeatureVector dense(std::string layout_id, std::vector<double> values) {
    FeatureVector v{std::move(layout_id), std::move(values), {}};
    v.available.assign(v.values.size(), true);
    return v;
  }

  bool operator==(const FeatureVector&) const = default;
};

struct TimingFeatures {
  std::vector<double> du1, ud, dd, uu, du2;

  const std::vector<double>& at(FeatureKind kind) const {
    switch (kind) {
      case FeatureKind::DU1: return du1;
      case FeatureKind::UD: return ud;
      case FeatureKind::DD: return dd;
      case FeatureKind::UU: return uu;
      case FeatureKind::DU2: return du2;
      default: throw Error(ErrorCode::InvalidArgument, "not a timing feature");
    }
  }
};

struct SensorFeatures {
  std::vector<std::optional<double>> pressure, size, xpos, ypos;

  const std::vector<std::optional<double>>& at(FeatureKind kind) const {
    switch (kind) {
      case FeatureKind::PRESSURE: return pressure;
      case FeatureKind::SIZE: return size;
      case FeatureKind::XPOS: return xpos;
      case FeatureKind::YPOS: return ypos;
      default: throw Error(ErrorCode::InvalidArgument, "not a sensor feature");
    }
  }
};

struct AggregateFeatures {
  double avg_time = 0.0;  // mean hold time (DU1)
  std::optional<double> avg_pressure;
  std::optional<double> avg_size;
};

inline TimingFeatures timing_features(const KeystrokeSample& sample) {
  TimingFeatures t;
  const auto& ev = sample.events;
  const std::size_t n = ev.size();
  t.du1.reserve(n);
  for (const auto& e : ev) t.du1.push_back(e.up_ms - e.down_ms);
  if (n < 2) return t;
  for (auto* v : {&t.ud, &t.dd, &t.uu, &t.du2}) v->reserve(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    t.ud.push_back(ev[i + 1].down_ms - ev[i].up_ms);
    t.dd.push_back(ev[i + 1].down_ms - ev[i].down_ms);
    t.uu.push_back(ev[i + 1].up_ms - ev[i].up_ms);
    t.du2.push_back(ev[i + 1].up_ms - ev[i].down_ms);
  }
  return t;
}

inline SensorFeatures sensor_features(const KeystrokeSample& sample) {
  SensorFeatures s;
  for (const auto& e : sample.events) {
    s.pressure.push_back(e.pressure);
    s.size.push_back(e.size);
    s.xpos.push_back(e.x);
    s.ypos.push_back(e.y);
  }
  return s;
}

namespace detail {

inline std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline std::optional<double> mean_of(const std::vector<std::optional<double>>& v) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& x : v) {
    if (x) {
      sum += *x;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

}  // namespace detail

inline AggregateFeatures aggregate_features(const KeystrokeSample& sample) {
  const auto t = timing_features(sample);
  const auto s = sensor_features(sample);
  return {detail::mean_of(t.du1).value_or(0.0), detail::mean_of(s.pressure), detail::mean_of(s.size)};
}

/// Extracts the layout's entries from a validated sample. DEVICE entries have no
/// source in the event model and are always reported unavailable.
inline FeatureVector build_vector(const KeystrokeSample& sample, const FeatureLayout& layout) {
  FeatureVector out;
  out.layout_id = layout.id();
  out.values.reserve(layout.size());
  out.available.reserve(layout.size());
  if (layout.size() == 0) return out;

  const auto timing = timing_features(sample);
  const auto sensors = sensor_features(sample);

  auto push = [&](std::optional<double> v) {
    out.values.push_back(v.value_or(0.0));
    out.available.push_back(v.has_value());
  };
  auto too_short = [&](const FeatureEntry& e) {
    return Error(ErrorCode::SampleTooShort,
                 std::string(to_string(e.kind)) + "[" + std::to_string(e.index) + "] needs more than " +
                     std::to_string(sample.events.size()) + " events");
  };

  for (const auto& e : layout.entries()) {
    switch (e.kind) {
      case FeatureKind::DU1:
      case FeatureKind::UD:
      case FeatureKind::DD:
      case FeatureKind::UU:
      case FeatureKind::DU2: {
        const auto& src = timing.at(e.kind);
        if (e.index >= src.size()) throw too_short(e);
        push(src[e.index]);
        break;
      }
      case FeatureKind::PRESSURE:
      case FeatureKind::SIZE:
      case FeatureKind::XPOS:
      case FeatureKind::YPOS: {
        const auto& src = sensors.at(e.kind);
        if (e.index >= src.size()) throw too_short(e);
        push(src[e.index]);
        break;
      }
      case FeatureKind::AVG_TIME:
        push(detail::mean_of(timing.at(kIntervalKinds[e.index])));
        break;
      case FeatureKind::AVG_PRESSURE:
        push(detail::mean_of(sensors.pressure));
        break;
      case FeatureKind::AVG_SIZE:
        push(detail::mean_of(sensors.size));
        break;
      case FeatureKind::DEVICE:
        push(std::nullopt);
        break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Built-in layouts

namespace detail {

inline void append_range(std::vector<FeatureEntry>& out, FeatureKind kind, std::size_t count,
                         std::size_t first = 0) {
  for (std::size_t i = 0; i < count; ++i) out.push_back({kind, first + i});
}

}  // namespace detail

/// 155 entries: 16-key password with hold, digraph, sensor, position, average
/// and device-specific features.
inline FeatureLayout concept1_layout() {
  using K = FeatureKind;
  std::vector<FeatureEntry> e;
  detail::append_range(e, K::DU1, 16);
  detail::append_range(e, K::UD, 15);
  detail::append_range(e, K::DD, 15);
  detail::append_range(e, K::UU, 15);
  detail::append_range(e, K::DU2, 15);
  detail::append_range(e, K::PRESSURE, 16);
  detail::append_range(e, K::SIZE, 16);
  detail::append_range(e, K::XPOS, 16);  // "X-Y P"
  detail::append_range(e, K::YPOS, 16);  // "X-Y C"
  detail::append_range(e, K::AVG_TIME, 5);
  detail::append_range(e, K::AVG_PRESSURE, 1);
  detail::append_range(e, K::AVG_SIZE, 1);
  detail::append_range(e, K::DEVICE, 8);
  return FeatureLayout("concept1", std::move(e));
}

/// 5x entries for an input of length x.
inline FeatureLayout concept2_layout(std::size_t x) {
  if (x == 0) throw Error(ErrorCode::InvalidArgument, "concept2 input length must be positive");
  using K = FeatureKind;
  std::vector<FeatureEntry> e;
  detail::append_range(e, K::DU1, x);
  detail::append_range(e, K::UD, x - 1);
  detail::append_range(e, K::DD, x - 1);
  detail::append_range(e, K::PRESSURE, x);
  detail::append_range(e, K::SIZE, x);
  detail::append_range(e, K::AVG_PRESSURE, 1);
  detail::append_range(e, K::AVG_SIZE, 1);
  return FeatureLayout("concept2-x" + std::to_string(x), std::move(e));
}

/// Digraph and size features over a 7-key entry, plus 48 device-specific slots
/// (18 device-specific, 6 D_n, 12 XyDn, 12 XyUp).
inline FeatureLayout concept3_layout() {
  using K = FeatureKind;
  std::vector<FeatureEntry> e;
  detail::append_range(e, K::UD, 6);
  detail::append_range(e, K::DD, 6);
  detail::append_range(e, K::UU, 6);
  detail::append_range(e, K::DU2, 6);
  detail::append_range(e, K::SIZE, 6);
  detail::append_range(e, K::DEVICE, 18 + 6 + 12 + 12);
  return FeatureLayout("concept3", std::move(e));
}

/// Resolves "concept1", "concept3" and "concept2-x<N>" identifiers.
inline FeatureLayout layout_from_id(std::string_view id) {
  if (id == "concept1") return concept1_layout();
  if (id == "concept3") return concept3_layout();
  constexpr std::string_view prefix = "concept2-x";
  if (id.substr(0, prefix.size()) == prefix) {
    std::size_t x = 0;
    const auto digits = id.substr(prefix.size());
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), x);
    if (ec == std::errc() && ptr == digits.data() + digits.size() && x > 0) return concept2_layout(x);
  }
  throw Error(ErrorCode::InvalidLayout, "unknown layout id '" + std::string(id) + "'");
}

}  // namespace keydyn
