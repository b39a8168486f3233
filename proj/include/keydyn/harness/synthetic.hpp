#pragma once

// Synthetic typists. Each event's hold and flight times are independent normal
// draws from the user's profile, truncated at 1 ms. No inter-key correlation is
// modelled, so the data is useful for separation tests, not as human-realistic
// typing.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "keydyn/core.hpp"
#include "keydyn/error.hpp"

namespace keydyn::harness {

struct SyntheticProfile {
  std::string user_id;
  double hold_mean = 100.0;
  double hold_std = 10.0;
  double flight_mean = 120.0;
  double flight_std = 15.0;
  double pressure_mean = 0.5;
  double pressure_std = 0.05;
  double size_mean = 0.3;
  double size_std = 0.03;
  std::vector<std::string> text;  // one key label per press
};

/// Splits text into one label per character.
inline std::vector<std::string> keys_of(std::string_view text) {
  std::vector<std::string> out;
  out.reserve(text.size());
  for (char ch : text) out.emplace_back(1, ch);
  return out;
}

namespace detail {

class NormalSource {
 public:
  explicit NormalSource(std::uint64_t seed) : rng_(seed) {}

  double draw(double mean, double stddev) {
    if (stddev <= 0.0) return mean;
    std::normal_distribution<double> dist(mean, stddev);
    return dist(rng_);
  }

 private:
  std::mt19937_64 rng_;
};

inline std::string sample_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%03zu", i);
  return buf;
}

}  // namespace detail

inline Dataset generate_synthetic(const std::vector<SyntheticProfile>& profiles, std::size_t samples_per_user,
                                  std::uint64_t seed) {
  if (samples_per_user == 0) throw Error(ErrorCode::InvalidArgument, "samples_per_user must be at least 1");
  detail::NormalSource rng(seed);
  Dataset out;
  for (const auto& p : profiles) {
    if (p.text.empty()) throw Error(ErrorCode::InvalidArgument, "profile '" + p.user_id + "' has no text");
    if (p.hold_std < 0 || p.flight_std < 0 || p.pressure_std < 0 || p.size_std < 0) {
      throw Error(ErrorCode::InvalidArgument, "profile '" + p.user_id + "' has a negative std");
    }
    for (std::size_t s = 0; s < samples_per_user; ++s) {
      KeystrokeSample sample{p.user_id, detail::sample_name(s), {}};
      double clock = 0.0;
      for (std::size_t k = 0; k < p.text.size(); ++k) {
        if (k > 0) clock += std::max(1.0, rng.draw(p.flight_mean, p.flight_std));
        const double hold = std::max(1.0, rng.draw(p.hold_mean, p.hold_std));
        KeystrokeEvent e;
        e.key_index = k;
        e.key_label = p.text[k];
        e.down_ms = clock;
        e.up_ms = clock + hold;
        e.pressure = std::max(0.0, rng.draw(p.pressure_mean, p.pressure_std));
        e.size = std::max(0.0, rng.draw(p.size_mean, p.size_std));
        sample.events.push_back(std::move(e));
        clock += hold;
      }
      out.samples.push_back(std::move(sample));
    }
  }
  if (!profiles.empty() && std::all_of(profiles.begin(), profiles.end(),
                                       [&](const SyntheticProfile& p) { return p.text == profiles.front().text; })) {
    std::string text;
    for (const auto& k : profiles.front().text) text += k;
    out.expected_text = text;
  }
  return out;
}

/// `count` users whose hold-time means are `step_ms` apart, sharing all other
/// parameters. step_ms = 0 gives indistinguishable users.
inline std::vector<SyntheticProfile> spaced_profiles(std::size_t count, double step_ms,
                                                     const std::vector<std::string>& text,
                                                     SyntheticProfile base = {}) {
  std::vector<SyntheticProfile> out;
  for (std::size_t u = 0; u < count; ++u) {
    SyntheticProfile p = base;
    char buf[32];
    std::snprintf(buf, sizeof buf, "user%02zu", u);
    p.user_id = buf;
    p.hold_mean = base.hold_mean + step_ms * static_cast<double>(u);
    p.text = text;
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace keydyn::harness
