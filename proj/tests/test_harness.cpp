#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>
#include <sstream>

#include "keydyn/harness/csv.hpp"
#include "keydyn/harness/experiment.hpp"
#include "keydyn/harness/report.hpp"
#include "keydyn/harness/synthetic.hpp"

using namespace keydyn;
using namespace keydyn::harness;

namespace {

const std::string kHeader = std::string(kEventCsvHeader) + "\n";

LoadResult parse(const std::string& text) {
  std::istringstream in(text);
  return parse_events_csv(in);
}

ErrorCode parse_error(const std::string& text, std::size_t* line = nullptr) {
  try {
    parse(text);
  } catch (const Error& e) {
    if (line) *line = e.line();
    return e.code();
  }
  ADD_FAILURE() << "parse succeeded";
  return ErrorCode::InvalidArgument;
}

Dataset separated(std::uint64_t seed, std::size_t users = 5, std::size_t samples = 30) {
  return generate_synthetic(spaced_profiles(users, 50.0, default_text("concept3")), samples, seed);
}

Dataset identical(std::uint64_t seed) {
  auto profiles = spaced_profiles(5, 0.0, default_text("concept3"));
  return generate_synthetic(profiles, 30, seed);
}

}  // namespace

// ---------------------------------------------------------------------------
// CSV

TEST(Csv, TwoRowSample) {
  const auto r = parse(kHeader + "u1,s1,0,a,0,100,0.5,,,\nu1,s1,1,b,150,260,,,,\n");
  ASSERT_EQ(r.dataset.samples.size(), 1u);
  const auto& s = r.dataset.samples[0];
  ASSERT_EQ(s.events.size(), 2u);
  EXPECT_EQ(s.events[0].pressure, 0.5);
  EXPECT_FALSE(s.events[1].pressure.has_value());
  EXPECT_TRUE(r.rejected.empty());
}

TEST(Csv, UpBeforeDownOnLineSeven) {
  std::string text = kHeader;
  for (int i = 0; i < 5; ++i) text += "u1,s1," + std::to_string(i) + ",k," + std::to_string(200 * i) + "," + std::to_string(200 * i + 90) + ",,,,\n";
  text += "u1,s1,5,k,1000,900,,,,\n";  // line 7
  std::size_t line = 0;
  EXPECT_EQ(parse_error(text, &line), ErrorCode::MalformedRow);
  EXPECT_EQ(line, 7u);
}

TEST(Csv, HeaderOnlyAndEmpty) {
  EXPECT_EQ(parse_error(kHeader), ErrorCode::EmptyFile);
  EXPECT_EQ(parse_error(""), ErrorCode::EmptyFile);
  EXPECT_EQ(parse_error("user,sample\n"), ErrorCode::MalformedHeader);
}

TEST(Csv, BadFieldCountAndNumber) {
  EXPECT_EQ(parse_error(kHeader + "u1,s1,0,a,0,100\n"), ErrorCode::MalformedRow);
  EXPECT_EQ(parse_error(kHeader + "u1,s1,0,a,zero,100,,,,\n"), ErrorCode::MalformedRow);
}

TEST(Csv, CrossEventViolationsAreCollected) {
  const auto r = parse(kHeader + "u1,s1,0,a,0,100,,,,\nu1,s1,1,b,150,260,,,,\n" +
                       "u1,s2,1,a,0,100,,,,\nu1,s2,0,b,150,260,,,,\n");
  EXPECT_EQ(r.dataset.samples.size(), 1u);
  ASSERT_EQ(r.rejected.size(), 1u);
  EXPECT_EQ(r.rejected[0].sample_id, "s2");
  EXPECT_EQ(r.rejected[0].first_line, 4u);
  EXPECT_FALSE(r.rejected[0].violations.empty());
}

TEST(Csv, QuotedLabelsAndRebasing) {
  const auto r = parse(kHeader + "u1,s1,0,\",\",1000,1100,,,,\nu1,s1,1,\"a\"\"b\",1150,1260,,,,\n");
  const auto& s = r.dataset.samples[0];
  EXPECT_EQ(s.events[0].key_label, ",");
  EXPECT_EQ(s.events[1].key_label, "a\"b");
  EXPECT_EQ(s.events[0].down_ms, 0.0);
}

TEST(Csv, WriteReadRoundTrip) {
  const auto d = separated(3, 2, 3);
  std::ostringstream out;
  write_events_csv(out, d);
  const auto back = parse(out.str());
  ASSERT_EQ(back.dataset.samples.size(), d.samples.size());
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    EXPECT_EQ(back.dataset.samples[i].events, d.samples[i].events);
  }
}

// ---------------------------------------------------------------------------
// Synthetic generator

TEST(Synthetic, SeedDeterminism) {
  const auto a = separated(42);
  const auto b = separated(42);
  ASSERT_EQ(a.samples.size(), b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) EXPECT_EQ(a.samples[i].events, b.samples[i].events);
  const auto c = separated(43);
  EXPECT_NE(a.samples[0].events, c.samples[0].events);
}

TEST(Synthetic, ZeroStdGivesIdenticalSamples) {
  SyntheticProfile p;
  p.user_id = "z";
  p.hold_std = p.flight_std = p.pressure_std = p.size_std = 0.0;
  p.text = keys_of("abcd");
  const auto d = generate_synthetic({p}, 5, 1);
  for (const auto& s : d.samples) {
    EXPECT_EQ(s.events, d.samples[0].events);
    for (double du1 : timing_features(s).du1) EXPECT_EQ(du1, p.hold_mean);
  }
}

TEST(Synthetic, HoldMeansSeparate) {
  SyntheticProfile a, b;
  a.user_id = "a";
  b.user_id = "b";
  a.hold_mean = 80;
  b.hold_mean = 200;
  a.text = b.text = keys_of("password");
  const auto d = generate_synthetic({a, b}, 30, 5);
  std::map<std::string, std::vector<double>> holds;
  for (const auto& s : d.samples) {
    for (double h : timing_features(s).du1) holds[s.user_id].push_back(h);
  }
  auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
  auto var = [&](const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return s / v.size();
  };
  const double pooled = std::sqrt(0.5 * (var(holds["a"]) + var(holds["b"])));
  EXPECT_GT(mean(holds["b"]) - mean(holds["a"]), 5 * pooled);
}

TEST(Synthetic, AllSamplesValid) {
  for (const auto& s : separated(9).samples) EXPECT_TRUE(validate_sample(s).empty());
}

// ---------------------------------------------------------------------------
// Splits

TEST(Split, SevenThree) {
  const auto d = separated(1, 3, 10);
  const auto s = split_genuine_impostor(d, "user00", ExperimentConfig{});
  EXPECT_EQ(s.train.size(), 7u);
  EXPECT_EQ(s.genuine_test.size(), 3u);
  EXPECT_EQ(s.impostor_test.size(), 20u);
  EXPECT_FALSE(s.no_impostors);
  EXPECT_EQ(s.train.back().sample_id, "s006");
  EXPECT_EQ(s.genuine_test.front().sample_id, "s007");
}

TEST(Split, SingleUserHasNoImpostors) {
  const auto s = split_genuine_impostor(separated(1, 1, 4), "user00", ExperimentConfig{});
  EXPECT_TRUE(s.impostor_test.empty());
  EXPECT_TRUE(s.no_impostors);
}

TEST(Split, TooFewSamples) {
  try {
    split_genuine_impostor(separated(1, 2, 1), "user00", ExperimentConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientSamples);
  }
}

TEST(Split, DisjointAndExhaustive) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::size_t> users(1, 5), samples(2, 15);
  std::uniform_real_distribution<double> ratio(0.1, 0.9);
  for (int trial = 0; trial < 50; ++trial) {
    const auto d = separated(rng(), users(rng), samples(rng));
    ExperimentConfig cfg;
    cfg.split_ratio = ratio(rng);
    using Key = std::pair<std::string, std::string>;
    std::set<Key> all;
    for (const auto& s : d.samples) all.insert({s.user_id, s.sample_id});
    const auto s = split_genuine_impostor(d, "user00", cfg);
    std::multiset<Key> seen;
    for (const auto* part : {&s.train, &s.genuine_test, &s.impostor_test}) {
      for (const auto& x : *part) seen.insert({x.user_id, x.sample_id});
    }
    EXPECT_EQ(seen.size(), all.size());
    EXPECT_EQ(std::set<Key>(seen.begin(), seen.end()), all);
    EXPECT_GE(s.train.size(), 1u);
    EXPECT_GE(s.genuine_test.size(), 1u);
  }
}

TEST(Split, NaturalOrder) {
  EXPECT_TRUE(natural_less("s2", "s10"));
  EXPECT_FALSE(natural_less("s10", "s2"));
  EXPECT_EQ(train_count(10, 0.7), 7u);
  EXPECT_EQ(train_count(2, 0.9), 1u);
}

// ---------------------------------------------------------------------------
// Experiments

TEST(Experiment, SeparatedUsersLowEer) {
  const auto r = run_experiment(separated(1), ExperimentConfig{});
  ASSERT_TRUE(r.aggregate.mean_eer.has_value());
  EXPECT_LE(*r.aggregate.mean_eer, 0.05);
  EXPECT_EQ(r.feature_count, 78u);
  EXPECT_EQ(r.aggregate.evaluated_users, 5u);
}

TEST(Experiment, IdenticalUsersChanceEer) {
  const auto r = run_experiment(identical(1), ExperimentConfig{});
  ASSERT_TRUE(r.aggregate.mean_eer.has_value());
  EXPECT_GE(*r.aggregate.mean_eer, 0.35);
  EXPECT_LE(*r.aggregate.mean_eer, 0.65);
}

TEST(Experiment, AllClassifiersSeparate) {
  for (auto kind : {ClassifierKind::MVP, ClassifierKind::SVM}) {
    ExperimentConfig cfg;
    cfg.classifier = kind;
    const auto r = run_experiment(separated(3), cfg);
    EXPECT_LE(*r.aggregate.mean_eer, 0.1) << to_string(kind);
  }
}

TEST(Experiment, ShortUserCountsAsFailedEnrollment) {
  auto d = separated(2, 3, 10);
  SyntheticProfile p;
  p.user_id = "shorty";
  p.text = keys_of("abc");
  const auto extra = generate_synthetic({p}, 10, 2);
  d.samples.insert(d.samples.end(), extra.samples.begin(), extra.samples.end());
  const auto r = run_experiment(d, ExperimentConfig{});
  EXPECT_EQ(r.aggregate.potential_users, 4u);
  EXPECT_EQ(r.aggregate.failed_enrollments, 1u);
  EXPECT_DOUBLE_EQ(r.aggregate.fer, 0.25);
  EXPECT_DOUBLE_EQ(r.aggregate.fer + r.aggregate.enrolled_fraction, 1.0);
  EXPECT_EQ(r.aggregate.evaluated_users, 3u);
}

TEST(Experiment, MeanEerIsMeanOfUsers) {
  const auto r = run_experiment(separated(4), ExperimentConfig{});
  double sum = 0;
  std::size_t n = 0;
  for (const auto& u : r.users) {
    if (u.rates) sum += u.rates->eer, ++n;
  }
  ASSERT_GT(n, 0u);
  EXPECT_NEAR(*r.aggregate.mean_eer, sum / n, 1e-15);
  EXPECT_NEAR(*r.aggregate.accuracy, 1.0 - *r.aggregate.mean_eer, 1e-15);
}

TEST(Experiment, ScoreCountsMatchSplit) {
  for (auto kind : {ClassifierKind::DVC, ClassifierKind::SVM}) {
    ExperimentConfig cfg;
    cfg.classifier = kind;
    const auto r = run_experiment(separated(5, 4, 10), cfg);
    for (const auto& u : r.users) {
      EXPECT_EQ(u.train_count, 7u);
      EXPECT_EQ(u.genuine_count, 3u);
      EXPECT_EQ(u.scores.genuine.size(), 3u);
      // Impostor probes never include anything a model was trained on.
      EXPECT_EQ(u.impostor_count, kind == ClassifierKind::SVM ? 9u : 30u);
    }
  }
}

TEST(Experiment, Deterministic) {
  const auto d = separated(6);
  const auto a = to_json(run_experiment(d, ExperimentConfig{})).dump();
  const auto b = to_json(run_experiment(d, ExperimentConfig{})).dump();
  EXPECT_EQ(a, b);
}

TEST(Experiment, GlobalPolicyUsesPooledThreshold) {
  ExperimentConfig cfg;
  cfg.threshold_policy = ThresholdPolicy::GLOBAL;
  const auto r = run_experiment(separated(7), cfg);
  ASSERT_TRUE(r.aggregate.pooled_threshold.has_value());
  for (const auto& u : r.users) {
    if (u.rates) {
      EXPECT_EQ(u.threshold, *r.aggregate.pooled_threshold);
    }
  }
}

TEST(Config, JsonRoundTripAndUnknownKey) {
  ExperimentConfig c;
  c.classifier = ClassifierKind::SVM;
  c.seed = 9;
  const auto back = config_from_json(to_json(c));
  EXPECT_EQ(back.classifier, ClassifierKind::SVM);
  EXPECT_EQ(back.seed, 9u);
  try {
    config_from_json(nlohmann::json{{"clasifier", "dvc"}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
  }
  EXPECT_THROW(config_from_json(nlohmann::json{{"split_ratio", 1.5}}), Error);
}

// ---------------------------------------------------------------------------
// Comparison report

TEST(Comparison, EerToAccuracy) {
  ComparisonRow row;
  row.label = "dvc/concept3";
  row.eer = 0.0789;
  const auto doc = comparison_report({row}, {});
  const auto text = render_human(doc);
  EXPECT_NE(text.find("EER = 0.0789"), std::string::npos);
  EXPECT_NE(text.find("accuracy = 0.9211"), std::string::npos);
  EXPECT_NE(text.find("Qualitative criteria: not provided"), std::string::npos);
  EXPECT_NEAR(*row.accuracy(), 0.9211, 1e-12);

  row.eer = 0.026;
  EXPECT_EQ(*row.accuracy(), 0.974);
}

TEST(Comparison, EmptyRowsRejected) { EXPECT_THROW(comparison_report({}, {}), Error); }

TEST(Comparison, SchemeParsing) {
  const auto s = scheme_from_json(nlohmann::json{{"comfort", "high"}, {"imitation_category", "covert"}});
  EXPECT_EQ(s.comfort, Rating::HIGH);
  EXPECT_FALSE(s.empty());
  EXPECT_THROW(scheme_from_json(nlohmann::json{{"beauty", "high"}}), Error);
  EXPECT_THROW(scheme_from_json(nlohmann::json{{"comfort", "superb"}}), Error);
  EXPECT_TRUE(scheme_from_json(nlohmann::json::object()).empty());
}

TEST(Comparison, RowFromReportJson) {
  const auto r = run_experiment(separated(8), ExperimentConfig{});
  const auto a = comparison_row(r);
  const auto b = comparison_row_from_json(to_json(r, false));
  EXPECT_EQ(a.label, b.label);
  EXPECT_EQ(a.eer, b.eer);
  EXPECT_EQ(a.feature_count, b.feature_count);
  const auto doc = to_json(comparison_report({a}, {}));
  EXPECT_EQ(doc.at("format"), "keydyn-comparison/1");
}
