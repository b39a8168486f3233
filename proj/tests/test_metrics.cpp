#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "keydyn/metrics.hpp"
#include "oracles.hpp"

using namespace keydyn;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(Confusion, Accuracy) {
  EXPECT_DOUBLE_EQ(accuracy({9, 89, 1, 1}), 0.98);
  EXPECT_EQ(accuracy({5, 5, 0, 0}), 1.0);
  EXPECT_EQ(accuracy({0, 0, 3, 4}), 0.0);
}

TEST(Confusion, PrecisionRecallF1) {
  const ConfusionCounts c{.tp = 8, .tn = 0, .fp = 2, .fn = 2};
  EXPECT_DOUBLE_EQ(precision(c), 0.8);
  EXPECT_DOUBLE_EQ(recall(c), 0.8);
  EXPECT_DOUBLE_EQ(f1(c), 0.8);
  EXPECT_EQ(code_of([] { precision({0, 3, 0, 1}); }), ErrorCode::ZeroDenominator);
}

TEST(Rates, FarFrrFerFta) {
  EXPECT_EQ(far_rate(1, 100), 0.01);
  EXPECT_EQ(far_rate(0, 7), 0.0);
  EXPECT_EQ(frr_rate(7, 7), 1.0);
  EXPECT_EQ(fer_rate(2, 100), 0.02);
  EXPECT_EQ(fta_rate(0, 3), 0.0);
  EXPECT_EQ(fta_rate(3, 3), 1.0);
  EXPECT_THROW(far_rate(1, 0), Error);
  EXPECT_EQ(code_of([] { frr_rate(5, 4); }), ErrorCode::OutOfRange);
}

TEST(Sweep, PerfectSeparation) {
  const ScoreSet s{{1, 2}, {3, 4}};
  const auto curve = sweep_rates(s);
  EXPECT_TRUE(std::any_of(curve.begin(), curve.end(), [](const DetPoint& p) { return p.far == 0 && p.frr == 0; }));
  EXPECT_EQ(eer_intersection(s).eer, 0.0);
}

TEST(Sweep, IdenticalListsMatchCounting) {
  const ScoreSet s{{1, 2, 3}, {1, 2, 3}};
  for (const auto& p : sweep_rates(s)) {
    const auto r = oracle::count_at(s, p.threshold);
    EXPECT_EQ(p.far, r.far);
    EXPECT_EQ(p.frr, r.frr);
    EXPECT_NEAR(p.far, 1.0 - p.frr, 1e-15);
  }
  const auto e = eer_intersection(s);
  EXPECT_GE(e.eer, 0.4);
  EXPECT_LE(e.eer, 0.6);
  EXPECT_EQ(e.eer, oracle::brute_force_eer(s).eer);
}

TEST(Sweep, SmallOverlapMatchesBruteForce) {
  const ScoreSet s{{1, 2, 3}, {2.5, 3.5, 4.5}};
  const auto e = eer_intersection(s);
  const auto b = oracle::brute_force_eer(s);
  EXPECT_EQ(e.eer, b.eer);
  EXPECT_NEAR(e.eer, 1.0 / 3.0, 1e-15);
}

TEST(Sweep, RandomAgainstOracles) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = oracle::random_scores(rng, 200, trial % 2 == 0);
    const auto curve = sweep_rates(s);
    for (std::size_t k = 0; k < curve.size(); ++k) {
      const auto r = oracle::count_at(s, curve[k].threshold);
      ASSERT_EQ(curve[k].far, r.far);
      ASSERT_EQ(curve[k].frr, r.frr);
      if (k > 0) {
        EXPECT_GE(curve[k].far, curve[k - 1].far);
        EXPECT_LE(curve[k].frr, curve[k - 1].frr);
        EXPECT_GT(curve[k].threshold, curve[k - 1].threshold);
      }
    }
    EXPECT_EQ(curve.front().far, 0.0);
    EXPECT_EQ(curve.back().frr, 0.0);
    const auto e = eer_intersection(s);
    const auto b = oracle::brute_force_eer(s);
    EXPECT_EQ(e.eer, b.eer);
    EXPECT_EQ(e.far, b.far);
    EXPECT_EQ(e.frr, b.frr);
  }
}

TEST(Sweep, EmptyScores) {
  EXPECT_EQ(code_of([] { sweep_rates({{}, {1}}); }), ErrorCode::EmptyScores);
}

TEST(Sweep, RatesAtThreshold) {
  const ScoreSet s{{1, 2, 3}, {2, 5}};
  const auto p = rates_at(s, 2);
  EXPECT_EQ(p.far, 0.5);
  EXPECT_DOUBLE_EQ(p.frr, 1.0 / 3.0);
}

TEST(Formulas, ClosedFormValues) {
  EXPECT_EQ(multi_attempt_far(0.01, 2), 0.0199);
  EXPECT_EQ(multi_attempt_frr(0.02, 2), 0.0004);
  EXPECT_EQ(eer_average(0.01, 0.001), 0.0055);
  EXPECT_EQ(accuracy_from_eer(0.026), 0.974);
  EXPECT_NEAR(accuracy_from_eer(0.1219), 0.8781, 1e-12);
}

TEST(Formulas, TrivialCases) {
  EXPECT_EQ(eer_average(0, 0), 0.0);
  EXPECT_EQ(eer_average(1, 1), 1.0);
  EXPECT_EQ(accuracy_from_eer(0), 1.0);
  EXPECT_EQ(multi_attempt_far(0.3, 1), 0.3);
  EXPECT_EQ(multi_attempt_frr(0.3, 1), 0.3);
  EXPECT_THROW(multi_attempt_far(0.3, 0), Error);
  EXPECT_THROW(eer_average(1.5, 0), Error);
}

TEST(Formulas, MultiAttemptMonotone) {
  for (double p : {0.0, 0.001, 0.2, 0.9, 1.0}) {
    for (std::uint64_t n = 1; n < 20; ++n) {
      EXPECT_GE(multi_attempt_far(p, n + 1), multi_attempt_far(p, n));
      EXPECT_LE(multi_attempt_frr(p, n + 1), multi_attempt_frr(p, n));
      EXPECT_NEAR(multi_attempt_far(p, n), 1.0 - std::pow(1.0 - p, static_cast<double>(n)), 1e-12);
    }
  }
}

TEST(En50133, TruthTable) {
  EXPECT_EQ(en50133_check(0.000005, 0.005), (En50133Result{true, true}));
  EXPECT_EQ(en50133_check(0.01, 0.005), (En50133Result{false, true}));
  EXPECT_EQ(en50133_check(0.000005, 0.02), (En50133Result{true, false}));
  EXPECT_EQ(en50133_check(0.00001, 0.01), (En50133Result{true, true}));
}

TEST(RateReport, EerPoint) {
  const auto r = rate_report({{1, 2}, {3, 4}});
  EXPECT_EQ(r.eer, 0.0);
  EXPECT_TRUE(r.en50133_far_ok);
  EXPECT_TRUE(r.en50133_frr_ok);
  std::ostringstream os;
  write_det_curve(os, r.det_curve);
  EXPECT_FALSE(os.str().empty());
}
