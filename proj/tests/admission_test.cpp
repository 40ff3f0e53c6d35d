#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "admission_oracle.hpp"
#include "dagor/admission.hpp"

using namespace dagor;

namespace {

AdmissionLevel L(int b, int u) {
  return {{static_cast<std::uint16_t>(b)}, {static_cast<std::uint8_t>(u)}};
}

RequestEnvelope req(int b, int u) {
  RequestEnvelope r;
  r.b = BusinessPriority{static_cast<std::uint16_t>(b)};
  r.u = UserPriority{static_cast<std::uint8_t>(u)};
  return r;
}

}  // namespace

TEST(RequestHistogram, CountsAndReset) {
  RequestHistogram h(PriorityDomain{1});
  h.add(L(0, 5), true);
  h.add(L(1, 0), false, 3);
  EXPECT_EQ(h.total(), 4u);
  EXPECT_EQ(h.admitted(), 1u);
  EXPECT_EQ(h.at(L(1, 0)), 3u);
  h.reset();
  EXPECT_EQ(h.total(), 0u);
  EXPECT_EQ(h.admitted(), 0u);
  EXPECT_EQ(h.at(L(1, 0)), 0u);
}

TEST(AdmissionController, StartsFullyOpen) {
  AdmissionController c(PriorityDomain{31});
  EXPECT_EQ(c.level(), L(31, 127));
  EXPECT_TRUE(c.admits(req(31, 127)));
}

TEST(AdmissionController, ResetKeepsLevel) {
  AdmissionController c;
  c.set_level(L(3, 7));
  c.update_histogram(req(1, 1));
  c.reset_histogram();
  EXPECT_EQ(c.level(), L(3, 7));
  EXPECT_EQ(c.histogram().total(), 0u);
  c.reset_histogram();
  EXPECT_EQ(c.histogram().total(), 0u);
}

TEST(AdmissionController, UpdateHistogramGuard) {
  AdmissionController c;
  c.set_level(L(2, 3));
  c.update_histogram(req(2, 3));
  EXPECT_EQ(c.histogram().total(), 1u);
  EXPECT_EQ(c.histogram().admitted(), 1u);
  c.update_histogram(req(2, 4));
  EXPECT_EQ(c.histogram().total(), 2u);
  EXPECT_EQ(c.histogram().admitted(), 1u);
  c.update_histogram(req(0, 127));
  EXPECT_EQ(c.histogram().total(), 3u);
  EXPECT_EQ(c.histogram().admitted(), 2u);
}

TEST(AdmissionController, OutOfDomainInputsThrow) {
  AdmissionController c(PriorityDomain{3});
  EXPECT_THROW(c.set_level(L(4, 0)), std::out_of_range);
  EXPECT_THROW(c.update_histogram(req(4, 0)), std::out_of_range);
  AdmissionParams bad;
  bad.alpha = 1.5;
  EXPECT_THROW(AdmissionController(PriorityDomain{3}, bad), std::invalid_argument);
  bad = {};
  bad.beta = -0.1;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(AdmissionController, EmptyOverloadedWindowKeepsCursor) {
  AdmissionController c;
  c.set_level(L(5, 60));
  EXPECT_EQ(c.update_admit_level(true), L(5, 60));
}

TEST(AdmissionController, RelaxAtTopIsClamped) {
  AdmissionController c;
  c.update_histogram(req(0, 0));
  EXPECT_EQ(c.update_admit_level(false), c.domain().highest());
}

TEST(AdmissionController, TinyGridOverloadStep) {
  AdmissionController c(PriorityDomain{1});
  // Only four user levels are populated, mirroring a 2x4 grid.
  c.set_level(L(1, 3));
  for (int b = 0; b <= 1; ++b)
    for (int u = 0; u <= 3; ++u) c.update_histogram(L(b, u), 10);
  EXPECT_EQ(c.histogram().total(), 80u);
  EXPECT_EQ(c.histogram().admitted(), 80u);
  EXPECT_EQ(c.update_admit_level(true), L(1, 2));
}

TEST(AdmissionController, RelaxAddsBetaOfTotal) {
  AdmissionController c(PriorityDomain{0});
  c.set_level(L(0, 9));
  for (int u = 0; u < 128; ++u) c.update_histogram(L(0, u), 10);
  // n = 1280, n_adm = 100, target 112.8: two more cells are needed.
  EXPECT_EQ(c.update_admit_level(false), L(0, 11));
}

TEST(AdmissionController, DownStepWrapsAcrossBusinessLevels) {
  AdmissionController c(PriorityDomain{2});
  c.set_level(L(1, 0));
  c.update_histogram(L(1, 0), 100);
  c.update_histogram(L(0, 127), 1);
  EXPECT_EQ(c.update_admit_level(true), L(0, 127));
}

TEST(AdmissionControllerOracle, MatchesBruteForcePrefixSums) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto instance = oracle::random_instance(rng);
    AdmissionController c(instance.domain);
    c.set_level(instance.domain.level_at(instance.cursor));
    for (int i = 0; i < instance.domain.level_count(); ++i) {
      if (instance.counts[i] > 0) c.update_histogram(instance.domain.level_at(i), instance.counts[i]);
    }
    const AdmissionLevel got = c.update_admit_level(instance.overloaded);
    const int want = oracle::expected_cursor(instance, c.params());
    ASSERT_EQ(instance.domain.index_of(got), want) << "trial " << trial;
  }
}

TEST(AdmissionControllerFuzz, CursorStaysInDomain) {
  std::mt19937_64 rng(99);
  PriorityDomain d{7};
  AdmissionController c(d);
  std::uniform_int_distribution<int> cell(0, d.level_count() - 1);
  std::bernoulli_distribution hot(0.5);
  for (int w = 0; w < 3000; ++w) {
    const int n = std::uniform_int_distribution<int>(0, 50)(rng);
    for (int i = 0; i < n; ++i) c.update_histogram(d.level_at(cell(rng)));
    const AdmissionLevel before = c.level();
    const bool overloaded = hot(rng);
    const AdmissionLevel after = c.update_admit_level(overloaded);
    ASSERT_TRUE(d.contains(after));
    if (overloaded) {
      ASSERT_LE(after, before);
    } else {
      ASSERT_GE(after, before);
    }
    c.reset_histogram();
  }
}
