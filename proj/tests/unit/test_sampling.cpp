// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "sampling_oracle.hpp"
#include "usd/error.hpp"
#include "usd/sampling.hpp"

using namespace usd;
using test::LabelDays;
using test::random_label_days;

TEST_CASE("samplers equal declarative oracles on random worlds") {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    INFO("seed " << seed);
    const auto bad = test::sampler_mismatches(random_label_days(seed));
    CHECK(bad.empty());
    for (const auto& b : bad) MESSAGE(b);
  }
}

TEST_CASE("sample_confident is order-preserving and idempotent") {
  const LabelDays d = random_label_days(42);
  const auto once = sample_confident(d.exposures, d.contexts);
  CHECK(sample_confident(once, d.contexts) == once);
  std::size_t j = 0;
  for (const auto& r : d.exposures) {
    if (j < once.size() && r == once[j]) ++j;
  }
  CHECK(j == once.size());
  CHECK(once.size() <= d.exposures.size());
}

TEST_CASE("sampler edge cases") {
  LabelDays d = random_label_days(3);
  SUBCASE("no visits") {
    for (auto& c : d.contexts) c.y_p = c.y_b = 0;
    CHECK(sample_confident(d.exposures, d.contexts).empty());
  }
  SUBCASE("every user visits") {
    for (auto& c : d.contexts) c.y_p = 1;
    CHECK(sample_confident(d.exposures, d.contexts) == d.exposures);
  }
  SUBCASE("no recent visits") {
    for (auto& c : d.contexts) c.r_p = 0;
    CHECK(sample_uiem_training(d.contexts).empty());
  }
  SUBCASE("visit three days ago") {
    UserDayContext c;
    c.sequence.fill(-1);
    c.sequence[kSeqLen - 3] = 0;
    c.r_p = 1;
    CHECK(sample_uiem_training(std::vector{c}).size() == 1);
  }
  SUBCASE("cohort membership") {
    std::vector<UserDayContext> ctx(2);
    ctx[0] = {1, 40, 1, 1, 0, {}};
    ctx[1] = {2, 40, 1, 0, 0, {}};
    const std::vector<ExposureRecord> rows = {{1, 0, 40, 0, 0}, {2, 0, 40, 0, 0}, {1, 3, 40, 1, 0}};
    const Partition p = partition(rows, ctx);
    REQUIRE(p.block.size() == 1);
    REQUIRE(p.portal.size() == 1);
    CHECK(p.block[0].user_id == 1);
    CHECK(p.portal[0].user_id == 2);
  }
  SUBCASE("errors") {
    std::vector<ExposureRecord> orphan = {{9999, 0, 40, 0, 0}};
    CHECK_THROWS_AS(sample_confident(orphan, d.contexts), IntegrityError);
    std::vector<UserDayContext> ctx = {{1, 40, 0, 0, 0, {}}};
    std::vector<ExposureRecord> rows = {{1, 0, 40, 0, 0}};
    CHECK_THROWS_AS(partition(rows, ctx), IntegrityError);
  }
}
