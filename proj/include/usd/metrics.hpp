// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

// AUC and grouped AUC.
//
//   AUC    Mann-Whitney statistic from midranks: P(s+ > s-) + 0.5 P(s+ = s-)
//   GAUC   sum_u w_u AUC_u / sum_u w_u over users whose labels contain both
//          classes, with w_u = 1 (avg), exposures (show) or clicks (click)

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace usd {

// Throws InputError when the labels are all one class.
double auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

enum class GaucWeighting { avg, show, click };

struct UserAuc {
  std::uint32_t user_id = 0;
  double auc = 0.0;
  std::size_t exposures = 0;
  std::size_t clicks = 0;

  double weight(GaucWeighting w) const {
    return w == GaucWeighting::avg ? 1.0 : static_cast<double>(w == GaucWeighting::show ? exposures : clicks);
  }
};

// Users must have a defined AUC. Throws InputError when the list is empty or
// every weight is zero.
double gauc(std::span<const UserAuc> users, GaucWeighting weighting);

struct ScoredExposure {
  std::uint32_t user_id = 0;
  std::uint8_t label = 0;
  double score = 0.0;
};

struct MetricsReport {
  double auc = 0.0;
  double gauc_avg = 0.0;
  double gauc_show = 0.0;
  double gauc_click = 0.0;
  std::size_t users_evaluated = 0;
  std::size_t users_excluded = 0;  // single-class users
  std::vector<UserAuc> per_user;   // evaluated users, ascending id
};

// Per-user AUCs run on `threads` workers; results are reduced in user order
// and do not depend on the thread count.
MetricsReport evaluate(std::span<const ScoredExposure> samples, std::size_t threads = 1);

inline constexpr const char* kMetricsHeader =
    "variant,gauc_avg,gauc_show,gauc_click,auc,users_evaluated,users_excluded";

// One csv row (no newline) for metrics.csv.
std::string metrics_row(const std::string& variant, const MetricsReport& report);

}  // namespace usd
