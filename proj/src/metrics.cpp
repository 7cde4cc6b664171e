// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "usd/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>

#include "usd/error.hpp"
#include "usd/parallel.hpp"

namespace usd {

namespace {

// Midrank AUC of n samples read through score(i) / label(i); -1 when the
// labels are single-class.
template <typename Score, typename Label>
double rank_auc(std::size_t n, Score score, Label label, std::vector<std::size_t>& order) {
  order.resize(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score(a) < score(b); });
  double pos = 0, rank_sum = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && score(order[j + 1]) == score(order[i])) ++j;
    const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (label(order[k])) {
        rank_sum += midrank;
        pos += 1;
      }
    }
    i = j + 1;
  }
  const double neg = static_cast<double>(n) - pos;
  if (pos == 0 || neg == 0) return -1.0;
  return (rank_sum - pos * (pos + 1) / 2) / (pos * neg);
}

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 6);
  return std::string(buf, res.ptr);
}

}  // namespace

double auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw InputError("auc: scores and labels differ in length");
  std::vector<std::size_t> order;
  const double a = rank_auc(
      scores.size(), [&](std::size_t i) { return scores[i]; }, [&](std::size_t i) { return labels[i] != 0; }, order);
  if (a < 0) throw InputError("auc: undefined for single-class labels (need a positive and a negative)");
  return a;
}

double gauc(std::span<const UserAuc> users, GaucWeighting weighting) {
  double num = 0, den = 0;
  for (const auto& u : users) {
    const double w = u.weight(weighting);
    num += w * u.auc;
    den += w;
  }
  if (users.empty() || den == 0) throw InputError("gauc: no user has a defined AUC");
  return num / den;
}

MetricsReport evaluate(std::span<const ScoredExposure> samples, std::size_t threads) {
  if (samples.empty()) throw InputError("evaluate: empty eval set");
  std::vector<std::size_t> by_user(samples.size());
  std::iota(by_user.begin(), by_user.end(), std::size_t{0});
  std::stable_sort(by_user.begin(), by_user.end(),
                   [&](std::size_t a, std::size_t b) { return samples[a].user_id < samples[b].user_id; });
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < by_user.size(); ++i) {
    if (i == 0 || samples[by_user[i]].user_id != samples[by_user[i - 1]].user_id) starts.push_back(i);
  }
  starts.push_back(by_user.size());

  const std::size_t groups = starts.size() - 1;
  std::vector<UserAuc> rows(groups);
  std::vector<char> defined(groups, 0);
  parallel_chunks(groups, threads, [&](std::size_t begin, std::size_t end) {
    std::vector<std::size_t> order;
    for (std::size_t g = begin; g < end; ++g) {
      const std::size_t* idx = by_user.data() + starts[g];
      const std::size_t n = starts[g + 1] - starts[g];
      UserAuc& r = rows[g];
      r.user_id = samples[idx[0]].user_id;
      r.exposures = n;
      for (std::size_t k = 0; k < n; ++k) r.clicks += samples[idx[k]].label != 0;
      r.auc = rank_auc(
          n, [&](std::size_t k) { return samples[idx[k]].score; },
          [&](std::size_t k) { return samples[idx[k]].label != 0; }, order);
      defined[g] = r.auc >= 0;
    }
  });

  MetricsReport report;
  for (std::size_t g = 0; g < groups; ++g) {
    if (defined[g]) {
      report.per_user.push_back(rows[g]);
    } else {
      ++report.users_excluded;
    }
  }
  report.users_evaluated = report.per_user.size();
  report.gauc_avg = gauc(report.per_user, GaucWeighting::avg);
  report.gauc_show = gauc(report.per_user, GaucWeighting::show);
  report.gauc_click = gauc(report.per_user, GaucWeighting::click);

  std::vector<double> scores(samples.size());
  std::vector<std::uint8_t> labels(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    scores[i] = samples[i].score;
    labels[i] = samples[i].label;
  }
  report.auc = auc(scores, labels);
  return report;
}

std::string metrics_row(const std::string& variant, const MetricsReport& r) {
  return variant + "," + fmt(r.gauc_avg) + "," + fmt(r.gauc_show) + "," + fmt(r.gauc_click) + "," + fmt(r.auc) + "," +
         std::to_string(r.users_evaluated) + "," + std::to_string(r.users_excluded);
}

}  // namespace usd
