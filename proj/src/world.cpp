// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "usd/world.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "usd/error.hpp"
#include "usd/parallel.hpp"
#include "usd/rng.hpp"

namespace usd {

void WorldConfig::validate() const {
  if (users == 0) throw ConfigError("world.users must be > 0");
  if (items == 0) throw ConfigError("world.items must be > 0");
  if (item_dim == 0) throw ConfigError("world.item_dim must be > 0");
  if (item_categories == 0) throw ConfigError("world.item_categories must be > 0");
  if (days < kFirstLabelDay + 1) {
    throw ConfigError("world.days must be >= " + std::to_string(kFirstLabelDay + 1) +
                      " (30-day sequence + 7-day lookback + 1 label day)");
  }
  if (exposures_per_user_day == 0 || exposures_per_user_day > items) {
    throw ConfigError("world.exposures_per_user_day must be in [1, items]");
  }
  if (portal_alpha <= 0 || portal_beta <= 0 || block_alpha <= 0 || block_beta <= 0) {
    throw ConfigError("world Beta parameters must be > 0");
  }
  if (item_scale < 0 || item_bias_sd < 0) throw ConfigError("world item scales must be >= 0");
  if (coupling < 0 || coupling > 1) throw ConfigError("world.coupling must be in [0, 1]");
}

World generate_world(const WorldConfig& config, std::uint64_t master_seed) {
  config.validate();
  World w;
  w.config = config;
  w.config.seed = master_seed;

  constexpr double kAffinityEps = 1e-6;
  w.users.resize(config.users);
  for (std::size_t u = 0; u < config.users; ++u) {
    Rng rng(stream_seed(master_seed, stream::kUsers, u));
    LatentUser& user = w.users[u];
    user.user_id = static_cast<std::uint32_t>(u);
    user.portal_affinity = std::clamp(rng.beta(config.portal_alpha, config.portal_beta), kAffinityEps, 1 - kAffinityEps);
    user.block_affinity = std::clamp(rng.beta(config.block_alpha, config.block_beta), kAffinityEps, 1 - kAffinityEps);
    user.preference.resize(config.item_dim);
    for (double& v : user.preference) v = rng.normal();
  }

  const double emb_sd = config.item_scale / std::sqrt(static_cast<double>(config.item_dim));
  w.items.resize(config.items);
  for (std::size_t i = 0; i < config.items; ++i) {
    Rng rng(stream_seed(master_seed, stream::kItems, i));
    Item& item = w.items[i];
    item.item_id = static_cast<std::uint32_t>(i);
    item.feature_id = static_cast<std::uint32_t>(rng.index(config.item_categories));
    item.embedding.resize(config.item_dim);
    for (double& v : item.embedding) v = rng.normal(0.0, emb_sd);
    item.bias = rng.normal(config.item_bias_mean, config.item_bias_sd);
  }
  return w;
}

namespace {

double item_score(const LatentUser& user, const Item& item) {
  double s = item.bias;
  for (std::size_t k = 0; k < item.embedding.size(); ++k) s += user.preference[k] * item.embedding[k];
  return s;
}

}  // namespace

namespace oracle {

Propensities propensities(const World& world, std::uint32_t user_id) {
  const LatentUser& u = world.users.at(user_id);
  return {u.portal_affinity, u.block_affinity};
}

double item_click_probability(const LatentUser& user, const Item& item) {
  return 1.0 / (1.0 + std::exp(-item_score(user, item)));
}

}  // namespace oracle

namespace {

double upper_normal_tail(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

struct UserTrace {
  std::vector<ExposureRecord> exposures;
  std::vector<UserDayContext> contexts;
};

UserTrace simulate_user(const LatentUser& user, const std::vector<Item>& items,
                        const SimulationOptions& opt, std::uint64_t master_seed) {
  Rng rng(stream_seed(master_seed, stream::kSimulate, user.user_id));
  const std::size_t k = opt.exposures_per_user_day;
  const std::size_t n_items = items.size();

  // Scores over the whole catalog give the exact mean and variance of the
  // appeal of k uniformly drawn distinct items.
  std::vector<double> scores(n_items);
  double mean = 0.0;
  for (std::size_t i = 0; i < n_items; ++i) {
    scores[i] = item_score(user, items[i]);
    mean += scores[i];
  }
  mean /= static_cast<double>(n_items);
  double var = 0.0;
  for (double s : scores) var += (s - mean) * (s - mean);
  var /= static_cast<double>(n_items);
  const double fpc = n_items > 1 ? static_cast<double>(n_items - k) / static_cast<double>(n_items - 1) : 0.0;
  const double appeal_sd = std::sqrt(var / static_cast<double>(k) * fpc);
  const double rho = opt.coupling * user.portal_affinity;
  const double noise_w = std::sqrt(1.0 - rho * rho);

  UserTrace trace;
  trace.exposures.reserve(opt.num_days * k);
  std::vector<std::int8_t> tokens(opt.num_days);
  std::vector<std::uint8_t> block_clicked(opt.num_days);
  std::vector<std::size_t> shown;
  shown.reserve(k);

  for (std::size_t day = 0; day < opt.num_days; ++day) {
    shown.clear();
    while (shown.size() < k) {
      const std::size_t cand = rng.index(n_items);
      if (std::find(shown.begin(), shown.end(), cand) == shown.end()) shown.push_back(cand);
    }
    const bool visit = rng.bernoulli(user.portal_affinity);
    bool block = false;
    if (visit) {
      double appeal = 0.0;
      for (std::size_t i : shown) appeal += scores[i];
      appeal /= static_cast<double>(k);
      const double z = appeal_sd > 0.0 ? (appeal - mean) / appeal_sd : 0.0;
      const double latent = rho * z + noise_w * rng.normal();
      block = user.block_affinity >= 1.0 || upper_normal_tail(latent) < user.block_affinity;
    }
    for (std::size_t i : shown) {
      ExposureRecord r;
      r.user_id = user.user_id;
      r.item_id = items[i].item_id;
      r.day = static_cast<std::uint32_t>(day);
      r.item_feature_id = items[i].feature_id;
      r.label = block && rng.bernoulli(1.0 / (1.0 + std::exp(-scores[i]))) ? 1 : 0;
      trace.exposures.push_back(r);
    }
    tokens[day] = visit ? (block ? 1 : 0) : -1;
    block_clicked[day] = block ? 1 : 0;
  }

  for (std::size_t day = kFirstLabelDay; day < opt.num_days; ++day) {
    UserDayContext c;
    c.user_id = user.user_id;
    c.day = static_cast<std::uint32_t>(day);
    c.y_p = tokens[day] >= 0 ? 1 : 0;
    c.y_b = block_clicked[day];
    for (std::size_t t = 0; t < kSeqLen; ++t) c.sequence[t] = tokens[day - kSeqLen + t];
    for (std::size_t back = 1; back <= kLookback; ++back) {
      if (tokens[day - back] >= 0) c.r_p = 1;
    }
    trace.contexts.push_back(c);
  }
  return trace;
}

}  // namespace

Dataset simulate_days(const std::vector<LatentUser>& users, const std::vector<Item>& items,
                      const SimulationOptions& options, std::uint64_t master_seed) {
  if (options.num_days < kFirstLabelDay + 1) {
    throw ConfigError("simulate_days: num_days must be >= " + std::to_string(kFirstLabelDay + 1));
  }
  if (items.empty()) throw ConfigError("simulate_days: no items");
  if (options.exposures_per_user_day == 0 || options.exposures_per_user_day > items.size()) {
    throw ConfigError("simulate_days: exposures_per_user_day must be in [1, items]");
  }
  if (options.coupling < 0 || options.coupling > 1) throw ConfigError("simulate_days: coupling must be in [0, 1]");

  std::vector<UserTrace> traces(users.size());
  parallel_chunks(users.size(), options.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t u = begin; u < end; ++u) traces[u] = simulate_user(users[u], items, options, master_seed);
  });

  Dataset ds;
  ds.num_users = users.size();
  ds.num_items = items.size();
  ds.num_days = options.num_days;
  for (auto& t : traces) {
    ds.exposures.insert(ds.exposures.end(), t.exposures.begin(), t.exposures.end());
    ds.contexts.insert(ds.contexts.end(), t.contexts.begin(), t.contexts.end());
  }
  return ds;
}

Dataset simulate_world(const World& world) {
  SimulationOptions opt;
  opt.num_days = world.config.days;
  opt.exposures_per_user_day = world.config.exposures_per_user_day;
  opt.coupling = world.config.coupling;
  opt.threads = world.config.threads;
  return simulate_days(world.users, world.items, opt, world.config.seed);
}

std::string world_meta(const WorldConfig& c) {
  std::ostringstream os;
  os.precision(17);
  os << "# usdlab world\n"
     << "seed = " << c.seed << "\n"
     << "users = " << c.users << "\n"
     << "items = " << c.items << "\n"
     << "item_dim = " << c.item_dim << "\n"
     << "item_categories = " << c.item_categories << "\n"
     << "days = " << c.days << "\n"
     << "exposures_per_user_day = " << c.exposures_per_user_day << "\n"
     << "portal_alpha = " << c.portal_alpha << "\n"
     << "portal_beta = " << c.portal_beta << "\n"
     << "block_alpha = " << c.block_alpha << "\n"
     << "block_beta = " << c.block_beta << "\n"
     << "item_scale = " << c.item_scale << "\n"
     << "item_bias_mean = " << c.item_bias_mean << "\n"
     << "item_bias_sd = " << c.item_bias_sd << "\n"
     << "coupling = " << c.coupling << "\n"
     << "sequence_length = " << kSeqLen << "\n"
     << "lookback_days = " << kLookback << "\n";
  return os.str();
}

}  // namespace usd
