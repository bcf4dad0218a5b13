// SPDX-License-Identifier: Apache-2.0
#include "tea/data/dataset.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <tuple>
#include <unordered_map>

#include "tea/error.hpp"

namespace tea::data {

InteractionLog preprocess(const InteractionLog& log, const PreprocessOptions& options) {
  std::vector<Interaction> kept;
  kept.reserve(log.interactions.size());
  for (const auto& x : log.interactions) {
    if (x.rating && !(*x.rating > options.rating_threshold)) continue;
    kept.push_back(x);
  }

  // k-core style fixpoint over both user and item counts.
  bool changed = true;
  while (changed && !kept.empty()) {
    std::vector<std::size_t> user_count(log.users.size(), 0), item_count(log.items.size(), 0);
    for (const auto& x : kept) {
      ++user_count[x.user];
      ++item_count[x.item];
    }
    const std::size_t before = kept.size();
    std::erase_if(kept, [&](const Interaction& x) {
      return user_count[x.user] < options.min_actions || item_count[x.item] < options.min_actions;
    });
    changed = kept.size() != before;
  }
  if (kept.empty()) {
    throw EmptyData("preprocess: no interactions left after rating > " + std::to_string(options.rating_threshold) +
                    " and min-actions " + std::to_string(options.min_actions) + " filtering");
  }

  InteractionLog out;
  out.interactions.reserve(kept.size());
  for (const auto& x : kept) {
    Interaction y = x;
    y.user = out.users.insert(log.users.decode(x.user));
    y.item = out.items.insert(log.items.decode(x.item));
    out.interactions.push_back(y);
  }
  return out;
}

std::vector<UserSplit> leave_one_out_split(const std::vector<Interaction>& interactions, std::size_t user_count) {
  std::vector<std::vector<TimedItem>> per_user(user_count);
  for (const auto& x : interactions) {
    if (x.user >= user_count) throw InvalidArgument("leave_one_out_split: user id out of range");
    per_user[x.user].push_back({x.item, x.timestamp});
  }
  std::vector<UserSplit> splits(user_count);
  for (std::size_t u = 0; u < user_count; ++u) {
    auto& seq = per_user[u];
    if (seq.size() < 3) {
      throw InvalidArgument("leave_one_out_split: user " + std::to_string(u) + " has " + std::to_string(seq.size()) +
                            " interactions, need at least 3");
    }
    std::stable_sort(seq.begin(), seq.end(),
                     [](const TimedItem& a, const TimedItem& b) { return a.timestamp < b.timestamp; });
    splits[u].test = seq.back();
    splits[u].validation = seq[seq.size() - 2];
    splits[u].train.assign(seq.begin(), seq.end() - 2);
  }
  return splits;
}

std::vector<std::vector<TimedItem>> build_behavior_sequences(const std::vector<UserSplit>& splits,
                                                             std::size_t max_len) {
  std::vector<std::vector<TimedItem>> out(splits.size());
  for (std::size_t u = 0; u < splits.size(); ++u) {
    const auto& train = splits[u].train;
    const std::size_t keep = std::min(max_len, train.size());
    out[u].assign(train.end() - static_cast<std::ptrdiff_t>(keep), train.end());
  }
  return out;
}

namespace {

struct Event {
  Timestamp ts;
  UserId user;
  std::size_t order;
  ItemId item;
};

bool event_less(const Event& a, const Event& b) {
  return std::tie(a.ts, a.user, a.order) < std::tie(b.ts, b.user, b.order);
}

// Events of every user, all splits, time order.
std::vector<std::vector<Event>> events_by_user(const std::vector<UserSplit>& splits) {
  std::vector<std::vector<Event>> out(splits.size());
  for (std::size_t u = 0; u < splits.size(); ++u) {
    std::size_t order = 0;
    auto push = [&](const TimedItem& t) { out[u].push_back({t.timestamp, static_cast<UserId>(u), order++, t.item}); };
    for (const auto& t : splits[u].train) push(t);
    push(splits[u].validation);
    push(splits[u].test);
  }
  return out;
}

std::vector<ItemId> bucket_between(const std::vector<Event>& sorted, Timestamp lo, Timestamp hi, std::size_t cap) {
  std::vector<ItemId> out;
  if (hi <= lo) return out;
  auto first = std::lower_bound(sorted.begin(), sorted.end(), lo, [](const Event& e, Timestamp t) { return e.ts < t; });
  auto last = std::lower_bound(first, sorted.end(), hi, [](const Event& e, Timestamp t) { return e.ts < t; });
  const auto n = static_cast<std::size_t>(last - first);
  if (n > cap) first = last - static_cast<std::ptrdiff_t>(cap);
  for (auto it = first; it != last; ++it) out.push_back(it->item);
  return out;
}

}  // namespace

void build_neighbor_item_buckets(PreparedDataset& dataset, const std::vector<UserSplit>& splits, bool parallel) {
  const auto events = events_by_user(splits);
  const std::size_t cap = dataset.options.bucket_len;
  const auto n_users = static_cast<std::ptrdiff_t>(dataset.users.size());
#pragma omp parallel for schedule(dynamic, 16) if (parallel)
  for (std::ptrdiff_t ui = 0; ui < n_users; ++ui) {
    const auto u = static_cast<std::size_t>(ui);
    UserRecord& rec = dataset.users[u];
    std::vector<Event> merged;
    for (UserId n : dataset.social.of(static_cast<UserId>(u)))
      merged.insert(merged.end(), events[n].begin(), events[n].end());
    std::sort(merged.begin(), merged.end(), event_less);
    rec.buckets.assign(rec.sequence.size(), {});
    for (std::size_t s = 0; s < rec.sequence.size(); ++s) {
      const Timestamp lo = rec.sequence[s].timestamp;
      const Timestamp hi = s + 1 < rec.sequence.size() ? rec.sequence[s + 1].timestamp : rec.validation.timestamp;
      rec.buckets[s] = bucket_between(merged, lo, hi, cap);
    }
    rec.test_bucket = bucket_between(merged, rec.validation.timestamp, rec.test.timestamp, cap);
  }
}

namespace {

// Training interactions grouped by item, time order.
std::vector<std::vector<Event>> training_events_by_item(const std::vector<UserSplit>& splits, std::size_t n_items) {
  std::vector<std::vector<Event>> out(n_items);
  for (std::size_t u = 0; u < splits.size(); ++u) {
    std::size_t order = 0;
    for (const auto& t : splits[u].train) out[t.item].push_back({t.timestamp, static_cast<UserId>(u), order++, t.item});
  }
  for (auto& v : out) std::sort(v.begin(), v.end(), event_less);
  return out;
}

// Partners of (user, item, t): other users with a training interaction on
// the item within [t - tau, t + tau] (and strictly before `before`, if set).
// One walk per partner, at the co-interaction closest to t.
WalkSet walks_for(const std::vector<Event>& item_events, UserId user, Timestamp t, Timestamp tau, Timestamp before,
                  std::size_t cap, Rng rng) {
  auto first = std::lower_bound(item_events.begin(), item_events.end(), t - tau,
                                [](const Event& e, Timestamp x) { return e.ts < x; });
  WalkSet found;
  std::unordered_map<UserId, std::size_t> slot;
  for (auto it = first; it != item_events.end() && it->ts <= t + tau; ++it) {
    if (it->user == user || it->ts >= before) continue;
    auto [pos, inserted] = slot.try_emplace(it->user, found.size());
    if (inserted) {
      found.push_back({it->user, it->ts});
    } else {
      Walk& prev = found[pos->second];
      if (std::abs(it->ts - t) < std::abs(prev.partner_time - t)) prev.partner_time = it->ts;
    }
  }
  std::sort(found.begin(), found.end(), [](const Walk& a, const Walk& b) { return a.partner < b.partner; });
  if (found.size() > cap) {
    std::shuffle(found.begin(), found.end(), rng);
    found.resize(cap);
    std::sort(found.begin(), found.end(), [](const Walk& a, const Walk& b) { return a.partner < b.partner; });
  }
  return found;
}

}  // namespace

void extract_time_restricted_walks(PreparedDataset& dataset, const std::vector<UserSplit>& splits, bool parallel) {
  const auto by_item = training_events_by_item(splits, dataset.n_items);
  const auto& opt = dataset.options;
  constexpr Timestamp kNoBound = std::numeric_limits<Timestamp>::max();
  const auto n_users = static_cast<std::ptrdiff_t>(dataset.users.size());
#pragma omp parallel for schedule(dynamic, 16) if (parallel)
  for (std::ptrdiff_t ui = 0; ui < n_users; ++ui) {
    const auto u = static_cast<UserId>(ui);
    UserRecord& rec = dataset.users[u];
    rec.walks.assign(rec.sequence.size(), {});
    for (std::size_t s = 0; s < rec.sequence.size(); ++s) {
      const auto& anchor = rec.sequence[s];
      rec.walks[s] = walks_for(by_item[anchor.item], u, anchor.timestamp, opt.tau_seconds, kNoBound, opt.max_walks,
                               derive_rng(opt.seed, {kStreamWalkCap, u, s}));
    }
    const auto& last = rec.sequence.back();
    rec.validation_walks = walks_for(by_item[last.item], u, last.timestamp, opt.tau_seconds,
                                     rec.validation.timestamp, opt.max_walks,
                                     derive_rng(opt.seed, {kStreamWalkCap, u, 1'000'001}));
    rec.test_walks = walks_for(by_item[rec.validation.item], u, rec.validation.timestamp, opt.tau_seconds,
                               rec.test.timestamp, opt.max_walks, derive_rng(opt.seed, {kStreamWalkCap, u, 1'000'002}));
  }
}

PreparedDataset prepare_dataset(const InteractionLog& filtered, SocialGraph social, const DatasetOptions& options) {
  if (options.seq_len < 2) throw InvalidArgument("prepare: sequence length must be at least 2");
  PreparedDataset ds;
  ds.options = options;
  ds.n_users = filtered.users.size();
  ds.n_items = filtered.items.size();
  ds.interaction_count = filtered.interactions.size();
  ds.user_ids = filtered.users;
  ds.item_ids = filtered.items;
  if (social.user_count() != ds.n_users) social.neighbors.resize(ds.n_users);
  ds.social = std::move(social);

  const auto splits = leave_one_out_split(filtered.interactions, ds.n_users);
  const auto sequences = build_behavior_sequences(splits, options.seq_len);
  ds.users.resize(ds.n_users);
  for (std::size_t u = 0; u < ds.n_users; ++u) {
    ds.users[u].sequence = sequences[u];
    ds.users[u].validation = splits[u].validation;
    ds.users[u].test = splits[u].test;
  }
  build_neighbor_item_buckets(ds, splits);
  extract_time_restricted_walks(ds, splits);
  return ds;
}

PreparedDataset strip_graph_inputs(const PreparedDataset& dataset) {
  PreparedDataset out = dataset;
  for (auto& rec : out.users) {
    for (auto& b : rec.buckets) b.clear();
    rec.test_bucket.clear();
    for (auto& w : rec.walks) w.clear();
    rec.validation_walks.clear();
    rec.test_walks.clear();
  }
  for (auto& n : out.social.neighbors) n.clear();
  return out;
}

std::vector<ItemId> sample_negatives(ItemId positive, std::size_t item_count, std::size_t n_s, Rng& rng) {
  if (item_count < 2) throw InvalidArgument("sample_negatives: need at least 2 items");
  std::uniform_int_distribution<std::size_t> dist(0, item_count - 2);
  std::vector<ItemId> out(n_s);
  for (auto& v : out) {
    std::size_t r = dist(rng);
    if (r >= positive) ++r;
    v = static_cast<ItemId>(r);
  }
  return out;
}

DatasetStats compute_stats(const PreparedDataset& dataset) {
  DatasetStats s;
  s.users = dataset.n_users;
  s.items = dataset.n_items;
  s.interactions = dataset.interaction_count;
  s.social_links = dataset.social.edge_count();
  if (s.users && s.items) s.density = static_cast<double>(s.interactions) / (static_cast<double>(s.users) * s.items);
  return s;
}

}  // namespace tea::data
