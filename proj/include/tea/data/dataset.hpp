// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "tea/data/interactions.hpp"
#include "tea/rng.hpp"

namespace tea::data {

inline constexpr Timestamp kSecondsPerDay = 86400;

struct PreprocessOptions {
  std::size_t min_actions = 5;
  double rating_threshold = 3.0;
};

/// Drops rated interactions with rating <= threshold, then removes users and
/// items with fewer than `min_actions` interactions until both constraints
/// hold at once, and re-compacts ids in order of first appearance. Throws
/// EmptyData if nothing survives.
InteractionLog preprocess(const InteractionLog& log, const PreprocessOptions& options);

struct TimedItem {
  ItemId item = 0;
  Timestamp timestamp = 0;
  friend bool operator==(const TimedItem&, const TimedItem&) = default;
};

/// Leave-one-out assignment for one user.
struct UserSplit {
  std::vector<TimedItem> train;  // time order
  TimedItem validation;
  TimedItem test;
};

/// Sorts each user's interactions by timestamp (ties keep input order);
/// latest -> test, second latest -> validation, the rest -> train. Throws
/// InvalidArgument for a user with fewer than 3 interactions.
std::vector<UserSplit> leave_one_out_split(const std::vector<Interaction>& interactions, std::size_t user_count);

/// Most recent `max_len` training items per user, time order preserved.
std::vector<std::vector<TimedItem>> build_behavior_sequences(const std::vector<UserSplit>& splits,
                                                             std::size_t max_len);

/// One USER-ITEM-USER walk (u_i, v_t, partner): partner also interacted with
/// v_t at `partner_time`.
struct Walk {
  UserId partner = 0;
  Timestamp partner_time = 0;
  friend bool operator==(const Walk&, const Walk&) = default;
};
using WalkSet = std::vector<Walk>;

struct DatasetOptions {
  PreprocessOptions preprocess;
  std::size_t seq_len = 50;      // L_s
  std::size_t bucket_len = 20;   // L_n
  Timestamp tau_seconds = 60 * kSecondsPerDay;
  std::size_t max_walks = 10;
  std::uint64_t seed = 42;
};

/// Per-user view of the prepared corpus. Position s of `sequence` is step s.
struct UserRecord {
  std::vector<TimedItem> sequence;  // most recent <= L_s training interactions
  TimedItem validation;
  TimedItem test;
  /// buckets[s]: items neighbors interacted with in [ts(s), ts(s+1)); the
  /// last one is bounded by the validation timestamp. Each holds the <= L_n
  /// most recent items, in time order.
  std::vector<std::vector<ItemId>> buckets;
  /// Neighbor items in [ts(validation), ts(test)).
  std::vector<ItemId> test_bucket;
  /// walks[s] is anchored at (user, sequence[s]).
  std::vector<WalkSet> walks;
  /// Anchored at sequence.back(), partners restricted to before the validation timestamp.
  WalkSet validation_walks;
  /// Anchored at the validation interaction, partners restricted to before the test timestamp.
  WalkSet test_walks;
};

struct PreparedDataset {
  DatasetOptions options;
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  std::size_t interaction_count = 0;  // after preprocessing, all splits
  std::vector<UserRecord> users;
  SocialGraph social;
  IdMap user_ids;
  IdMap item_ids;
};

/// Neighbor-item buckets for every user (see UserRecord::buckets), built
/// from all interactions of the user's social neighbors. Users are processed
/// independently, so `parallel = false` gives the identical serial result.
void build_neighbor_item_buckets(PreparedDataset& dataset, const std::vector<UserSplit>& splits, bool parallel = true);

/// Time-restricted walks over training interactions (see UserRecord::walks).
/// Cap sampling is keyed per (user, step), so both schedules agree.
void extract_time_restricted_walks(PreparedDataset& dataset, const std::vector<UserSplit>& splits,
                                   bool parallel = true);

/// Runs split, sequence building, bucketing and walk extraction on an already
/// preprocessed log.
PreparedDataset prepare_dataset(const InteractionLog& filtered, SocialGraph social, const DatasetOptions& options);

/// Copy with buckets, walks and social edges removed (transition-only input).
PreparedDataset strip_graph_inputs(const PreparedDataset& dataset);

/// `n_s` draws, with replacement, uniform over all items except `positive`.
/// Throws InvalidArgument if item_count < 2.
std::vector<ItemId> sample_negatives(ItemId positive, std::size_t item_count, std::size_t n_s, Rng& rng);

struct DatasetStats {
  std::size_t users = 0;
  std::size_t items = 0;
  std::size_t interactions = 0;
  std::size_t social_links = 0;
  double density = 0.0;  // interactions / (users * items)
};
DatasetStats compute_stats(const PreparedDataset& dataset);

}  // namespace tea::data
