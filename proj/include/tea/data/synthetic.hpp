// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "tea/data/dataset.hpp"

// Generated corpora with known structure, used by tests, the acceptance suite
// and `tea synth`. They are emitted as raw TSV text so they travel through
// the same parsing and preprocessing path as real dumps.
namespace tea::data {

struct SyntheticCorpus {
  std::string interactions_tsv;
  std::string social_tsv;
};

struct SyntheticOptions {
  std::size_t users = 200;
  std::size_t items = 50;
  std::size_t length = 20;      // interactions per user
  std::size_t group_size = 4;   // users per social group
  std::uint64_t seed = 7;
};

/// Every user walks the item ring: next item = (current + 1) mod items,
/// one step per day. Users are grouped; a group shares its start item (group
/// starts are spread evenly over the ring, so every transition occurs in some
/// training window) and
/// members follow the first one a few hours later (well inside the walk
/// window). Groups are fully connected socially.
SyntheticCorpus cyclic_corpus(const SyntheticOptions& options);

/// Each group has a leader who picks uniformly random items, one per day;
/// the other members (connected only to the leader) consume the leader's
/// item one hour later. A follower's next item is therefore exactly the
/// single item in its latest neighbor bucket, and its own history carries
/// no sequential signal.
SyntheticCorpus follower_corpus(const SyntheticOptions& options);

/// Tiny deterministic cycle without social edges: user u starts at item
/// (2u mod items) and advances by one per day.
SyntheticCorpus toy_cycle_corpus(std::size_t users, std::size_t items, std::size_t length);

/// Uniformly random items, no structure.
SyntheticCorpus random_corpus(const SyntheticOptions& options);

/// Parses, preprocesses and prepares a corpus exactly like `tea prepare`.
PreparedDataset prepare_corpus(const SyntheticCorpus& corpus, const DatasetOptions& options);

/// Writes interactions.tsv and social.tsv into `dir`.
void write_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir);

}  // namespace tea::data
