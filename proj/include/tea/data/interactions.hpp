// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace tea::data {

using UserId = std::uint32_t;
using ItemId = std::uint32_t;
using Timestamp = std::int64_t;  // seconds since epoch

struct Interaction {
  UserId user = 0;
  ItemId item = 0;
  Timestamp timestamp = 0;
  std::optional<double> rating;

  friend bool operator==(const Interaction&, const Interaction&) = default;
};

/// Bijection between raw string ids and dense indices, assigned in order of
/// first appearance.
class IdMap {
 public:
  std::uint32_t insert(const std::string& raw);
  std::optional<std::uint32_t> encode(const std::string& raw) const;
  const std::string& decode(std::uint32_t dense) const { return raw_.at(dense); }
  std::size_t size() const noexcept { return raw_.size(); }
  const std::vector<std::string>& raw_ids() const noexcept { return raw_; }

 private:
  std::unordered_map<std::string, std::uint32_t> dense_;
  std::vector<std::string> raw_;
};

/// Interactions with dense ids plus the tables needed to decode them.
struct InteractionLog {
  std::vector<Interaction> interactions;
  IdMap users;
  IdMap items;
};

/// Reads `raw_user \t raw_item \t unix_seconds [\t rating]` lines. Lines that
/// are blank or start with '#' are skipped; exact duplicate rows are kept.
/// Throws MissingInput if the file cannot be opened and ParseError (with the
/// line number) on malformed rows.
InteractionLog load_interactions(const std::string& path);
InteractionLog parse_interactions(std::istream& in, const std::string& source_name);

/// Undirected user graph; neighbor lists are sorted and duplicate free.
struct SocialGraph {
  std::vector<std::vector<UserId>> neighbors;

  const std::vector<UserId>& of(UserId u) const { return neighbors.at(u); }
  std::size_t user_count() const noexcept { return neighbors.size(); }
  /// Number of distinct undirected edges.
  std::size_t edge_count() const noexcept;
};

struct SocialLoadReport {
  std::size_t rows = 0;
  std::size_t self_loops = 0;
  std::size_t unknown_users = 0;
  std::size_t duplicates = 0;
};

/// Builds a symmetric graph over `user_count` users from (a, b) pairs. Self
/// loops are skipped, duplicates collapse.
SocialGraph make_social_graph(std::size_t user_count, const std::vector<std::pair<UserId, UserId>>& edges,
                              SocialLoadReport* report = nullptr);

/// Reads tab-separated raw user id pairs, keeping only users known to `users`.
SocialGraph load_social_edges(const std::string& path, const IdMap& users, SocialLoadReport* report = nullptr);
SocialGraph parse_social_edges(std::istream& in, const std::string& source_name, const IdMap& users,
                               SocialLoadReport* report = nullptr);

}  // namespace tea::data
