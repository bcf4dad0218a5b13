// SPDX-License-Identifier: Apache-2.0
#include "tea/data/interactions.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

#include "tea/error.hpp"

namespace tea::data {
namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  if (fields.size() == 1) {
    // Space-separated dumps are common enough to accept.
    fields.clear();
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) fields.push_back(tok);
  }
  return fields;
}

bool skip_line(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto first = line.find_first_not_of(" \t");
  return first == std::string::npos || line[first] == '#';
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingInput("cannot open '" + path + "'");
  return in;
}

}  // namespace

std::uint32_t IdMap::insert(const std::string& raw) {
  auto [it, inserted] = dense_.try_emplace(raw, static_cast<std::uint32_t>(raw_.size()));
  if (inserted) raw_.push_back(raw);
  return it->second;
}

std::optional<std::uint32_t> IdMap::encode(const std::string& raw) const {
  auto it = dense_.find(raw);
  if (it == dense_.end()) return std::nullopt;
  return it->second;
}

InteractionLog parse_interactions(std::istream& in, const std::string& source_name) {
  InteractionLog log;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (skip_line(line)) continue;
    const auto fields = split_fields(line);
    if (fields.size() < 3 || fields.size() > 4) {
      throw ParseError(source_name, line_no,
                       "expected 3 or 4 fields (user, item, timestamp[, rating]), got " + std::to_string(fields.size()));
    }
    if (fields[0].empty() || fields[1].empty()) throw ParseError(source_name, line_no, "empty user or item id");
    Timestamp ts = 0;
    const std::string& ts_field = fields[2];
    auto [ptr, ec] = std::from_chars(ts_field.data(), ts_field.data() + ts_field.size(), ts);
    if (ec != std::errc() || ptr != ts_field.data() + ts_field.size()) {
      throw ParseError(source_name, line_no, "bad timestamp '" + ts_field + "'");
    }
    if (ts < 0) throw ParseError(source_name, line_no, "negative timestamp");
    std::optional<double> rating;
    if (fields.size() == 4 && !fields[3].empty()) {
      try {
        std::size_t used = 0;
        rating = std::stod(fields[3], &used);
        if (used != fields[3].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ParseError(source_name, line_no, "bad rating '" + fields[3] + "'");
      }
    }
    Interaction x;
    x.user = log.users.insert(fields[0]);
    x.item = log.items.insert(fields[1]);
    x.timestamp = ts;
    x.rating = rating;
    log.interactions.push_back(x);
  }
  return log;
}

InteractionLog load_interactions(const std::string& path) {
  auto in = open_or_throw(path);
  return parse_interactions(in, path);
}

std::size_t SocialGraph::edge_count() const noexcept {
  std::size_t twice = 0;
  for (const auto& n : neighbors) twice += n.size();
  return twice / 2;
}

SocialGraph make_social_graph(std::size_t user_count, const std::vector<std::pair<UserId, UserId>>& edges,
                              SocialLoadReport* report) {
  SocialGraph g;
  g.neighbors.resize(user_count);
  std::size_t self_loops = 0;
  for (auto [a, b] : edges) {
    if (a >= user_count || b >= user_count) throw InvalidArgument("social edge references unknown user");
    if (a == b) {
      ++self_loops;
      continue;
    }
    g.neighbors[a].push_back(b);
    g.neighbors[b].push_back(a);
  }
  std::size_t before = 0, after = 0;
  for (auto& n : g.neighbors) {
    before += n.size();
    std::sort(n.begin(), n.end());
    n.erase(std::unique(n.begin(), n.end()), n.end());
    after += n.size();
  }
  if (report) {
    report->self_loops += self_loops;
    report->duplicates += (before - after) / 2;
  }
  return g;
}

SocialGraph parse_social_edges(std::istream& in, const std::string& source_name, const IdMap& users,
                               SocialLoadReport* report) {
  std::vector<std::pair<UserId, UserId>> edges;
  SocialLoadReport local;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (skip_line(line)) continue;
    const auto fields = split_fields(line);
    // Some trust dumps carry a third weight column; it is ignored.
    if (fields.size() < 2 || fields.size() > 3) {
      throw ParseError(source_name, line_no, "expected a user id pair, got " + std::to_string(fields.size()) + " fields");
    }
    ++local.rows;
    auto a = users.encode(fields[0]);
    auto b = users.encode(fields[1]);
    if (!a || !b) {
      ++local.unknown_users;
      continue;
    }
    edges.emplace_back(*a, *b);
  }
  SocialGraph g = make_social_graph(users.size(), edges, &local);
  if (report) *report = local;
  return g;
}

SocialGraph load_social_edges(const std::string& path, const IdMap& users, SocialLoadReport* report) {
  auto in = open_or_throw(path);
  return parse_social_edges(in, path, users, report);
}

}  // namespace tea::data
