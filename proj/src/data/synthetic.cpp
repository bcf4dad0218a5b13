// SPDX-License-Identifier: Apache-2.0
#include "tea/data/synthetic.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "tea/error.hpp"

namespace tea::data {
namespace {

constexpr Timestamp kEpoch = 1546300800;  // 2019-01-01T00:00:00Z
constexpr Timestamp kHour = 3600;

void row(std::ostringstream& out, std::size_t user, std::size_t item, Timestamp ts) {
  out << 'u' << user << "\ti" << item << '\t' << ts << "\t5\n";
}

void edge(std::ostringstream& out, std::size_t a, std::size_t b) { out << 'u' << a << "\tu" << b << '\n'; }

}  // namespace

SyntheticCorpus cyclic_corpus(const SyntheticOptions& o) {
  Rng rng = derive_rng(o.seed, {kStreamSynthetic, 1});
  const std::size_t groups = (o.users + o.group_size - 1) / o.group_size;
  std::vector<std::size_t> starts(groups);
  for (std::size_t g = 0; g < groups; ++g) starts[g] = g * o.items / groups % o.items;
  std::shuffle(starts.begin(), starts.end(), rng);
  std::ostringstream inter, social;
  for (std::size_t g0 = 0; g0 < o.users; g0 += o.group_size) {
    const std::size_t g1 = std::min(o.users, g0 + o.group_size);
    const std::size_t start = starts[g0 / o.group_size];
    for (std::size_t u = g0; u < g1; ++u) {
      const Timestamp offset = static_cast<Timestamp>(u - g0) * 2 * kHour;
      for (std::size_t k = 0; k < o.length; ++k) {
        row(inter, u, (start + k) % o.items, kEpoch + static_cast<Timestamp>(k) * kSecondsPerDay + offset);
      }
      for (std::size_t v = u + 1; v < g1; ++v) edge(social, u, v);
    }
  }
  return {inter.str(), social.str()};
}

SyntheticCorpus follower_corpus(const SyntheticOptions& o) {
  Rng rng = derive_rng(o.seed, {kStreamSynthetic, 2});
  std::uniform_int_distribution<std::size_t> item_dist(0, o.items - 1);
  std::ostringstream inter, social;
  for (std::size_t g0 = 0; g0 < o.users; g0 += o.group_size) {
    const std::size_t g1 = std::min(o.users, g0 + o.group_size);
    std::vector<std::size_t> picks(o.length);
    for (auto& p : picks) p = item_dist(rng);
    for (std::size_t k = 0; k < o.length; ++k) {
      const Timestamp day = kEpoch + static_cast<Timestamp>(k) * kSecondsPerDay;
      row(inter, g0, picks[k], day);
      for (std::size_t u = g0 + 1; u < g1; ++u) row(inter, u, picks[k], day + kHour);
    }
    for (std::size_t u = g0 + 1; u < g1; ++u) edge(social, g0, u);
  }
  return {inter.str(), social.str()};
}

SyntheticCorpus toy_cycle_corpus(std::size_t users, std::size_t items, std::size_t length) {
  std::ostringstream inter;
  for (std::size_t u = 0; u < users; ++u)
    for (std::size_t k = 0; k < length; ++k)
      row(inter, u, (2 * u + k) % items, kEpoch + static_cast<Timestamp>(k) * kSecondsPerDay);
  return {inter.str(), std::string()};
}

SyntheticCorpus random_corpus(const SyntheticOptions& o) {
  Rng rng = derive_rng(o.seed, {kStreamSynthetic, 3});
  std::uniform_int_distribution<std::size_t> item_dist(0, o.items - 1);
  std::ostringstream inter;
  for (std::size_t u = 0; u < o.users; ++u)
    for (std::size_t k = 0; k < o.length; ++k)
      row(inter, u, item_dist(rng), kEpoch + static_cast<Timestamp>(k) * kSecondsPerDay);
  return {inter.str(), std::string()};
}

PreparedDataset prepare_corpus(const SyntheticCorpus& corpus, const DatasetOptions& options) {
  std::istringstream in(corpus.interactions_tsv);
  const InteractionLog filtered = preprocess(parse_interactions(in, "<synthetic>"), options.preprocess);
  std::istringstream social_in(corpus.social_tsv);
  SocialGraph social = parse_social_edges(social_in, "<synthetic-social>", filtered.users);
  return prepare_dataset(filtered, std::move(social), options);
}

void write_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream a(dir / "interactions.tsv");
  std::ofstream b(dir / "social.tsv");
  if (!a || !b) throw MissingInput("cannot write corpus into '" + dir.string() + "'");
  a << corpus.interactions_tsv;
  b << corpus.social_tsv;
}

}  // namespace tea::data
