// SPDX-License-Identifier: Apache-2.0
#include "tea/data/snapshot.hpp"

#include <fstream>
#include <iterator>

#include "json.hpp"
#include "tea/error.hpp"

namespace tea::data {
namespace {

using nlohmann::json;

json timed(const TimedItem& t) { return json::array({t.item, t.timestamp}); }
TimedItem timed_from(const json& j) { return {j.at(0).get<ItemId>(), j.at(1).get<Timestamp>()}; }

json walks_json(const WalkSet& w) {
  json out = json::array();
  for (const auto& x : w) out.push_back(json::array({x.partner, x.partner_time}));
  return out;
}

WalkSet walks_from(const json& j) {
  WalkSet out;
  for (const auto& x : j) out.push_back({x.at(0).get<UserId>(), x.at(1).get<Timestamp>()});
  return out;
}

void write_id_map(const IdMap& map, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw MissingInput("cannot write '" + path.string() + "'");
  for (std::size_t i = 0; i < map.size(); ++i) out << i << '\t' << map.decode(static_cast<std::uint32_t>(i)) << '\n';
}

}  // namespace

void save_dataset(const PreparedDataset& ds, const std::filesystem::path& dir,
                  const std::map<std::string, std::string>& config) {
  std::filesystem::create_directories(dir);
  json j;
  j["format"] = kDatasetFormat;
  const auto& o = ds.options;
  j["options"] = {{"min_actions", o.preprocess.min_actions},
                  {"rating_threshold", o.preprocess.rating_threshold},
                  {"seq_len", o.seq_len},
                  {"bucket_len", o.bucket_len},
                  {"tau_seconds", o.tau_seconds},
                  {"max_walks", o.max_walks},
                  {"seed", o.seed}};
  j["n_users"] = ds.n_users;
  j["n_items"] = ds.n_items;
  j["interaction_count"] = ds.interaction_count;
  json users = json::array();
  for (const auto& rec : ds.users) {
    json r;
    json seq = json::array();
    for (const auto& t : rec.sequence) seq.push_back(timed(t));
    r["seq"] = std::move(seq);
    r["val"] = timed(rec.validation);
    r["test"] = timed(rec.test);
    r["buckets"] = rec.buckets;
    r["test_bucket"] = rec.test_bucket;
    json walks = json::array();
    for (const auto& w : rec.walks) walks.push_back(walks_json(w));
    r["walks"] = std::move(walks);
    r["val_walks"] = walks_json(rec.validation_walks);
    r["test_walks"] = walks_json(rec.test_walks);
    users.push_back(std::move(r));
  }
  j["users"] = std::move(users);
  j["social"] = ds.social.neighbors;
  j["user_ids"] = ds.user_ids.raw_ids();
  j["item_ids"] = ds.item_ids.raw_ids();

  const auto bytes = json::to_cbor(j);
  {
    std::ofstream out(dir / "dataset.cbor", std::ios::binary);
    if (!out) throw MissingInput("cannot write '" + (dir / "dataset.cbor").string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  write_id_map(ds.user_ids, dir / "user_ids.tsv");
  write_id_map(ds.item_ids, dir / "item_ids.tsv");

  const auto stats = compute_stats(ds);
  json s;
  s["config"] = config;
  s["users"] = stats.users;
  s["items"] = stats.items;
  s["interactions"] = stats.interactions;
  s["social_links"] = stats.social_links;
  s["density"] = stats.density;
  std::ofstream out(dir / "stats.json");
  out << s.dump(2) << '\n';
}

PreparedDataset load_dataset(const std::filesystem::path& dir) {
  const auto path = dir / "dataset.cbor";
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInput("cannot open prepared dataset '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  json j;
  try {
    j = json::from_cbor(bytes);
  } catch (const json::exception& e) {
    throw Incompatible("'" + path.string() + "' is not a " + kDatasetFormat + " snapshot: " + e.what());
  }
  if (!j.is_object() || !j.contains("format") || j["format"] != kDatasetFormat) {
    throw Incompatible("'" + path.string() + "': expected format " + kDatasetFormat);
  }
  PreparedDataset ds;
  try {
    const auto& o = j.at("options");
    ds.options.preprocess.min_actions = o.at("min_actions").get<std::size_t>();
    ds.options.preprocess.rating_threshold = o.at("rating_threshold").get<double>();
    ds.options.seq_len = o.at("seq_len").get<std::size_t>();
    ds.options.bucket_len = o.at("bucket_len").get<std::size_t>();
    ds.options.tau_seconds = o.at("tau_seconds").get<Timestamp>();
    ds.options.max_walks = o.at("max_walks").get<std::size_t>();
    ds.options.seed = o.at("seed").get<std::uint64_t>();
    ds.n_users = j.at("n_users").get<std::size_t>();
    ds.n_items = j.at("n_items").get<std::size_t>();
    ds.interaction_count = j.at("interaction_count").get<std::size_t>();
    for (const auto& r : j.at("users")) {
      UserRecord rec;
      for (const auto& t : r.at("seq")) rec.sequence.push_back(timed_from(t));
      rec.validation = timed_from(r.at("val"));
      rec.test = timed_from(r.at("test"));
      rec.buckets = r.at("buckets").get<std::vector<std::vector<ItemId>>>();
      rec.test_bucket = r.at("test_bucket").get<std::vector<ItemId>>();
      for (const auto& w : r.at("walks")) rec.walks.push_back(walks_from(w));
      rec.validation_walks = walks_from(r.at("val_walks"));
      rec.test_walks = walks_from(r.at("test_walks"));
      ds.users.push_back(std::move(rec));
    }
    ds.social.neighbors = j.at("social").get<std::vector<std::vector<UserId>>>();
    for (const auto& s : j.at("user_ids")) ds.user_ids.insert(s.get<std::string>());
    for (const auto& s : j.at("item_ids")) ds.item_ids.insert(s.get<std::string>());
  } catch (const json::exception& e) {
    throw Incompatible("'" + path.string() + "' is malformed: " + e.what());
  }
  if (ds.users.size() != ds.n_users || ds.social.neighbors.size() != ds.n_users) {
    throw Incompatible("'" + path.string() + "': user count mismatch");
  }
  return ds;
}

}  // namespace tea::data
