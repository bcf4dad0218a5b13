// SPDX-License-Identifier: Apache-2.0
#include "tea/eval/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include "json.hpp"
#include "tea/autodiff/tape.hpp"
#include "tea/error.hpp"

namespace tea::eval {

std::vector<data::ItemId> build_candidates(data::ItemId truth, std::size_t item_count, std::size_t n_negatives,
                                           Rng& rng) {
  if (item_count < 2) throw InvalidArgument("build_candidates: need at least 2 items");
  if (truth >= item_count) throw InvalidArgument("build_candidates: truth item out of range");
  const std::size_t pool = item_count - 1;
  std::vector<data::ItemId> out{truth};
  // Negatives are drawn as indices into the catalogue with the truth removed.
  auto to_item = [truth](std::size_t idx) { return static_cast<data::ItemId>(idx >= truth ? idx + 1 : idx); };
  if (n_negatives >= pool) {
    for (std::size_t i = 0; i < pool; ++i) out.push_back(to_item(i));
    return out;
  }
  // Floyd's algorithm: n_negatives distinct draws from [0, pool).
  std::unordered_set<std::size_t> chosen;
  std::vector<std::size_t> order;
  for (std::size_t j = pool - n_negatives; j < pool; ++j) {
    std::size_t t = std::uniform_int_distribution<std::size_t>(0, j)(rng);
    if (chosen.insert(t).second) {
      order.push_back(t);
    } else {
      chosen.insert(j);
      order.push_back(j);
    }
  }
  for (auto idx : order) out.push_back(to_item(idx));
  return out;
}

std::size_t rank_of_truth(std::span<const double> scores, std::size_t truth_index) {
  if (truth_index >= scores.size()) throw InvalidArgument("rank_of_truth: truth index out of range");
  const double t = scores[truth_index];
  std::size_t rank = 1;
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (i != truth_index && scores[i] >= t) ++rank;
  return rank;
}

double hr_at_k(std::size_t rank, std::size_t k) { return rank >= 1 && rank <= k ? 1.0 : 0.0; }

double ndcg_at_k(std::size_t rank, std::size_t k) {
  return rank >= 1 && rank <= k ? 1.0 / std::log2(static_cast<double>(rank) + 1.0) : 0.0;
}

double EvalReport::hr_at(std::size_t k) const {
  for (std::size_t i = 0; i < ks.size(); ++i)
    if (ks[i] == k) return hr[i];
  throw InvalidArgument("report has no K=" + std::to_string(k));
}

double EvalReport::ndcg_at(std::size_t k) const {
  for (std::size_t i = 0; i < ks.size(); ++i)
    if (ks[i] == k) return ndcg[i];
  throw InvalidArgument("report has no K=" + std::to_string(k));
}

EvalReport evaluate_with_scorer(const data::PreparedDataset& ds, const EvalConfig& config, const Scorer& scorer) {
  if (ds.n_users == 0) throw EmptyData("evaluation: dataset has no users");
  if (config.ks.empty()) throw InvalidArgument("evaluation: no cutoffs given");
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = ds.n_users;
  const std::uint64_t holdout_tag = config.holdout == model::Holdout::kTest ? 2 : 1;
  std::vector<std::size_t> ranks(n, 0);

  auto one = [&](std::size_t u) {
    const auto& rec = ds.users[u];
    const data::ItemId truth = config.holdout == model::Holdout::kTest ? rec.test.item : rec.validation.item;
    Rng rng = derive_rng(config.seed, {kStreamEvalCandidates, holdout_tag, u});
    const auto cands = build_candidates(truth, ds.n_items, config.n_negatives, rng);
    const auto scores = scorer(static_cast<data::UserId>(u), cands);
    if (scores.size() != cands.size()) throw ShapeError("evaluation: scorer returned the wrong number of scores");
    ranks[u] = rank_of_truth(scores, 0);
  };

  if (config.parallel) {
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 8)
    for (std::size_t u = 0; u < n; ++u) {
      try {
        one(u);
      } catch (...) {
#pragma omp critical(tea_eval_failure)
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  } else {
    for (std::size_t u = 0; u < n; ++u) one(u);
  }

  EvalReport r;
  r.ks = config.ks;
  r.hr.assign(r.ks.size(), 0.0);
  r.ndcg.assign(r.ks.size(), 0.0);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t i = 0; i < r.ks.size(); ++i) {
      r.hr[i] += hr_at_k(ranks[u], r.ks[i]);
      r.ndcg[i] += ndcg_at_k(ranks[u], r.ks[i]);
    }
  }
  for (std::size_t i = 0; i < r.ks.size(); ++i) {
    r.hr[i] /= static_cast<double>(n);
    r.ndcg[i] /= static_cast<double>(n);
  }
  r.ranks = std::move(ranks);
  r.candidate_count = std::min(config.n_negatives, ds.n_items - 1) + 1;
  r.reduced_candidates = config.n_negatives > ds.n_items - 1;
  r.seed = config.seed;
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

Scorer model_scorer(const model::TeaModel& m, const data::PreparedDataset& ds, model::Holdout holdout) {
  return [&m, &ds, holdout](data::UserId user, const std::vector<data::ItemId>& candidates) {
    ad::Tape tape(ad::Tape::Mode::kInference);
    const auto ep = model::holdout_episode(ds, user, holdout, candidates);
    const auto out = model::score_episode(tape, m, ep);
    const auto v = out.total.value().values();
    return std::vector<double>(v.begin(), v.end());
  };
}

EvalReport evaluate_all(const model::TeaModel& m, const data::PreparedDataset& ds, const EvalConfig& config) {
  EvalReport r = evaluate_with_scorer(ds, config, model_scorer(m, ds, config.holdout));
  r.variant = model::to_string(m.config().variant);
  return r;
}

void write_report_json(const EvalReport& r, const std::filesystem::path& path,
                       const std::map<std::string, std::string>& config) {
  nlohmann::ordered_json j;
  j["config"] = config;
  j["variant"] = r.variant;
  j["seed"] = r.seed;
  j["users"] = r.ranks.size();
  j["candidate_count"] = r.candidate_count;
  j["reduced_candidates"] = r.reduced_candidates;
  nlohmann::ordered_json metrics = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < r.ks.size(); ++i) {
    metrics["HR@" + std::to_string(r.ks[i])] = r.hr[i];
    metrics["NDCG@" + std::to_string(r.ks[i])] = r.ndcg[i];
  }
  j["metrics"] = metrics;
  std::map<std::size_t, std::size_t> hist;
  for (auto k : r.ranks) ++hist[k];
  nlohmann::ordered_json h = nlohmann::ordered_json::array();
  for (const auto& [rank, count] : hist) h.push_back({{"rank", rank}, {"users", count}});
  j["rank_histogram"] = h;
  j["wall_clock_seconds"] = r.wall_seconds;
  std::ofstream out(path);
  if (!out) throw MissingInput("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

void write_rank_csv(const EvalReport& r, const data::PreparedDataset& ds, const std::filesystem::path& path,
                    const std::map<std::string, std::string>& config) {
  std::ofstream out(path);
  if (!out) throw MissingInput("cannot write '" + path.string() + "'");
  for (const auto& [k, v] : config) out << "# " << k << " = " << v << '\n';
  out << "user_id,rank\n";
  for (std::size_t u = 0; u < r.ranks.size(); ++u) out << ds.user_ids.decode(static_cast<data::UserId>(u)) << ',' << r.ranks[u] << '\n';
}

}  // namespace tea::eval
