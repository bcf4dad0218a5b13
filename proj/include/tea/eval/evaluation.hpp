// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tea/data/dataset.hpp"
#include "tea/model/episode.hpp"
#include "tea/model/tea_model.hpp"

// Sampled-negative leave-one-out ranking evaluation.
namespace tea::eval {

/// The truth first, then `n_negatives` distinct items drawn uniformly without
/// replacement from the rest of the catalogue (all of them if fewer remain).
/// Throws InvalidArgument if item_count < 2 or truth is out of range.
std::vector<data::ItemId> build_candidates(data::ItemId truth, std::size_t item_count, std::size_t n_negatives,
                                           Rng& rng);

/// 1 + #(scores > truth) + #(other scores == truth): ties count against the truth.
std::size_t rank_of_truth(std::span<const double> scores, std::size_t truth_index = 0);

double hr_at_k(std::size_t rank, std::size_t k);
/// 1 / log2(rank + 1) inside the top k, else 0.
double ndcg_at_k(std::size_t rank, std::size_t k);

struct EvalConfig {
  model::Holdout holdout = model::Holdout::kTest;
  std::vector<std::size_t> ks{5, 10, 20};
  std::size_t n_negatives = 100;
  std::uint64_t seed = 42;
  bool parallel = true;
};

struct EvalReport {
  std::vector<std::size_t> ks;
  std::vector<double> hr;    // mean over users, aligned with ks
  std::vector<double> ndcg;
  std::vector<std::size_t> ranks;  // per user, indexed by compact user id
  std::size_t candidate_count = 0;  // per user list length
  bool reduced_candidates = false;  // catalogue too small for n_negatives
  std::uint64_t seed = 0;
  std::string variant;
  double wall_seconds = 0.0;

  double hr_at(std::size_t k) const;
  double ndcg_at(std::size_t k) const;
};

/// Scores `candidates` for the held-out item of `user` (higher is better).
using Scorer = std::function<std::vector<double>(data::UserId user, const std::vector<data::ItemId>& candidates)>;

/// Runs the protocol for every user with an arbitrary scorer. Per-user
/// candidate streams depend only on (seed, holdout, user), so the parallel
/// and serial schedules give identical reports (up to wall_seconds). The
/// scorer must be safe to call concurrently when config.parallel is set.
EvalReport evaluate_with_scorer(const data::PreparedDataset& ds, const EvalConfig& config, const Scorer& scorer);

/// Scorer that runs the model's f + g on the holdout episode.
Scorer model_scorer(const model::TeaModel& model, const data::PreparedDataset& ds, model::Holdout holdout);

EvalReport evaluate_all(const model::TeaModel& model, const data::PreparedDataset& ds, const EvalConfig& config);

/// JSON report: config echo, per-K metrics, rank histogram, wall clock.
void write_report_json(const EvalReport& report, const std::filesystem::path& path,
                       const std::map<std::string, std::string>& config);
/// Flat per-user CSV (user_id, rank) with the config echoed as '#' lines.
void write_rank_csv(const EvalReport& report, const data::PreparedDataset& ds, const std::filesystem::path& path,
                    const std::map<std::string, std::string>& config);

}  // namespace tea::eval
