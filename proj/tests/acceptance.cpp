// SPDX-License-Identifier: Apache-2.0
// Acceptance run: one PASS/FAIL line per criterion; exit status 1 if any
// gating criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gradient_suite.hpp"
#include "json.hpp"
#include "tea/cli/cli.hpp"
#include "tea/data/synthetic.hpp"
#include "tea/eval/evaluation.hpp"
#include "tea/objective/objective.hpp"
#include "tea/training/trainer.hpp"
#include "temp_dir.hpp"

namespace fs = std::filesystem;
using namespace tea;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  bool skipped = false;
};

struct Criterion {
  int id;
  std::string name;
  double limit_seconds;
  bool gating;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---- 1: gradients ----------------------------------------------------------------

Outcome gradient_suite() {
  double worst = 0;
  std::string where;
  std::size_t checked = 0, skipped = 0, failures = 0;
  auto absorb = [&](const std::string& name, const gradcheck::GradCheck& c) {
    checked += c.checked;
    skipped += c.skipped;
    if (c.max_rel >= 1e-4 || c.checked == 0) ++failures;
    if (c.max_rel > worst) worst = c.max_rel, where = name + " " + c.worst;
  };
  const model::Variant variants[] = {model::Variant::kTeaS, model::Variant::kTeaA, model::Variant::kTeaRS,
                                     model::Variant::kTeaRA};
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    for (const auto& c : gradcheck::primitive_cases(seed)) absorb(c.name, c.check);
    for (auto v : variants) absorb("loss/" + model::to_string(v), gradcheck::composed_loss_case(v, seed));
  }
  const bool kinks_ok = skipped * 100 <= checked + skipped;
  return {failures == 0 && kinks_ok,
          "100 seeds, " + std::to_string(checked) + " entries, max rel err " + fmt("%.2e", worst) + ", " +
              std::to_string(skipped) + " kink entries skipped" + (failures ? ", worst at " + where : "")};
}

// ---- 2: exact conditional --------------------------------------------------------

Outcome conditional_oracle() {
  std::mt19937_64 rng(2024);
  double worst_sum = 0, worst_p = 0;
  for (int draw = 0; draw < 100; ++draw) {
    const std::size_t n_items = std::uniform_int_distribution<std::size_t>(2, 50)(rng);
    model::ModelConfig c;
    c.dim = 4;
    c.n_users = 3;
    c.n_items = n_items;
    c.seq_len = 3;
    c.variant = draw % 2 ? model::Variant::kTeaA : model::Variant::kTeaS;
    auto m = model::TeaModel::create(c, static_cast<std::uint64_t>(draw));
    fixtures::randomize(m.parameters(), rng(), 1.5);
    std::uniform_int_distribution<data::ItemId> item(0, static_cast<data::ItemId>(n_items - 1));
    model::Episode ep;
    ep.user = 0;
    ep.history = {item(rng), item(rng), item(rng)};
    ep.buckets = {{item(rng), item(rng)}, {item(rng)}, {}};
    ep.walks = {{{1, 10}}, {{1, 11}, {2, 12}}, {}};
    ep.social = {1, 2};
    model::Step step{2, {}};
    for (data::ItemId v = 0; v < n_items; ++v) step.candidates.push_back(v);
    ep.steps = {step};
    ad::Tape tape(ad::Tape::Mode::kInference);
    const auto scores = model::score_episode(tape, m, ep).total.value().values();
    const auto p = objective::exact_conditional(scores);
    long double z = 0, total = 0;
    for (double s : scores) z += std::exp(static_cast<long double>(s));
    for (std::size_t v = 0; v < n_items; ++v) {
      const double brute = static_cast<double>(std::exp(static_cast<long double>(scores[v])) / z);
      worst_p = std::max(worst_p, std::abs(p[v] - brute));
      total += p[v];
    }
    worst_sum = std::max(worst_sum, static_cast<double>(std::abs(total - 1.0L)));
  }
  return {worst_sum <= 1e-8 && worst_p <= 1e-12,
          "100 draws, |V| in [2, 50]: max |sum - 1| " + fmt("%.1e", worst_sum) + ", max |p - enumeration| " +
              fmt("%.1e", worst_p)};
}

// ---- 3: loss sanity --------------------------------------------------------------

Outcome loss_sanity() {
  std::vector<objective::ScoredStep> zeros(4, objective::ScoredStep{0.0, std::vector<double>(50, 0.0)});
  const double zero_err = std::abs(objective::sequence_loss(zeros, 50) - 51 * std::numbers::ln2);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-6, 6);
  double worst = 0;
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<objective::ScoredStep> batch(1 + rep % 7);
    long double total = 0;
    for (auto& s : batch) {
      s.positive = u(rng);
      s.negatives.resize(50);
      for (double& n : s.negatives) n = u(rng);
      long double term = std::log(1.0L / (1.0L + std::exp(-static_cast<long double>(s.positive))));
      for (double n : s.negatives) term += std::log(1.0L / (1.0L + std::exp(static_cast<long double>(n))));
      total += term;
    }
    const double oracle = static_cast<double>(-total / static_cast<long double>(batch.size()));
    worst = std::max(worst, std::abs(objective::sequence_loss(batch, 50) - oracle));
  }
  return {zero_err <= 1e-9 && worst <= 1e-10,
          "zero scores off by " + fmt("%.1e", zero_err) + " from 51 ln 2, max oracle gap " + fmt("%.1e", worst) +
              " over 200 batches"};
}

// ---- 4: metrics ------------------------------------------------------------------

Outcome metric_suite() {
  bool units = eval::hr_at_k(1, 10) == 1.0 && eval::ndcg_at_k(1, 10) == 1.0 && eval::hr_at_k(3, 10) == 1.0 &&
               eval::ndcg_at_k(3, 10) == 0.5 && eval::hr_at_k(11, 10) == 0.0 && eval::ndcg_at_k(11, 10) == 0.0;
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> grid(-4096, 4096);
  std::size_t order_violations = 0, shift_violations = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    // Dyadic scores so that adding a constant is exact in floating point.
    std::vector<double> scores(101), shifted(101);
    const double c = grid(rng) / 8.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      scores[i] = grid(rng) / 1024.0;
      shifted[i] = scores[i] + c;
    }
    const auto rank = eval::rank_of_truth(scores);
    shift_violations += rank != eval::rank_of_truth(shifted);
    for (std::size_t k : {1, 5, 10, 20, 50, 101}) order_violations += eval::ndcg_at_k(rank, k) > eval::hr_at_k(rank, k);
  }
  return {units && order_violations == 0 && shift_violations == 0,
          std::string("unit values ") + (units ? "exact" : "WRONG") + ", NDCG > HR in " +
              std::to_string(order_violations) + " of 6000, shift changed rank in " +
              std::to_string(shift_violations) + " of 1000"};
}

// ---- 5: synthetic learnability ---------------------------------------------------

double test_hr10(const training::TrainResult& r, const data::PreparedDataset& ds, std::uint64_t seed) {
  eval::EvalConfig e;
  e.holdout = model::Holdout::kTest;
  e.ks = {10};
  e.n_negatives = 49;
  e.seed = seed;
  return eval::evaluate_all(r.model, ds, e).hr_at(10);
}

Outcome learnability() {
  data::SyntheticOptions so;  // 200 users, 50 items
  training::TrainConfig tc;
  tc.dim = 16;
  tc.batch_size = 128;
  tc.max_epochs = 50;
  tc.eval_negatives = 49;

  const auto cyclic = data::prepare_corpus(data::cyclic_corpus(so), {});
  tc.variant = model::Variant::kTeaS;
  const double hr_cyclic = test_hr10(training::train(cyclic, tc), cyclic, tc.seed);

  const auto follower = data::prepare_corpus(data::follower_corpus(so), {});
  const auto stripped = data::strip_graph_inputs(follower);
  const double hr_full = test_hr10(training::train(follower, tc), follower, tc.seed);
  tc.variant = model::Variant::kTeaRS;
  const double hr_transition = test_hr10(training::train(stripped, tc), stripped, tc.seed);

  return {hr_cyclic >= 0.9 && hr_full - hr_transition >= 0.10,
          "cyclic TEA-S HR@10 " + fmt("%.3f", hr_cyclic) + " (need >= 0.9); follower TEA-S " + fmt("%.3f", hr_full) +
              " vs transition-only TEA-RS " + fmt("%.3f", hr_transition) + " (need gap >= 0.10)"};
}

// ---- 6: determinism --------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int tea(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  if (code != 0) std::fprintf(stderr, "tea %s: %s", args.front().c_str(), err.str().c_str());
  return code;
}

Outcome determinism() {
  const auto dir = fixtures::temp_dir("acceptance_determinism");
  if (tea({"synth", "--kind", "toy", "--users", "10", "--items", "20", "--length", "12", "--out",
           (dir / "raw").string()}) != 0 ||
      tea({"prepare", "--interactions", (dir / "raw/interactions.tsv").string(), "--out", (dir / "data").string(),
           "--min-actions", "1"}) != 0) {
    return {false, "could not prepare toy data"};
  }
  struct Artifacts {
    std::string curve, report, ranks;
  };
  auto once = [&]() -> std::optional<Artifacts> {
    if (tea({"train", "--data", (dir / "data").string(), "--out", (dir / "run").string()}) != 0) return {};
    if (tea({"eval", "--data", (dir / "data").string(), "--checkpoint", (dir / "run/model.ckpt").string()}) != 0)
      return {};
    auto report = nlohmann::json::parse(slurp(dir / "run/eval_test.json"));
    report.erase("wall_clock_seconds");
    return Artifacts{slurp(dir / "run/curve.csv"), report.dump(), slurp(dir / "run/eval_test_ranks.csv")};
  };
  const auto a = once();
  const auto b = once();
  if (!a || !b) return {false, "a train or eval run failed"};
  const bool same = a->curve == b->curve && a->report == b->report && a->ranks == b->ranks;
  return {same, "curve.csv " + std::string(a->curve == b->curve ? "identical" : "DIFFERS") + ", metric JSON " +
                    (a->report == b->report ? "identical" : "DIFFERS") + " (wall clock excluded), rank CSV " +
                    (a->ranks == b->ranks ? "identical" : "DIFFERS")};
}

// ---- 7: random baseline ----------------------------------------------------------

Outcome random_baseline() {
  data::SyntheticOptions so;
  so.users = 1200;
  so.items = 300;
  so.length = 8;
  so.seed = 11;
  const auto ds = data::prepare_corpus(data::random_corpus(so), {});
  eval::EvalConfig e;
  e.ks = {10};
  e.n_negatives = 100;
  e.seed = 5;
  const auto report = eval::evaluate_with_scorer(ds, e, [](data::UserId user, const std::vector<data::ItemId>& c) {
    Rng rng = derive_rng(99, {user});
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> s(c.size());
    for (double& x : s) x = u(rng);
    return s;
  });
  const double hr = report.hr_at(10);
  return {report.ranks.size() >= 1000 && report.candidate_count == 101 && std::abs(hr - 0.099) <= 0.02,
          std::to_string(report.ranks.size()) + " users, " + std::to_string(report.candidate_count) +
              " candidates: HR@10 " + fmt("%.4f", hr) + " (expected 10/101 = 0.0990 +- 0.02)"};
}

// ---- 8: optional Epinions smoke run ----------------------------------------------

Outcome epinions_smoke() {
  const char* root = std::getenv("TEA_EPINIONS_DIR");
  if (root == nullptr) return {true, "TEA_EPINIONS_DIR not set", true};
  const fs::path dir(root);
  auto log = data::load_interactions((dir / "interactions.tsv").string());
  std::erase_if(log.interactions, [](const data::Interaction& x) { return x.user >= 5000; });
  const data::DatasetOptions opts;
  const auto filtered = data::preprocess(log, opts.preprocess);
  auto social = fs::exists(dir / "social.tsv") ? data::load_social_edges((dir / "social.tsv").string(), filtered.users)
                                               : data::make_social_graph(filtered.users.size(), {});
  const auto ds = data::prepare_dataset(filtered, std::move(social), opts);
  training::TrainConfig tc;
  tc.max_epochs = 20;
  const double hr = test_hr10(training::train(ds, tc), ds, tc.seed);
  return {hr >= 0.20, std::to_string(ds.n_users) + " users after filtering: test HR@10 " + fmt("%.3f", hr) +
                          " (need >= 0.20, chance 0.099)"};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "gradient suite", 120, true, gradient_suite},
      {2, "exact conditional oracle", 60, true, conditional_oracle},
      {3, "loss sanity", 60, true, loss_sanity},
      {4, "metric suite", 60, true, metric_suite},
      {5, "synthetic learnability", 600, true, learnability},
      {6, "determinism", 300, true, determinism},
      {7, "random-baseline calibration", 60, true, random_baseline},
      {8, "Epinions smoke run (optional)", 1800, false, epinions_smoke},
  };
  bool all = true;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.limit_seconds;
    const bool pass = o.pass && in_time;
    const char* tag = o.skipped ? "SKIP" : pass ? "PASS" : "FAIL";
    std::printf("%s %d %s: %s; %.1f s (limit %.0f s)%s\n", tag, c.id, c.name.c_str(), o.detail.c_str(), secs,
                c.limit_seconds, c.gating ? "" : ", not gating");
    std::fflush(stdout);
    if (c.gating && !pass) all = false;
  }
  return all ? 0 : 1;
}
