// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <set>

#include "tea/data/synthetic.hpp"
#include "tea/error.hpp"
#include "tea/eval/evaluation.hpp"
#include "omp_threads.hpp"
#include "tea/training/checkpoint.hpp"
#include "tea/training/trainer.hpp"
#include "temp_dir.hpp"

using namespace tea;
using namespace tea::training;

namespace {

data::PreparedDataset toy_dataset() {
  data::DatasetOptions o;
  o.preprocess.min_actions = 1;
  return data::prepare_corpus(data::toy_cycle_corpus(10, 20, 12), o);
}

data::PreparedDataset small_social_dataset(std::uint64_t seed = 7) {
  data::SyntheticOptions s;
  s.users = 24;
  s.items = 30;
  s.length = 10;
  s.seed = seed;
  data::DatasetOptions o;
  o.preprocess.min_actions = 1;
  o.seq_len = 6;
  return data::prepare_corpus(data::cyclic_corpus(s), o);
}

TrainConfig small_config() {
  TrainConfig c;
  c.dim = 8;
  c.batch_size = 32;
  c.n_negatives = 5;
  c.max_epochs = 3;
  c.eval_negatives = 20;
  return c;
}

bool same_store(const ad::ParameterStore& a, const ad::ParameterStore& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto x = a.value(ad::ParamId{i}).values(), y = b.value(ad::ParamId{i}).values();
    if (a.name(ad::ParamId{i}) != b.name(ad::ParamId{i}) || !std::equal(x.begin(), x.end(), y.begin(), y.end()))
      return false;
  }
  return true;
}

}  // namespace

// ---- early stopping --------------------------------------------------------------

TEST(EarlyStop, PlateauStopsAfterPatience) {
  auto d = early_stop({0.5, 0.6, 0.6, 0.6}, 2);
  EXPECT_TRUE(d.stop);
  EXPECT_EQ(d.best_epoch, 2u);
  EXPECT_FALSE(early_stop({0.5, 0.6, 0.6}, 2).stop);
}

TEST(EarlyStop, StrictlyIncreasingNeverStops) {
  std::vector<double> h;
  for (int e = 0; e < 40; ++e) {
    h.push_back(0.01 * e);
    auto d = early_stop(h, 1);
    EXPECT_FALSE(d.stop);
    EXPECT_EQ(d.best_epoch, h.size());
  }
}

TEST(EarlyStop, TiesKeepEarliestEpoch) {
  EXPECT_EQ(early_stop({0.3, 0.7, 0.2, 0.7, 0.7}, 10).best_epoch, 2u);
  EXPECT_EQ(early_stop({}, 3).best_epoch, 0u);
}

// ---- configuration and units ----------------------------------------------------

TEST(TrainConfig, DefaultsAndValidation) {
  TrainConfig c;
  EXPECT_EQ(c.dim, 64u);
  EXPECT_EQ(c.batch_size, 1024u);
  EXPECT_EQ(c.dropout, 0.5);
  EXPECT_EQ(c.gamma, 5e-4);
  EXPECT_EQ(c.n_negatives, 50u);
  EXPECT_EQ(c.learning_rate, 0.01);
  EXPECT_EQ(c.clip_norm, 5.0);
  EXPECT_NO_THROW(c.validate());
  auto bad = c;
  bad.dropout = 1.0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = c;
  bad.dim = 0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = c;
  bad.learning_rate = -1;
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(TrainingUnits, AllStepsOrLastOnly) {
  auto ds = toy_dataset();
  auto all = training_units(ds, true);
  auto last = training_units(ds, false);
  std::size_t expected = 0;
  for (const auto& r : ds.users) expected += r.sequence.size() - 1;
  EXPECT_EQ(all.size(), expected);
  EXPECT_EQ(last.size(), ds.n_users);
  for (const auto& u : last) EXPECT_EQ(u.step, ds.users[u.user].sequence.size() - 1);
  for (const auto& u : all) {
    EXPECT_GE(u.step, 1u);
    EXPECT_LT(u.step, ds.users[u.user].sequence.size());
  }
  EXPECT_DOUBLE_EQ(crf_user_scale(all), static_cast<double>(expected) / ds.n_users);
  EXPECT_DOUBLE_EQ(crf_user_scale(last), 1.0);
}

TEST(ClipGlobalNorm, RescalesOnlyAboveThreshold) {
  ad::ParameterStore s;
  s.add("a", ad::Tensor::vector({3, 0}));
  s.add("b", ad::Tensor::vector({0, 4}));
  ad::GradientMap g(s);
  g[ad::ParamId{0}][0] = 3;
  g[ad::ParamId{1}][1] = 4;
  EXPECT_DOUBLE_EQ(clip_global_norm(g, 10.0), 5.0);
  EXPECT_DOUBLE_EQ(g.global_norm(), 5.0);
  EXPECT_DOUBLE_EQ(clip_global_norm(g, 1.0), 5.0);
  EXPECT_NEAR(g.global_norm(), 1.0, 1e-15);
  EXPECT_NEAR(g[ad::ParamId{0}][0], 0.6, 1e-15);
}

// ---- batch gradients ------------------------------------------------------------

TEST(BatchGradient, ParallelShardsMatchSerialReference) {
  fixtures::ScopedThreads threads(4);
  auto ds = small_social_dataset();
  for (auto v : {model::Variant::kTeaS, model::Variant::kTeaA}) {
    auto cfg = small_config();
    cfg.variant = v;
    auto m = model::TeaModel::create(model_config(ds, cfg), 3);
    auto units = training_units(ds, true);
    BatchSpec spec{{units.begin(), units.begin() + 40}, 2, 1};
    ad::GradientMap a(m.parameters()), b(m.parameters());
    auto ra = batch_gradient(m, ds, spec, cfg, a);
    auto rb = batch_gradient_serial(m, ds, spec, cfg, b);
    EXPECT_NEAR(ra.loss, rb.loss, 1e-12);
    EXPECT_EQ(ra.steps, 40u);
    for (std::size_t i = 0; i < m.parameters().size(); ++i) {
      const auto& x = a[ad::ParamId{i}];
      const auto& y = b[ad::ParamId{i}];
      for (std::size_t k = 0; k < x.size(); ++k) ASSERT_NEAR(x[k], y[k], 1e-12) << m.parameters().name(ad::ParamId{i});
    }
    // The shard count is part of the reduction order, not of the result.
    auto cfg1 = cfg;
    cfg1.shards = 1;
    ad::GradientMap c(m.parameters());
    EXPECT_NEAR(batch_gradient(m, ds, spec, cfg1, c).loss, ra.loss, 1e-12);
  }
}

TEST(BatchGradient, UnitOrderDoesNotMatter) {
  auto ds = small_social_dataset();
  auto cfg = small_config();
  auto m = model::TeaModel::create(model_config(ds, cfg), 3);
  auto units = training_units(ds, true);
  std::vector<TrainingUnit> first(units.begin(), units.begin() + 30);
  std::vector<TrainingUnit> reversed(first.rbegin(), first.rend());
  ad::GradientMap a(m.parameters()), b(m.parameters());
  auto ra = batch_gradient(m, ds, {first, 1, 1}, cfg, a);
  auto rb = batch_gradient(m, ds, {reversed, 1, 1}, cfg, b);
  EXPECT_EQ(ra.loss, rb.loss);
  EXPECT_EQ(a.global_norm(), b.global_norm());
}

// ---- optimizer steps ------------------------------------------------------------

TEST(OptimizerStep, ChangesOnlyParametersAndLeavesDataUntouched) {
  auto ds = small_social_dataset();
  const auto snapshot = ds;
  auto cfg = small_config();
  auto m = model::TeaModel::create(model_config(ds, cfg), 1);
  const auto before = m.parameters();
  auto units = training_units(ds, true);
  ad::Adam adam(m.parameters(), {cfg.learning_rate, 0.9, 0.999, 1e-8});
  ad::GradientMap g(m.parameters());
  optimizer_step(m, ds, {{units.begin(), units.begin() + 20}, 1, 1}, cfg, crf_user_scale(units), adam, g);
  EXPECT_FALSE(same_store(before, m.parameters()));
  ASSERT_EQ(before.size(), m.parameters().size());
  for (std::size_t i = 0; i < before.size(); ++i)
    EXPECT_EQ(before.value(ad::ParamId{i}).shape(), m.parameters().value(ad::ParamId{i}).shape());
  for (std::size_t u = 0; u < ds.n_users; ++u) {
    EXPECT_EQ(ds.users[u].sequence, snapshot.users[u].sequence);
    EXPECT_EQ(ds.users[u].buckets, snapshot.users[u].buckets);
    EXPECT_EQ(ds.users[u].walks, snapshot.users[u].walks);
  }
  EXPECT_EQ(ds.social.neighbors, snapshot.social.neighbors);
}

TEST(OptimizerStep, RepeatedBatchLossIsMostlyNonIncreasing) {
  auto ds = toy_dataset();
  auto cfg = small_config();
  cfg.dropout = 0.0;
  cfg.learning_rate = 1e-3;
  auto units = training_units(ds, true);
  const BatchSpec spec{units, 1, 1};
  const double kappa = crf_user_scale(units);
  for (std::uint64_t seed : {0, 5, 9}) {
    auto m = model::TeaModel::create(model_config(ds, cfg), seed);
    ad::Adam adam(m.parameters(), {cfg.learning_rate, 0.9, 0.999, 1e-8});
    ad::GradientMap g(m.parameters());
    std::vector<double> totals;
    for (int k = 0; k < 51; ++k) totals.push_back(optimizer_step(m, ds, spec, cfg, kappa, adam, g).total);
    int non_increasing = 0;
    for (std::size_t k = 1; k < totals.size(); ++k) non_increasing += totals[k] <= totals[k - 1];
    EXPECT_GE(non_increasing, 45) << "seed " << seed;
    EXPECT_LT(totals.back(), 0.9 * totals.front()) << "seed " << seed;
  }
}

TEST(OptimizerStep, NonFiniteLossReportsEpochBatchAndParameter) {
  auto ds = toy_dataset();
  auto cfg = small_config();
  auto m = model::TeaModel::create(model_config(ds, cfg), 5);
  auto& q = m.parameters().value(*m.parameters().find("emb.item"));
  q[0] = std::numeric_limits<double>::quiet_NaN();
  auto units = training_units(ds, true);
  ad::Adam adam(m.parameters(), {});
  ad::GradientMap g(m.parameters());
  try {
    optimizer_step(m, ds, {units, 4, 7}, cfg, 1.0, adam, g);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("epoch 4"), std::string::npos) << what;
    EXPECT_NE(what.find("batch 7"), std::string::npos) << what;
    EXPECT_NE(what.find("emb.item"), std::string::npos) << what;
  }
}

// ---- full runs --------------------------------------------------------------------

TEST(Train, ZeroEpochsReturnsInitialParameters) {
  auto ds = toy_dataset();
  auto cfg = small_config();
  cfg.max_epochs = 0;
  auto r = train(ds, cfg);
  EXPECT_TRUE(r.curve.empty());
  EXPECT_TRUE(same_store(r.model.parameters(), model::TeaModel::create(model_config(ds, cfg), cfg.seed).parameters()));
}

TEST(Train, SameSeedIsBitIdentical) {
  fixtures::ScopedThreads threads(4);
  auto ds = small_social_dataset();
  auto cfg = small_config();
  auto a = train(ds, cfg);
  auto b = train(ds, cfg);
  ASSERT_EQ(a.curve.size(), b.curve.size());
  for (std::size_t e = 0; e < a.curve.size(); ++e) {
    EXPECT_EQ(a.curve[e].train_loss, b.curve[e].train_loss);
    EXPECT_EQ(a.curve[e].val_ndcg10, b.curve[e].val_ndcg10);
  }
  EXPECT_TRUE(same_store(a.model.parameters(), b.model.parameters()));
  auto serial = cfg;
  serial.parallel = false;
  auto c = train(ds, serial);
  for (std::size_t e = 0; e < a.curve.size(); ++e) EXPECT_EQ(a.curve[e].train_loss, c.curve[e].train_loss);
  EXPECT_TRUE(same_store(a.model.parameters(), c.model.parameters()));
  cfg.seed = 43;
  EXPECT_NE(train(ds, cfg).curve[0].train_loss, a.curve[0].train_loss);
}

TEST(Train, ToyCycleLossDropsBelowAQuarter) {
  auto ds = toy_dataset();
  TrainConfig cfg;
  cfg.max_epochs = 30;
  cfg.patience = 30;
  std::vector<EpochRecord> seen;
  auto r = train(ds, cfg, [&](const EpochRecord& e) { seen.push_back(e); });
  ASSERT_EQ(r.curve.size(), 30u);
  EXPECT_EQ(seen.size(), 30u);
  EXPECT_LT(r.curve.back().train_loss, 0.25 * r.curve.front().train_loss)
      << r.curve.front().train_loss << " -> " << r.curve.back().train_loss;
}

TEST(Train, ReturnsBestValidationParametersAndStopsEarly) {
  auto ds = small_social_dataset();
  auto cfg = small_config();
  cfg.max_epochs = 12;
  cfg.patience = 1;
  auto r = train(ds, cfg);
  std::vector<double> ndcg;
  for (const auto& e : r.curve) ndcg.push_back(e.val_ndcg10);
  EXPECT_EQ(r.best_epoch, early_stop(ndcg, cfg.patience).best_epoch);
  if (r.stopped_early) EXPECT_LT(r.curve.size(), cfg.max_epochs);
  eval::EvalConfig v;
  v.holdout = model::Holdout::kValidation;
  v.ks = {10};
  v.n_negatives = cfg.eval_negatives;
  v.seed = cfg.seed;
  EXPECT_EQ(eval::evaluate_all(r.model, ds, v).ndcg_at(10), r.curve[r.best_epoch - 1].val_ndcg10);
}

// ---- checkpoints ------------------------------------------------------------------

TEST(Checkpoint, RoundTrip) {
  auto ds = small_social_dataset();
  auto cfg = small_config();
  cfg.variant = model::Variant::kTeaA;
  auto m = model::TeaModel::create(model_config(ds, cfg), 9);
  auto dir = fixtures::temp_dir("ckpt");
  save_checkpoint(dir / "m.ckpt", m, {{"lr", "0.01"}, {"dim", "999"}}, 7);
  auto c = load_checkpoint(dir / "m.ckpt");
  EXPECT_EQ(c.epoch, 7u);
  EXPECT_EQ(c.config.at("lr"), "0.01");
  EXPECT_EQ(c.config.at("dim"), "8");
  EXPECT_EQ(c.config.at("variant"), "tea-a");
  EXPECT_EQ(c.model.config().variant, model::Variant::kTeaA);
  EXPECT_TRUE(same_store(c.model.parameters(), m.parameters()));
  std::ifstream in(dir / "m.ckpt", std::ios::binary);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "TEA-CKPT-1");
}

TEST(Checkpoint, CorruptTruncatedAndMissing) {
  auto ds = toy_dataset();
  auto m = model::TeaModel::create(model_config(ds, small_config()), 1);
  auto dir = fixtures::temp_dir("ckpt_bad");
  EXPECT_THROW(load_checkpoint(dir / "absent.ckpt"), MissingInput);

  save_checkpoint(dir / "ok.ckpt", m, {}, 1);
  std::ifstream in(dir / "ok.ckpt", std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  std::string bad = bytes;
  bad[4] = 'X';
  std::ofstream(dir / "header.ckpt", std::ios::binary) << bad;
  try {
    load_checkpoint(dir / "header.ckpt");
    FAIL() << "expected Incompatible";
  } catch (const Incompatible& e) {
    EXPECT_NE(std::string(e.what()).find("TEA-CKPT-1"), std::string::npos);
  }
  std::ofstream(dir / "short.ckpt", std::ios::binary) << bytes.substr(0, bytes.size() / 2);
  EXPECT_THROW(load_checkpoint(dir / "short.ckpt"), Incompatible);
}
