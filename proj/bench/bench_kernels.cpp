// SPDX-License-Identifier: Apache-2.0
// Serial reference vs OpenMP schedule for each parallel kernel. The range
// argument is the OpenMP team size; 0 selects the serial reference.
#include <benchmark/benchmark.h>
#include <omp.h>

#include <sstream>

#include "tea/data/synthetic.hpp"
#include "tea/eval/evaluation.hpp"
#include "tea/training/trainer.hpp"

using namespace tea;

namespace {

data::SyntheticOptions corpus_options() {
  data::SyntheticOptions o;
  o.users = 400;
  o.items = 120;
  o.length = 30;
  return o;
}

const data::PreparedDataset& dataset() {
  static const auto ds = data::prepare_corpus(data::cyclic_corpus(corpus_options()), {});
  return ds;
}

training::TrainConfig train_config() {
  training::TrainConfig c;
  c.dim = 32;
  return c;
}

const model::TeaModel& trained_shape_model() {
  static const auto m = model::TeaModel::create(training::model_config(dataset(), train_config()), 1);
  return m;
}

void set_team(const benchmark::State& state) {
  if (state.range(0) > 0) omp_set_num_threads(static_cast<int>(state.range(0)));
}

void BM_BatchGradient(benchmark::State& state) {
  set_team(state);
  const auto& ds = dataset();
  const auto cfg = train_config();
  const auto& m = trained_shape_model();
  auto units = training::training_units(ds, true);
  units.resize(std::min<std::size_t>(units.size(), 512));
  const training::BatchSpec spec{units, 1, 1};
  ad::GradientMap g(m.parameters());
  for (auto _ : state) {
    g.zero();
    auto r = state.range(0) == 0 ? training::batch_gradient_serial(m, ds, spec, cfg, g)
                                 : training::batch_gradient(m, ds, spec, cfg, g);
    benchmark::DoNotOptimize(r.loss);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(units.size()));
}

void BM_Evaluate(benchmark::State& state) {
  set_team(state);
  eval::EvalConfig e;
  e.parallel = state.range(0) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(eval::evaluate_all(trained_shape_model(), dataset(), e).hr_at(10));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(dataset().n_users));
}

struct Prepared {
  data::InteractionLog log;
  data::PreparedDataset ds;
  std::vector<data::UserSplit> splits;
};

const Prepared& prepared() {
  static const Prepared p = [] {
    const auto corpus = data::cyclic_corpus(corpus_options());
    std::istringstream in(corpus.interactions_tsv), soc(corpus.social_tsv);
    Prepared out;
    out.log = data::preprocess(data::parse_interactions(in, "bench"), {});
    out.ds = data::prepare_dataset(out.log, data::parse_social_edges(soc, "bench", out.log.users), {});
    out.splits = data::leave_one_out_split(out.log.interactions, out.ds.n_users);
    return out;
  }();
  return p;
}

void BM_NeighborBuckets(benchmark::State& state) {
  set_team(state);
  auto ds = prepared().ds;
  for (auto _ : state) {
    data::build_neighbor_item_buckets(ds, prepared().splits, state.range(0) != 0);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(ds.n_users));
}

void BM_Walks(benchmark::State& state) {
  set_team(state);
  auto ds = prepared().ds;
  for (auto _ : state) {
    data::extract_time_restricted_walks(ds, prepared().splits, state.range(0) != 0);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(ds.n_users));
}

}  // namespace

BENCHMARK(BM_BatchGradient)->ArgName("threads")->Arg(0)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Evaluate)->ArgName("threads")->Arg(0)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_NeighborBuckets)->ArgName("threads")->Arg(0)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Walks)->ArgName("threads")->Arg(0)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
