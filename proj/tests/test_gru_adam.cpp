// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "tea/autodiff/adam.hpp"
#include "tea/autodiff/gru.hpp"
#include "tea/autodiff/init.hpp"
#include "tea/autodiff/ops.hpp"
#include "tea/error.hpp"

using namespace tea;
using namespace tea::ad;

namespace {

using Vec = std::vector<double>;

Vec matvec(const Tensor& m, const Vec& x) {
  Vec y(m.rows(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) y[r] += m.at(r, c) * x[c];
  return y;
}

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Gate-by-gate reference written straight from the GRU equations.
Vec gru_oracle(const ParameterStore& s, const GruBlock& b, const Vec& x, const Vec& h) {
  const std::size_t d = b.dim;
  Vec wzx = matvec(s.value(b.w_z), x), uzh = matvec(s.value(b.u_z), h);
  Vec wrx = matvec(s.value(b.w_r), x), urh = matvec(s.value(b.u_r), h);
  Vec z(d), r(d), rh(d), out(d);
  for (std::size_t i = 0; i < d; ++i) {
    z[i] = sig(wzx[i] + uzh[i] + s.value(b.b_z)[i]);
    r[i] = sig(wrx[i] + urh[i] + s.value(b.b_r)[i]);
    rh[i] = r[i] * h[i];
  }
  Vec whx = matvec(s.value(b.w_h), x), uhrh = matvec(s.value(b.u_h), rh);
  for (std::size_t i = 0; i < d; ++i) {
    const double cand = std::tanh(whx[i] + uhrh[i] + s.value(b.b_h)[i]);
    out[i] = z[i] * h[i] + (1.0 - z[i]) * cand;
  }
  return out;
}

Vec run_cell(const ParameterStore& s, const GruBlock& b, const Vec& x, const Vec& h) {
  Tape tape(Tape::Mode::kInference);
  GruWeights w = GruWeights::bind(tape, s, b);
  Var out = gru_cell(tape.constant(Tensor::vector(x)), tape.constant(Tensor::vector(h)), w);
  auto v = out.value().values();
  return Vec(v.begin(), v.end());
}

void zero_all(ParameterStore& s) {
  for (std::size_t i = 0; i < s.size(); ++i) s.value(ParamId{i}).fill(0.0);
}

}  // namespace

TEST(Gru, ZeroWeightsZeroStateIsFixedPoint) {
  ParameterStore s;
  Rng rng(1);
  GruBlock b = GruBlock::create(s, "gru", 3, rng);
  zero_all(s);
  for (double v : run_cell(s, b, {0.7, -1.0, 2.0}, {0, 0, 0})) EXPECT_EQ(v, 0.0);
}

TEST(Gru, ZeroWeightsHalveTheState) {
  ParameterStore s;
  Rng rng(2);
  GruBlock b = GruBlock::create(s, "gru", 3, rng);
  zero_all(s);
  Vec h{1.0, -4.0, 0.25};
  Vec out = run_cell(s, b, {0, 0, 0}, h);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(out[i], 0.5 * h[i]);
}

TEST(Gru, ThreeStepUnrollMatchesGateOracle) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    ParameterStore s;
    Rng rng(seed);
    const std::size_t d = 5;
    GruBlock b = GruBlock::create(s, "gru", d, rng);
    std::vector<Vec> xs(3, Vec(d));
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (auto& x : xs)
      for (double& v : x) v = u(rng);

    Tape tape(Tape::Mode::kInference);
    GruWeights w = GruWeights::bind(tape, s, b);
    Var h = tape.constant(Tensor(Shape{d}));
    Vec ref(d, 0.0);
    for (const Vec& x : xs) {
      h = gru_cell(tape.constant(Tensor::vector(x)), h, w);
      ref = gru_oracle(s, b, x, ref);
    }
    for (std::size_t i = 0; i < d; ++i) EXPECT_NEAR(h.value()[i], ref[i], 1e-10);
  }
}

TEST(Gru, DimensionMismatchThrows) {
  ParameterStore s;
  Rng rng(3);
  GruBlock b = GruBlock::create(s, "gru", 3, rng);
  Tape tape;
  GruWeights w = GruWeights::bind(tape, s, b);
  EXPECT_THROW(gru_cell(tape.constant(Tensor(Shape{4})), tape.constant(Tensor(Shape{3})), w), ShapeError);
  EXPECT_THROW(gru_cell(tape.constant(Tensor(Shape{3})), tape.constant(Tensor(Shape{2})), w), ShapeError);
}

TEST(Gru, FindRecoversCreatedBlock) {
  ParameterStore s;
  Rng rng(4);
  GruBlock b = GruBlock::create(s, "x.gru", 2, rng);
  GruBlock f = GruBlock::find(s, "x.gru");
  EXPECT_EQ(f.dim, 2u);
  EXPECT_EQ(f.u_h, b.u_h);
  EXPECT_THROW(GruBlock::find(s, "missing"), Error);
}

TEST(Init, BoundsRespected) {
  Rng rng(5);
  Tensor w = fan_in_uniform({30, 16}, 16, rng);
  Tensor e = uniform_tensor({100, 4}, kEmbeddingInitBound, rng);
  for (double v : w.values()) EXPECT_LE(std::abs(v), 0.25);
  for (double v : e.values()) EXPECT_LE(std::abs(v), 0.01);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  ParameterStore s;
  ParamId p = s.add("p", Tensor::vector({1.0, -2.0}));
  Adam opt(s, {});
  GradientMap g(s);
  opt.step(s, g);
  EXPECT_EQ(s.value(p)[0], 1.0);
  EXPECT_EQ(s.value(p)[1], -2.0);
  EXPECT_EQ(opt.state().t, 1u);
}

TEST(Adam, FirstStepMovesByLearningRateAgainstSign) {
  ParameterStore s;
  ParamId p = s.add("p", Tensor::vector({0.0, 0.0}));
  AdamConfig cfg;
  cfg.learning_rate = 0.01;
  Adam opt(s, cfg);
  GradientMap g(s);
  g[p][0] = 3.0;
  g[p][1] = -0.002;
  opt.step(s, g);
  EXPECT_NEAR(s.value(p)[0], -0.01, 1e-9);
  EXPECT_NEAR(s.value(p)[1], 0.01, 1e-7);
}

TEST(Adam, ThreeStepsMatchScalarRecurrence) {
  ParameterStore s;
  ParamId p = s.add("p", Tensor::scalar(0.5));
  AdamConfig cfg{0.05, 0.8, 0.95, 1e-6};
  Adam opt(s, cfg);
  GradientMap g(s);
  const double grads[3] = {0.3, -1.2, 0.7};
  double theta = 0.5, m = 0, v = 0;
  for (int t = 1; t <= 3; ++t) {
    g[p][0] = grads[t - 1];
    opt.step(s, g);
    m = cfg.beta1 * m + (1 - cfg.beta1) * grads[t - 1];
    v = cfg.beta2 * v + (1 - cfg.beta2) * grads[t - 1] * grads[t - 1];
    const double mh = m / (1 - std::pow(cfg.beta1, t));
    const double vh = v / (1 - std::pow(cfg.beta2, t));
    theta -= cfg.learning_rate * mh / (std::sqrt(vh) + cfg.epsilon);
    EXPECT_NEAR(s.value(p).item(), theta, 1e-12);
  }
  EXPECT_EQ(opt.state().t, 3u);
  EXPECT_EQ(opt.state().m[0].shape(), s.value(p).shape());
}

TEST(Adam, ShapeMismatchThrows) {
  ParameterStore s;
  s.add("p", Tensor::vector({1, 2}));
  Adam opt(s, {});
  ParameterStore other;
  other.add("q", Tensor::vector({1, 2, 3}));
  GradientMap g(other);
  EXPECT_THROW(opt.step(s, g), ShapeError);
}
