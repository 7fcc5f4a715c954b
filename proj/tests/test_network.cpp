// Copyright 2026 The cdhwr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>

#include <gtest/gtest.h>

#include "cdhwr/gradcheck.hpp"
#include "cdhwr/network.hpp"
#include "cdhwr/selftest.hpp"

using namespace cdhwr;

namespace {

Tensor<float> random_input(std::size_t n, const HwrcnetConfig& c, Rng& rng) {
  Tensor<float> x(Shape{n, c.input_h, c.input_w, 1});
  for (auto& v : x.data()) v = static_cast<float>(rng.uniform());
  return x;
}

std::vector<float> flat(const Tensor<float>& t) { return {t.data().begin(), t.data().end()}; }

}  // namespace

TEST(Geometry, Table1) {
  const HwrcnetConfig c = HwrcnetConfig::table1();
  const Geometry g = c.validate();
  EXPECT_EQ(g.time_steps, 32u);
  EXPECT_EQ(g.features, 256u);

  Hwrcnet<float> m = init_hwrcnet<float>(c, 1);
  Rng rng(2);
  Tape<float> tape;
  ParamVars p = bind_params(tape, m, false);
  Var x = tape.constant(random_input(2, c, rng));
  Var feats = cnn_forward(tape, m, p, x, Mode::kEval);
  EXPECT_EQ(tape.shape(feats), (Shape{2, 32, 256}));
  Var lp = model_forward(tape, m, p, x, Mode::kEval);
  ASSERT_EQ(tape.shape(lp), (Shape{2, 32, 80}));
  const Tensor<float>& v = tape.value(lp);
  for (std::size_t row = 0; row < 64; ++row) {
    double s = 0.0;
    for (std::size_t k = 0; k < 80; ++k) s += std::exp(static_cast<double>(v[row * 80 + k]));
    EXPECT_LT(std::abs(std::log(s)), 1e-5);
  }
}

TEST(Geometry, ParameterCount) {
  // conv 832 + 51264 + 73856 + 147584 + 295168, bn 256,
  // two lstm directions 2 * 525312, projection 41040
  EXPECT_EQ(init_hwrcnet<float>(HwrcnetConfig::table1(), 1).parameter_count(), 1660624u);
}

TEST(Geometry, WrongInputShapeRejected) {
  Hwrcnet<float> m = init_hwrcnet<float>(HwrcnetConfig::tiny(), 1);
  Tape<float> tape;
  ParamVars p = bind_params(tape, m, false);
  Var x = tape.constant(Tensor<float>(Shape{1, 8, 16, 1}));
  EXPECT_THROW(model_forward(tape, m, p, x, Mode::kEval), ShapeError);
}

TEST(Config, ValidateRejects) {
  HwrcnetConfig c = HwrcnetConfig::table1();
  c.stages[0].pool_h = 3;
  EXPECT_THROW(c.validate(), ShapeError);
  c = HwrcnetConfig::table1();
  c.stages[4].pool_w = 1;
  EXPECT_THROW(c.validate(), ShapeError);
  c = HwrcnetConfig::table1();
  c.expected_time_steps = 16;
  EXPECT_THROW(c.validate(), ShapeError);
  c = HwrcnetConfig::table1();
  c.num_classes = 1;
  EXPECT_THROW(c.validate(), ShapeError);
  c = HwrcnetConfig::table1();
  c.stages[1].kernel = 4;
  EXPECT_THROW(c.validate(), ShapeError);
}

TEST(Config, JsonRoundTrip) {
  for (const HwrcnetConfig& c : {HwrcnetConfig::table1(31), HwrcnetConfig::tiny()}) {
    EXPECT_EQ(HwrcnetConfig::from_json(c.to_json()), c);
  }
}

TEST(Init, SeededAndForgetBias) {
  const auto a = init_hwrcnet<float>(HwrcnetConfig::tiny(), 5);
  const auto b = init_hwrcnet<float>(HwrcnetConfig::tiny(), 5);
  const auto c = init_hwrcnet<float>(HwrcnetConfig::tiny(), 6);
  EXPECT_EQ(a.params, b.params);
  EXPECT_NE(a.params.at("conv1.kernel"), c.params.at("conv1.kernel"));
  for (float v : a.params.at("conv2.kernel").data()) EXPECT_LE(std::abs(v), 0.2f);
  const Tensor<float>& bias = a.params.at("lstm_fw.bias");
  const std::size_t h = HwrcnetConfig::tiny().lstm_hidden;
  for (std::size_t k = 0; k < 4 * h; ++k) EXPECT_EQ(bias[k], (k >= h && k < 2 * h) ? 1.0f : 0.0f);
}

TEST(Cnn, ZeroInputGivesZeroFeatures) {
  Hwrcnet<float> m = init_hwrcnet<float>(HwrcnetConfig::table1(), 3);
  Tape<float> tape;
  ParamVars p = bind_params(tape, m, false);
  Var x = tape.constant(Tensor<float>(Shape{1, 128, 32, 1}, 0.0f));
  for (float v : tape.value(cnn_forward(tape, m, p, x, Mode::kEval)).data()) EXPECT_EQ(v, 0.0f);
}

TEST(Cnn, SinglePixelReachesFeatures) {
  Hwrcnet<float> m = init_hwrcnet<float>(HwrcnetConfig::table1(), 3);
  Tape<float> tape;
  ParamVars p = bind_params(tape, m, false);
  Tensor<float> in(Shape{1, 128, 32, 1}, 0.0f);
  in[64 * 32 + 16] = 1.0f;
  Var f = cnn_forward(tape, m, p, tape.constant(in), Mode::kEval);
  double mag = 0.0;
  for (float v : tape.value(f).data()) mag += std::abs(v);
  EXPECT_GT(mag, 0.0);
}

TEST(BiLstm, ZeroFeaturesGiveZeroOutput) {
  Hwrcnet<float> m = init_hwrcnet<float>(HwrcnetConfig::tiny(), 4);
  Tape<float> tape;
  ParamVars p = bind_params(tape, m, false);
  Var out = bilstm_forward(tape, p, tape.constant(Tensor<float>(Shape{3, 4, 16}, 0.0f)));
  EXPECT_EQ(tape.shape(out), (Shape{3, 4, 32}));
  for (float v : tape.value(out).data()) EXPECT_EQ(v, 0.0f);
}

// Running the forward cell on a time-reversed sequence and reversing its
// output must equal the backward cell with the same weights.
TEST(BiLstm, ReverseDirectionSymmetry) {
  Rng rng(5);
  const std::size_t n = 2, steps = 5, f = 3, h = 4;
  Tensor<double> x(Shape{n, steps, f}), wx(Shape{f, 4 * h}), wh(Shape{h, 4 * h}), b(Shape{4 * h});
  for (auto* t : {&x, &wx, &wh, &b})
    for (auto& v : t->data()) v = rng.uniform(-1.0, 1.0);
  Tensor<double> xr(x.shape());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t t = 0; t < steps; ++t)
      for (std::size_t k = 0; k < f; ++k) xr[(i * steps + t) * f + k] = x[(i * steps + steps - 1 - t) * f + k];
  Tape<double> tape;
  Var vwx = tape.constant(wx), vwh = tape.constant(wh), vb = tape.constant(b);
  const Tensor<double> bw = tape.value(lstm(tape, tape.constant(x), vwx, vwh, vb, true));
  const Tensor<double> fw = tape.value(lstm(tape, tape.constant(xr), vwx, vwh, vb, false));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t t = 0; t < steps; ++t)
      for (std::size_t k = 0; k < h; ++k)
        EXPECT_NEAR(bw[(i * steps + t) * h + k], fw[(i * steps + steps - 1 - t) * h + k], 1e-14);
}

TEST(Forward, EvalIsDeterministicAndLeavesStats) {
  Hwrcnet<float> m = init_hwrcnet<float>(HwrcnetConfig::tiny(), 7);
  Rng rng(8);
  const Tensor<float> in = random_input(3, m.config, rng);
  const auto stats = m.bn_stats.at("conv3.bn");
  const auto a = infer_log_probs(m, flat(in));
  const auto b = infer_log_probs(m, flat(in));
  EXPECT_EQ(a, b);
  EXPECT_EQ(m.bn_stats.at("conv3.bn").mean, stats.mean);
}

TEST(Forward, TrainModeUpdatesRunningStats) {
  Hwrcnet<float> m = init_hwrcnet<float>(HwrcnetConfig::tiny(), 7);
  Rng rng(9);
  const auto before = m.bn_stats.at("conv3.bn").mean;
  Tape<float> tape;
  ParamVars p = bind_params(tape, m, true);
  model_forward(tape, m, p, tape.constant(random_input(2, m.config, rng)), Mode::kTrain);
  EXPECT_NE(m.bn_stats.at("conv3.bn").mean, before);
}

TEST(Forward, BatchIndependenceInEval) {
  Hwrcnet<float> m = init_hwrcnet<float>(HwrcnetConfig::tiny(), 10);
  Rng rng(11);
  const Tensor<float> in = random_input(2, m.config, rng);
  const auto both = infer_log_probs(m, flat(in));
  const std::size_t plane = 16 * 8;
  const std::vector<float> all = flat(in);
  const std::vector<float> second(all.begin() + plane, all.end());
  const auto alone = infer_log_probs(m, second);
  const std::size_t per = 4 * 8;
  for (std::size_t k = 0; k < per; ++k) EXPECT_NEAR(both[per + k], alone[k], 1e-5);
}

TEST(Gradients, TinyNetworkEndToEnd) {
  const HwrcnetConfig cfg = HwrcnetConfig::tiny();
  Hwrcnet<double> model = init_hwrcnet<double>(cfg, 12);
  Rng rng(13);
  for (auto& [name, t] : model.params) {
    if (name.ends_with(".bias") || name.ends_with(".beta")) {
      for (auto& v : t.data()) v = 0.1 * rng.normal();
    }
  }
  Tensor<double> input(Shape{2, cfg.input_h, cfg.input_w, 1});
  for (auto& v : input.data()) v = rng.uniform();
  std::vector<Tensor<double>> points;
  std::vector<std::vector<std::size_t>> coords;
  for (const auto& [_, t] : model.params) {
    points.push_back(t);
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < std::min<std::size_t>(4, t.size()); ++k) idx.push_back(rng.index(t.size()));
    coords.push_back(idx);
  }
  const GradCheckResult r =
      grad_check(oracle::network_loss_fn(model, input, {{0, 1}, {2, 2}}), points, 1e-6, coords);
  EXPECT_LT(r.max_rel_error, 1e-4);
  EXPECT_GT(r.checked, 40u);
}
