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

// CNN + bidirectional LSTM word recognizer.
//
//   input [N, 128, 32, 1]   (writing direction first)
//   5 x (conv same-pad -> relu -> maxpool [-> batchnorm])
//   collapse [N, 32, 1, 256] -> [N, 32, 256]
//   forward LSTM (256) || backward LSTM (256) -> [N, 32, 512]
//   dense -> [N, 32, classes] -> log_softmax

#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "cdhwr/ops.hpp"
#include "cdhwr/random.hpp"

namespace cdhwr {

struct ConvStage {
  std::size_t maps = 0;
  std::size_t kernel = 3;
  std::size_t pool_h = 1;  // along the time axis
  std::size_t pool_w = 1;
  bool batchnorm = false;
};

struct Geometry {
  std::size_t time_steps = 0;
  std::size_t features = 0;
};

struct HwrcnetConfig {
  std::size_t input_h = 128;
  std::size_t input_w = 32;
  std::vector<ConvStage> stages = {
      {32, 5, 2, 2, false},  {64, 5, 2, 2, false},  {128, 3, 1, 2, true},
      {128, 3, 1, 2, false}, {256, 3, 1, 2, false},
  };
  std::size_t lstm_hidden = 256;
  std::size_t num_classes = 80;
  std::size_t expected_time_steps = 32;

  /// The full-size architecture; `classes` is the vocabulary size plus one.
  static HwrcnetConfig table1(std::size_t classes = 80) {
    HwrcnetConfig c;
    c.num_classes = classes;
    return c;
  }

  /// Scaled-down variant for gradient checks: 16x8 input, 4 time steps.
  static HwrcnetConfig tiny() {
    HwrcnetConfig c;
    c.input_h = 16;
    c.input_w = 8;
    c.stages = {{4, 5, 2, 2, false}, {8, 5, 2, 2, false}, {8, 3, 1, 2, true},
                {8, 3, 1, 1, false}, {16, 3, 1, 1, false}};
    c.lstm_hidden = 16;
    c.num_classes = 8;
    c.expected_time_steps = 4;
    return c;
  }

  /// Checks that the pool schedule collapses the input to a single row of
  /// `expected_time_steps` steps and returns the sequence geometry.
  Geometry validate() const {
    if (stages.empty()) throw ShapeError("config: no convolution stages");
    if (num_classes < 2) throw ShapeError("config: need at least one symbol plus blank");
    std::size_t h = input_h, w = input_w;
    for (std::size_t i = 0; i < stages.size(); ++i) {
      const ConvStage& s = stages[i];
      if (s.maps == 0 || s.kernel % 2 == 0 || s.pool_h == 0 || s.pool_w == 0) {
        throw ShapeError("config: stage " + std::to_string(i + 1) + " is malformed");
      }
      if (h % s.pool_h != 0 || w % s.pool_w != 0) {
        throw ShapeError("config: stage " + std::to_string(i + 1) + " pool " +
                         std::to_string(s.pool_h) + "x" + std::to_string(s.pool_w) +
                         " does not divide " + std::to_string(h) + "x" + std::to_string(w));
      }
      h /= s.pool_h;
      w /= s.pool_w;
    }
    if (w != 1) {
      throw ShapeError("config: pooling leaves " + std::to_string(w) +
                       " rows; collapse needs exactly 1");
    }
    if (h != expected_time_steps) {
      throw ShapeError("config: pooling yields " + std::to_string(h) + " time steps, expected " +
                       std::to_string(expected_time_steps));
    }
    return {h, stages.back().maps};
  }

  friend bool operator==(const HwrcnetConfig& a, const HwrcnetConfig& b) {
    return a.to_json() == b.to_json();
  }

  nlohmann::json to_json() const {
    nlohmann::json st = nlohmann::json::array();
    for (const auto& s : stages) {
      st.push_back({{"maps", s.maps},
                    {"kernel", s.kernel},
                    {"pool", {s.pool_h, s.pool_w}},
                    {"batchnorm", s.batchnorm}});
    }
    return {{"input", {input_h, input_w}},       {"stages", st},
            {"lstm_hidden", lstm_hidden},        {"num_classes", num_classes},
            {"time_steps", expected_time_steps}};
  }

  static HwrcnetConfig from_json(const nlohmann::json& j) {
    HwrcnetConfig c;
    c.input_h = j.at("input").at(0).get<std::size_t>();
    c.input_w = j.at("input").at(1).get<std::size_t>();
    c.stages.clear();
    for (const auto& s : j.at("stages")) {
      c.stages.push_back({s.at("maps").get<std::size_t>(), s.at("kernel").get<std::size_t>(),
                          s.at("pool").at(0).get<std::size_t>(),
                          s.at("pool").at(1).get<std::size_t>(), s.at("batchnorm").get<bool>()});
    }
    c.lstm_hidden = j.at("lstm_hidden").get<std::size_t>();
    c.num_classes = j.at("num_classes").get<std::size_t>();
    c.expected_time_steps = j.at("time_steps").get<std::size_t>();
    c.validate();
    return c;
  }
};

inline constexpr const char* kInitScheme =
    "conv/dense: truncated_normal(0.1); lstm: glorot_uniform, forget bias 1; other biases: 0; "
    "bn: gamma 1 beta 0";

/// Model parameters plus batch-norm running statistics.
template <class T>
struct Hwrcnet {
  HwrcnetConfig config;
  std::map<std::string, Tensor<T>> params;
  std::map<std::string, BatchNormStats<T>> bn_stats;

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& [_, t] : params) n += t.size();
    return n;
  }

  template <class U>
  Hwrcnet<U> cast() const {
    Hwrcnet<U> out;
    out.config = config;
    for (const auto& [k, v] : params) out.params.emplace(k, v.template cast<U>());
    for (const auto& [k, v] : bn_stats) {
      BatchNormStats<U> s;
      if (v.ready()) {
        s.mean = v.mean.template cast<U>();
        s.var = v.var.template cast<U>();
      }
      out.bn_stats.emplace(k, std::move(s));
    }
    return out;
  }
};

inline std::string stage_name(std::size_t i) { return "conv" + std::to_string(i + 1); }

/// Fresh model with seeded initialization.
template <class T>
Hwrcnet<T> init_hwrcnet(const HwrcnetConfig& config, std::uint64_t seed) {
  const Geometry geo = config.validate();
  Rng rng(seed);
  Hwrcnet<T> m;
  m.config = config;
  auto trunc = [&](Shape shape) {
    Tensor<T> t(std::move(shape));
    for (auto& v : t.data()) v = static_cast<T>(rng.truncated_normal(0.1));
    return t;
  };
  auto glorot = [&](Shape shape, std::size_t fan_in, std::size_t fan_out) {
    Tensor<T> t(std::move(shape));
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (auto& v : t.data()) v = static_cast<T>(rng.uniform(-limit, limit));
    return t;
  };
  std::size_t cin = 1;
  for (std::size_t i = 0; i < config.stages.size(); ++i) {
    const ConvStage& s = config.stages[i];
    const std::string name = stage_name(i);
    m.params.emplace(name + ".kernel", trunc({s.kernel, s.kernel, cin, s.maps}));
    m.params.emplace(name + ".bias", Tensor<T>(Shape{s.maps}, T{0}));
    if (s.batchnorm) {
      m.params.emplace(name + ".bn.gamma", Tensor<T>(Shape{s.maps}, T{1}));
      m.params.emplace(name + ".bn.beta", Tensor<T>(Shape{s.maps}, T{0}));
      BatchNormStats<T> st;
      st.reset(s.maps);
      m.bn_stats.emplace(name + ".bn", std::move(st));
    }
    cin = s.maps;
  }
  const std::size_t h = config.lstm_hidden;
  for (const char* dir : {"lstm_fw", "lstm_bw"}) {
    const std::string p = dir;
    m.params.emplace(p + ".w_input", glorot({geo.features, 4 * h}, geo.features, 4 * h));
    m.params.emplace(p + ".w_recurrent", glorot({h, 4 * h}, h, 4 * h));
    Tensor<T> bias(Shape{4 * h}, T{0});
    for (std::size_t k = h; k < 2 * h; ++k) bias[k] = T{1};  // forget gate
    m.params.emplace(p + ".bias", std::move(bias));
  }
  m.params.emplace("proj.weight", trunc({2 * h, config.num_classes}));
  m.params.emplace("proj.bias", Tensor<T>(Shape{config.num_classes}, T{0}));
  return m;
}

/// Parameters placed on a tape, by name.
using ParamVars = std::map<std::string, Var>;

template <class T>
ParamVars bind_params(Tape<T>& tape, const Hwrcnet<T>& model, bool requires_grad) {
  ParamVars vars;
  for (const auto& [name, value] : model.params) {
    vars.emplace(name, tape.leaf(value, requires_grad, name));
  }
  return vars;
}

inline Var param(const ParamVars& vars, const std::string& name) {
  auto it = vars.find(name);
  if (it == vars.end()) throw std::out_of_range("missing parameter " + name);
  return it->second;
}

/// Convolutional feature extractor: [N, H, W, 1] -> [N, steps, features].
template <class T>
Var cnn_forward(Tape<T>& tape, Hwrcnet<T>& model, const ParamVars& p, Var input, Mode mode) {
  const HwrcnetConfig& cfg = model.config;
  const Geometry geo = cfg.validate();
  const Shape& s = tape.shape(input);
  if (s.size() != 4 || s[1] != cfg.input_h || s[2] != cfg.input_w || s[3] != 1) {
    throw ShapeError("cnn_forward: expected input [N," + std::to_string(cfg.input_h) + "," +
                     std::to_string(cfg.input_w) + ",1], got " + shape_str(s));
  }
  Var x = input;
  for (std::size_t i = 0; i < cfg.stages.size(); ++i) {
    const ConvStage& st = cfg.stages[i];
    const std::string name = stage_name(i);
    x = conv2d(tape, x, param(p, name + ".kernel"));
    x = bias_add(tape, x, param(p, name + ".bias"));
    x = relu(tape, x);
    x = maxpool2d(tape, x, st.pool_h, st.pool_w);
    if (st.batchnorm) {
      auto it = model.bn_stats.find(name + ".bn");
      BatchNormStats<T>* stats = it == model.bn_stats.end() ? nullptr : &it->second;
      x = batchnorm(tape, x, param(p, name + ".bn.gamma"), param(p, name + ".bn.beta"), stats,
                    mode);
    }
  }
  return reshape(tape, x, Shape{s[0], geo.time_steps, geo.features});
}

/// Both directions over the same features, outputs concatenated per step.
template <class T>
Var bilstm_forward(Tape<T>& tape, const ParamVars& p, Var features) {
  if (tape.shape(features).size() != 3) {
    throw ShapeError("bilstm_forward: features must be [N,T,F], got " +
                     shape_str(tape.shape(features)));
  }
  Var fw = lstm(tape, features, param(p, "lstm_fw.w_input"), param(p, "lstm_fw.w_recurrent"),
                param(p, "lstm_fw.bias"), false);
  Var bw = lstm(tape, features, param(p, "lstm_bw.w_input"), param(p, "lstm_bw.w_recurrent"),
                param(p, "lstm_bw.bias"), true);
  return concat_last(tape, fw, bw);
}

/// Per-step class log-probabilities [N, steps, classes].
template <class T>
Var model_forward(Tape<T>& tape, Hwrcnet<T>& model, const ParamVars& p, Var input, Mode mode) {
  Var feats = cnn_forward(tape, model, p, input, mode);
  Var seq = bilstm_forward(tape, p, feats);
  Var logits = dense(tape, seq, param(p, "proj.weight"), param(p, "proj.bias"));
  return log_softmax(tape, logits);
}

/// Eval-mode forward without gradient bookkeeping. `planes` holds N
/// row-major H x W inputs back to back.
template <class T>
Tensor<T> infer_log_probs(Hwrcnet<T>& model, const std::vector<T>& planes) {
  const std::size_t plane = model.config.input_h * model.config.input_w;
  if (planes.empty() || planes.size() % plane != 0) {
    throw ShapeError("infer_log_probs: input length is not a multiple of the plane size");
  }
  Tape<T> tape;
  ParamVars p = bind_params(tape, model, false);
  Var x = tape.constant(Tensor<T>(
      Shape{planes.size() / plane, model.config.input_h, model.config.input_w, 1}, planes));
  return tape.value(model_forward(tape, model, p, x, Mode::kEval));
}

}  // namespace cdhwr
