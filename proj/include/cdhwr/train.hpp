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

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cdhwr/checkpoint.hpp"
#include "cdhwr/ctc.hpp"
#include "cdhwr/data.hpp"
#include "cdhwr/input.hpp"
#include "cdhwr/metrics.hpp"
#include "cdhwr/network.hpp"
#include "cdhwr/optim.hpp"
#include "cdhwr/parallel.hpp"

namespace cdhwr {

class TrainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DecodeMode { kBest, kBeam };

inline DecodeMode parse_decode_mode(const std::string& s) {
  if (s == "best") return DecodeMode::kBest;
  if (s == "beam") return DecodeMode::kBeam;
  throw std::invalid_argument("unknown decode mode '" + s + "' (best, beam)");
}

struct DecodeOptions {
  DecodeMode mode = DecodeMode::kBest;
  std::size_t beam_width = 25;
};

/// Samples turned into network planes and label sequences, in input order.
struct EncodedSet {
  std::vector<std::string> ids;
  std::vector<std::string> texts;
  std::vector<std::vector<int>> labels;
  std::vector<float> planes;  // size() * plane_size
  std::size_t plane_size = ModelInput::kRows * ModelInput::kCols;

  std::size_t size() const { return ids.size(); }
  const float* plane(std::size_t i) const { return planes.data() + i * plane_size; }
};

/// Loads, preprocesses and encodes every sample. Labels must fit `frames`
/// CTC steps; the offending id is named otherwise.
inline EncodedSet encode_samples(const std::vector<Sample>& samples, const CharVocab& vocab,
                                 const InputSpec& input, std::size_t frames) {
  EncodedSet set;
  const std::size_t n = samples.size();
  set.ids.resize(n);
  set.texts.resize(n);
  set.labels.resize(n);
  set.planes.resize(n * set.plane_size);
  for (std::size_t i = 0; i < n; ++i) {
    const Sample& s = samples[i];
    set.ids[i] = s.id;
    set.texts[i] = s.transcription;
    try {
      set.labels[i] = vocab.encode(s.transcription);
    } catch (const std::exception& e) {
      throw TrainError("sample " + s.id + ": " + e.what());
    }
    if (set.labels[i].empty() || ctc_min_frames(set.labels[i]) > frames) {
      throw TrainError("sample " + s.id + ": transcription '" + s.transcription +
                       "' is infeasible for CTC at " + std::to_string(frames) + " steps");
    }
  }
  parallel_for(n, [&](std::size_t i) {
    const std::vector<float> p = network_input(samples[i].image(), input);
    std::copy(p.begin(), p.end(), set.planes.begin() + static_cast<std::ptrdiff_t>(i * set.plane_size));
  });
  return set;
}

struct Prediction {
  std::string id;
  std::string truth;
  std::string text;
};

struct EvalResult {
  EvalReport report;
  std::vector<Prediction> predictions;
};

/// Eval-mode log-probabilities for samples [begin, end) of `set`.
inline Tensor<float> batch_log_probs(Hwrcnet<float>& model, const EncodedSet& set,
                                     std::size_t begin, std::size_t end) {
  std::vector<float> planes(set.plane(begin), set.plane(begin) + (end - begin) * set.plane_size);
  return infer_log_probs(model, planes);
}

inline std::string decode_row(const float* lp, std::size_t frames, const CharVocab& vocab,
                              const DecodeOptions& d) {
  std::span<const float> seq(lp, frames * vocab.num_classes());
  return d.mode == DecodeMode::kBest ? decode_best_path(seq, frames, vocab)
                                     : decode_beam(seq, frames, vocab, d.beam_width);
}

inline EvalResult evaluate_encoded(Hwrcnet<float> model, const CharVocab& vocab,
                                   const EncodedSet& set, const DecodeOptions& decode,
                                   std::size_t batch = 64) {
  if (set.size() == 0) throw std::invalid_argument("evaluate: no samples");
  EvalResult res;
  std::vector<TextPair> pairs;
  const std::size_t frames = model.config.expected_time_steps;
  const std::size_t per = frames * model.config.num_classes;
  for (std::size_t b = 0; b < set.size(); b += batch) {
    const std::size_t e = std::min(set.size(), b + batch);
    const Tensor<float> lp = batch_log_probs(model, set, b, e);
    for (std::size_t i = b; i < e; ++i) {
      const std::string text = decode_row(lp.ptr() + (i - b) * per, frames, vocab, decode);
      res.predictions.push_back({set.ids[i], set.texts[i], text});
      pairs.emplace_back(set.texts[i], text);
    }
  }
  res.report = make_report(pairs);
  return res;
}

class ModeMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Evaluates a checkpoint on raw samples. `requested` must match the input
/// mode the checkpoint was trained with.
inline EvalResult evaluate(const Checkpoint& ck, const std::vector<Sample>& samples,
                           InputMode requested, const DecodeOptions& decode = {}) {
  if (requested != ck.input.mode) {
    throw ModeMismatch("checkpoint was trained on " + to_string(ck.input.mode) +
                       " input, evaluation requested " + to_string(requested));
  }
  if (samples.empty()) throw std::invalid_argument("evaluate: no samples");
  const EncodedSet set =
      encode_samples(samples, ck.vocab, ck.input, ck.model.config.expected_time_steps);
  return evaluate_encoded(ck.model, ck.vocab, set, decode);
}

struct EpochLog {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  std::optional<EvalReport> test;
  double wall_seconds = 0.0;

  nlohmann::json to_json() const {
    nlohmann::json j = {{"epoch", epoch}, {"mean_loss", mean_loss}, {"wall_time", wall_seconds}};
    if (test) {
      j["test"] = {{"cer", test->cer}, {"wa", test->wa}, {"waf", test->waf}, {"wer", test->wer}};
    }
    return j;
  }
};

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch = 50;
  AdamConfig adam;
  InputSpec input;
  std::uint64_t seed = 1234;
  std::string checkpoint_dir;  // empty: nothing written
  std::optional<HwrcnetConfig> model;  // default: Table 1 sized to the vocabulary
  DecodeOptions decode;
  std::size_t eval_every = 1;
  /// Returns true to stop after the given epoch.
  std::function<bool(const EpochLog&)> stop;
  std::function<void(const EpochLog&)> on_epoch;

  void validate() const {
    if (batch == 0) throw std::invalid_argument("train: batch size must be positive");
    if (eval_every == 0) throw std::invalid_argument("train: eval_every must be positive");
    if (!(adam.lr > 0.0)) throw std::invalid_argument("train: learning rate must be positive");
    adam.validate();
  }
};

struct TrainResult {
  Checkpoint final;
  std::vector<double> iteration_losses;
  std::vector<EpochLog> epochs;
  std::optional<EvalReport> best;
};

inline Checkpoint initial_checkpoint(const CharVocab& vocab, const TrainConfig& cfg) {
  Checkpoint ck;
  HwrcnetConfig mc = cfg.model ? *cfg.model : HwrcnetConfig::table1(vocab.num_classes());
  if (mc.num_classes != vocab.num_classes()) {
    throw std::invalid_argument("model has " + std::to_string(mc.num_classes) +
                                " classes but the vocabulary needs " +
                                std::to_string(vocab.num_classes()));
  }
  ck.model = init_hwrcnet<float>(mc, cfg.seed);
  ck.vocab = vocab;
  ck.input = cfg.input;
  ck.seed = cfg.seed;
  return ck;
}

/// One forward/backward/update on samples `batch` of `set`. Returns the
/// mean CTC loss before the update.
inline double train_step(Checkpoint& ck, const EncodedSet& set,
                         const std::vector<std::size_t>& batch, const AdamConfig& adam) {
  const HwrcnetConfig& mc = ck.model.config;
  std::vector<float> planes;
  planes.reserve(batch.size() * set.plane_size);
  std::vector<std::vector<int>> labels;
  for (std::size_t i : batch) {
    planes.insert(planes.end(), set.plane(i), set.plane(i) + set.plane_size);
    labels.push_back(set.labels[i]);
  }
  Tape<float> tape;
  ParamVars vars = bind_params(tape, ck.model, true);
  Var x = tape.constant(Tensor<float>(Shape{batch.size(), mc.input_h, mc.input_w, 1}, planes));
  Var lp = model_forward(tape, ck.model, vars, x, Mode::kTrain);
  Var loss = ctc_loss_mean(tape, lp, labels, ck.vocab.blank());
  tape.backward(loss);
  std::map<std::string, Tensor<float>> grads;
  for (const auto& [name, v] : vars) grads.emplace(name, tape.grad(v));
  if (!ck.adam) ck.adam.emplace();
  adam_step(ck.model.params, grads, *ck.adam, adam);
  ++ck.step;
  return static_cast<double>(tape.value(loss)[0]);
}

inline nlohmann::json train_log_header(const Checkpoint& ck, const TrainConfig& cfg,
                                       std::size_t n_train, std::size_t n_test) {
  return {{"header",
           {{"loss_reduction", "mean"},
            {"epochs", cfg.epochs},
            {"batch", cfg.batch},
            {"lr", cfg.adam.lr},
            {"beta1", cfg.adam.beta1},
            {"beta2", cfg.adam.beta2},
            {"epsilon", cfg.adam.epsilon},
            {"input_mode", to_string(cfg.input.mode)},
            {"quality", cfg.input.quality},
            {"seed", cfg.seed},
            {"train_samples", n_train},
            {"test_samples", n_test},
            {"parameters", ck.model.parameter_count()},
            {"model", ck.model.config.to_json()},
            {"vocabulary", ck.vocab.utf8()}}}};
}

/// Trains from `start` on split.train, evaluating on split.test. Neither the
/// split nor the vocabulary is modified.
inline TrainResult train_loop(const Split& split, Checkpoint start, const TrainConfig& cfg) {
  cfg.validate();
  if (split.train.empty()) throw std::invalid_argument("train: empty training set");
  if (start.input != cfg.input) {
    throw ModeMismatch("checkpoint input mode " + to_string(start.input.mode) +
                       " differs from the requested " + to_string(cfg.input.mode));
  }
  TrainResult res;
  res.final = std::move(start);
  if (cfg.epochs == 0) {
    if (!cfg.checkpoint_dir.empty()) {
      save_checkpoint(std::filesystem::path(cfg.checkpoint_dir) / "latest.ckpt", res.final);
    }
    return res;
  }
  Checkpoint& ck = res.final;
  const std::size_t frames = ck.model.config.expected_time_steps;
  const EncodedSet train = encode_samples(split.train, ck.vocab, cfg.input, frames);
  std::optional<EncodedSet> test;
  if (!split.test.empty()) test = encode_samples(split.test, ck.vocab, cfg.input, frames);

  std::optional<std::ofstream> log;
  std::filesystem::path dir;
  if (!cfg.checkpoint_dir.empty()) {
    dir = cfg.checkpoint_dir;
    std::filesystem::create_directories(dir);
    log.emplace(dir / "train_log.jsonl");
    *log << train_log_header(ck, cfg, train.size(), test ? test->size() : 0).dump() << '\n';
  }

  Rng rng(cfg.seed ^ 0x5eedf00dULL);
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  double best_cer = std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    rng.shuffle(order);
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch) {
      const std::vector<std::size_t> idx(
          order.begin() + static_cast<std::ptrdiff_t>(b),
          order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), b + cfg.batch)));
      const double loss = train_step(ck, train, idx, cfg.adam);
      res.iteration_losses.push_back(loss);
      total += loss;
      ++batches;
    }
    EpochLog el;
    el.epoch = epoch;
    el.mean_loss = total / static_cast<double>(batches);
    if (test && (epoch % cfg.eval_every == 0 || epoch == cfg.epochs)) {
      el.test = evaluate_encoded(ck.model, ck.vocab, *test, cfg.decode).report;
    }
    el.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.epochs.push_back(el);
    if (log) *log << el.to_json().dump() << std::endl;
    if (el.test && el.test->cer < best_cer) {
      best_cer = el.test->cer;
      res.best = el.test;
      if (!dir.empty()) save_checkpoint(dir / "best.ckpt", ck);
    }
    if (!dir.empty()) save_checkpoint(dir / "latest.ckpt", ck);
    if (cfg.on_epoch) cfg.on_epoch(el);
    if (cfg.stop && cfg.stop(el)) break;
  }
  return res;
}

}  // namespace cdhwr
