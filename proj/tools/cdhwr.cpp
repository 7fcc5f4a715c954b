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

// cdhwr: compressed-domain handwritten word recognition.
// Exit codes: 0 success, 1 runtime fault, 2 usage error.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cdhwr/cdhwr.hpp"
#include "cdhwr/plot.hpp"
#include "cdhwr/selftest.hpp"

namespace fs = std::filesystem;
using namespace cdhwr;

namespace {

constexpr std::uint64_t kDefaultSeed = 1234;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataArgs {
  std::string dir;
  std::string index;
  std::string images;
  bool include_err = false;

  void add(CLI::App* cmd) {
    cmd->add_option("--data", dir, "Corpus directory holding words.txt and words/");
    cmd->add_option("--index", index, "IAM words index file");
    cmd->add_option("--images", images, "IAM word image root");
    cmd->add_flag("--include-err", include_err, "Keep samples with segmentation 'err'");
  }

  std::vector<Sample> load() const {
    std::string idx = index, img = images;
    if (!dir.empty()) {
      if (idx.empty()) idx = (fs::path(dir) / "words.txt").string();
      if (img.empty()) img = (fs::path(dir) / "words").string();
    }
    if (idx.empty() || img.empty()) throw UsageError("give --data DIR or both --index and --images");
    LoadOptions opt;
    opt.include_err = include_err;
    LoadResult r = load_iam(idx, img, opt);
    std::cerr << "loaded " << r.samples.size() << " samples (" << r.err_filtered
              << " err-flagged, " << r.missing_images << " missing images, " << r.infeasible
              << " too long)\n";
    if (r.samples.empty()) throw DataError("no usable samples in " + idx);
    return std::move(r.samples);
  }
};

int cmd_compress(const std::string& input, int block, int quality, const std::string& output) {
  const GrayImage img = read_image(input);
  std::optional<QuantTable> table;
  if (quality != 0) table = jpeg_quant_table(block, quality);
  const DctImage d = compress_image(preprocess(img), block, table ? &*table : nullptr);
  save_cdct(output, d);
  double lo = d.coeffs[0], hi = d.coeffs[0], sum = 0.0, dc = 0.0;
  std::size_t zeros = 0, blocks = 0;
  for (std::size_t r = 0; r < DctImage::kRows; ++r) {
    for (std::size_t c = 0; c < DctImage::kCols; ++c) {
      const double v = d.coeffs[r * DctImage::kCols + c];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      sum += std::abs(v);
      zeros += v == 0.0;
      if (r % static_cast<std::size_t>(block) == 0 && c % static_cast<std::size_t>(block) == 0) {
        dc += v;
        ++blocks;
      }
    }
  }
  std::printf("wrote %s: block %d, %s\n", output.c_str(), block,
              table ? ("quality " + std::to_string(quality)).c_str() : "unquantized");
  std::printf("coefficients: %zu  min %.6f  max %.6f  mean|c| %.6f  zeros %zu  mean DC %.6f\n",
              d.coeffs.size(), lo, hi, sum / static_cast<double>(d.coeffs.size()), zeros,
              dc / static_cast<double>(blocks));
  return 0;
}

int cmd_preprocess(const std::string& input, const std::string& output) {
  const ModelInput m = preprocess(read_image(input));
  write_image(output, denormalize_transpose(m));
  std::printf("wrote %s: %dx%d canvas, model input %zux%zu\n", output.c_str(), kCanvasWidth,
              kCanvasHeight, ModelInput::kRows, ModelInput::kCols);
  return 0;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

int cmd_gen_toy(const std::string& out, const std::string& words_file, std::size_t per_word,
                std::uint64_t seed, bool no_jitter) {
  const std::vector<std::string> words = words_file.empty() ? default_toy_words()
                                                            : read_lines(words_file);
  const auto samples = gen_toy(words, per_word, seed, no_jitter ? ToyJitter::none() : ToyJitter{});
  write_toy_dataset(out, samples);
  std::printf("wrote %zu samples (%zu words x %zu) to %s\n", samples.size(), words.size(),
              per_word, out.c_str());
  return 0;
}

struct TrainArgs {
  DataArgs data;
  std::string mode = "normal";
  int quality = 0;
  std::size_t epochs = 50;
  std::size_t batch = 50;
  double lr = 1e-3;
  std::uint64_t seed = kDefaultSeed;
  std::string out = "run";
  bool train_on_all = false;
  std::size_t eval_every = 1;
  double target_wa = -1.0;
  double target_cer = -1.0;
  std::string decode = "best";
};

int cmd_train(const TrainArgs& a) {
  TrainConfig cfg;
  cfg.epochs = a.epochs;
  cfg.batch = a.batch;
  cfg.adam.lr = a.lr;
  cfg.input = {parse_input_mode(a.mode), a.quality};
  cfg.seed = a.seed;
  cfg.checkpoint_dir = a.out;
  cfg.eval_every = a.eval_every;
  cfg.decode.mode = parse_decode_mode(a.decode);
  if (a.target_wa >= 0.0 || a.target_cer >= 0.0) {
    cfg.stop = [&a](const EpochLog& e) {
      return e.test && (a.target_wa < 0.0 || e.test->wa >= a.target_wa) &&
             (a.target_cer < 0.0 || e.test->cer <= a.target_cer);
    };
  }
  cfg.on_epoch = [](const EpochLog& e) {
    std::printf("epoch %3zu  loss %.4f", e.epoch, e.mean_loss);
    if (e.test) std::printf("  CER %.2f  WA %.2f  WAF %.2f", e.test->cer, e.test->wa, e.test->waf);
    std::printf("  (%.1fs)\n", e.wall_seconds);
    std::fflush(stdout);
  };
  cfg.validate();

  const std::vector<Sample> samples = a.data.load();
  Split split;
  if (a.train_on_all) {
    split.train = samples;
    split.test = samples;
    split.seed = a.seed;
  } else {
    split = split_95_5(samples, a.seed);
  }
  const CharVocab vocab = build_vocab(samples);
  Checkpoint start = initial_checkpoint(vocab, cfg);
  std::printf("train %zu  test %zu  vocabulary %zu  parameters %zu  mode %s\n",
              split.train.size(), split.test.size(), vocab.size(),
              start.model.parameter_count(), a.mode.c_str());
  const TrainResult r = train_loop(split, std::move(start), cfg);

  std::vector<double> loss, cer;
  for (const auto& e : r.epochs) {
    loss.push_back(e.mean_loss);
    cer.push_back(e.test ? e.test->cer : std::numeric_limits<double>::quiet_NaN());
  }
  if (!r.epochs.empty()) {
    const fs::path plot = fs::path(a.out) / "curves.png";
    training_curves(loss, cer).save_png(plot.string());
    std::printf("wrote %s\n", plot.string().c_str());
  }
  if (r.best) {
    std::printf("best test CER %.2f (WA %.2f)\n", r.best->cer, r.best->wa);
  }
  std::printf("checkpoints in %s\n", a.out.c_str());
  return 0;
}

int cmd_eval(const std::string& model, const DataArgs& data, const std::string& mode,
             const std::string& decode, std::size_t beam, const std::string& json_out) {
  const Checkpoint ck = load_checkpoint(model);
  const InputMode requested = mode.empty() ? ck.input.mode : parse_input_mode(mode);
  const std::vector<Sample> samples = data.load();
  const EvalResult r = evaluate(ck, samples, requested, {parse_decode_mode(decode), beam});
  std::fputs(format_table(r.report).c_str(), stdout);
  if (!json_out.empty()) {
    nlohmann::json j = to_json(r.report);
    j["input_mode"] = to_string(ck.input.mode);
    j["decode"] = decode;
    j["seed"] = ck.seed;
    std::ofstream(json_out) << j.dump(2) << '\n';
  }
  return 0;
}

int cmd_predict(const std::string& model, const std::vector<std::string>& inputs,
                const std::string& decode, std::size_t beam, const std::string& lexicon_path) {
  Checkpoint ck = load_checkpoint(model);
  std::vector<std::string> lexicon;
  if (!lexicon_path.empty()) lexicon = read_lines(lexicon_path);
  const DecodeOptions d{parse_decode_mode(decode), beam};
  const std::size_t frames = ck.model.config.expected_time_steps;
  for (const auto& path : inputs) {
    const std::vector<float> plane = network_input(read_image(path), ck.input);
    const Tensor<float> lp = infer_log_probs(ck.model, plane);
    const std::string raw = decode_row(lp.ptr(), frames, ck.vocab, d);
    std::printf("%s\twithout correction: %s\n", path.c_str(), raw.c_str());
    if (!lexicon.empty()) {
      std::printf("%s\twith correction: %s\n", path.c_str(),
                  lexicon_correct(raw, lexicon).c_str());
    }
  }
  return 0;
}

int cmd_selftest() {
  bool ok = true;
  for (const SelftestGroup& g : run_selftest()) {
    std::printf("%s  %-16s %s (%.2fs)\n", g.passed ? "PASS" : "FAIL", g.name.c_str(),
                g.detail.c_str(), g.seconds);
    ok = ok && g.passed;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compressed-domain handwritten word recognition"};
  app.set_config("--config", "", "TOML-style config file; flags take precedence");
  app.require_subcommand(1);
  app.allow_config_extras(false);

  std::string input, output;
  int block = 8, quality = 0;
  auto* compress = app.add_subcommand("compress", "Write the block-DCT (CDCT) stream of an image");
  compress->add_option("--input", input, "Input image (PNG or PGM)")->required();
  compress->add_option("--block", block, "Block size")->check(CLI::IsMember({4, 8}));
  compress->add_option("--quality", quality, "JPEG quality for quantization")
      ->check(CLI::Range(1, 100));
  compress->add_option("--output", output, "CDCT output path")->required();

  auto* pre = app.add_subcommand("preprocess", "Write the normalized 128x32 canvas of an image");
  pre->add_option("--input", input, "Input image")->required();
  pre->add_option("--output", output, "Output PNG or PGM")->required();

  std::string toy_out, words_file;
  std::size_t per_word = 10;
  std::uint64_t seed = kDefaultSeed;
  bool no_jitter = false;
  auto* toy = app.add_subcommand("gen-toy", "Render a synthetic word corpus in IAM layout");
  toy->add_option("--out", toy_out, "Output directory")->required();
  toy->add_option("--words", words_file, "File with one word per line");
  toy->add_option("--per-word", per_word, "Renders per word")->check(CLI::PositiveNumber);
  toy->add_option("--seed", seed, "Random seed");
  toy->add_flag("--no-jitter", no_jitter, "Disable spacing, offset, scale and noise jitter");

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train HWRCNet");
  ta.data.add(train);
  train->add_option("--mode", ta.mode, "Input mode")
      ->check(CLI::IsMember({"normal", "dct8", "dct4"}));
  train->add_option("--quality", ta.quality, "Quantize DCT input at this JPEG quality")
      ->check(CLI::Range(1, 100));
  train->add_option("--epochs", ta.epochs, "Epochs");
  train->add_option("--batch", ta.batch, "Batch size")->check(CLI::PositiveNumber);
  train->add_option("--lr", ta.lr, "Adam learning rate")->check(CLI::PositiveNumber);
  train->add_option("--seed", ta.seed, "Random seed");
  train->add_option("--out", ta.out, "Output directory for checkpoints and logs");
  train->add_flag("--train-on-all", ta.train_on_all,
                  "Train and evaluate on the whole corpus instead of a 95:5 split");
  train->add_option("--eval-every", ta.eval_every, "Evaluate every N epochs")
      ->check(CLI::PositiveNumber);
  train->add_option("--target-wa", ta.target_wa, "Stop once test WA reaches this");
  train->add_option("--target-cer", ta.target_cer, "Stop once test CER falls to this");
  train->add_option("--decode", ta.decode, "Decoder for evaluation")
      ->check(CLI::IsMember({"best", "beam"}));

  std::string model, mode, decode = "best", json_out, lexicon;
  std::size_t beam = 25;
  DataArgs eval_data;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a corpus");
  eval->add_option("--model", model, "Checkpoint")->required();
  eval_data.add(eval);
  eval->add_option("--mode", mode, "Input mode; must match the checkpoint")
      ->check(CLI::IsMember({"normal", "dct8", "dct4"}));
  eval->add_option("--decode", decode, "Decoder")->check(CLI::IsMember({"best", "beam"}));
  eval->add_option("--beam-width", beam, "Beam width")->check(CLI::PositiveNumber);
  eval->add_option("--json", json_out, "Write the report as JSON");

  std::vector<std::string> inputs;
  auto* predict = app.add_subcommand("predict", "Recognize word images");
  predict->add_option("--model", model, "Checkpoint")->required();
  predict->add_option("--input", inputs, "Input images")->required();
  predict->add_option("--decode", decode, "Decoder")->check(CLI::IsMember({"best", "beam"}));
  predict->add_option("--beam-width", beam, "Beam width")->check(CLI::PositiveNumber);
  predict->add_option("--lexicon", lexicon, "Word list for dictionary correction");

  auto* selftest = app.add_subcommand("selftest", "Run the built-in oracle checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*compress) return cmd_compress(input, block, quality, output);
    if (*pre) return cmd_preprocess(input, output);
    if (*toy) return cmd_gen_toy(toy_out, words_file, per_word, seed, no_jitter);
    if (*train) return cmd_train(ta);
    if (*eval) return cmd_eval(model, eval_data, mode, decode, beam, json_out);
    if (*predict) return cmd_predict(model, inputs, decode, beam, lexicon);
    if (*selftest) return cmd_selftest();
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
