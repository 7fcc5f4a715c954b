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

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdhwr/ctc.hpp"
#include "cdhwr/font5x7.hpp"
#include "cdhwr/image.hpp"
#include "cdhwr/random.hpp"
#include "cdhwr/text.hpp"
#include "cdhwr/vocab.hpp"

namespace cdhwr {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fields of one IAM words-index line besides id and transcription.
struct IamFields {
  bool ok = true;
  int graylevel = 0;
  int x = 0, y = 0, w = 0, h = 0;
  std::string tag = "XX";
};

struct Sample {
  std::string id;
  std::string image_path;            // empty when `raster` is set
  std::optional<GrayImage> raster;   // in-memory source
  std::string transcription;
  IamFields fields;

  GrayImage image() const { return raster ? *raster : read_image(image_path); }
};

inline constexpr std::size_t kDefaultTimeSteps = 32;

/// Frames a transcription needs with a blank between every pair of symbols
/// and at both ends, plus one more per adjacent repeat.
inline std::size_t padded_frames(const std::u32string& word) {
  std::size_t repeats = 0;
  for (std::size_t i = 1; i < word.size(); ++i) repeats += word[i] == word[i - 1];
  return 2 * word.size() + repeats + 1;
}

inline bool transcription_fits(const std::string& word, std::size_t time_steps = kDefaultTimeSteps) {
  const std::u32string w = utf8_decode(word);
  return !w.empty() && padded_frames(w) <= time_steps;
}

/// Parses one non-comment index line. Returns nullopt with `error` set on
/// malformed input.
inline std::optional<Sample> parse_iam_line(const std::string& line, std::string& error) {
  std::istringstream in(line);
  std::vector<std::string> f;
  for (std::string tok; in >> tok;) f.push_back(tok);
  if (f.size() < 9) {
    error = "expected at least 9 fields, got " + std::to_string(f.size());
    return std::nullopt;
  }
  Sample s;
  s.id = f[0];
  if (f[1] != "ok" && f[1] != "err") {
    error = "segmentation result must be ok or err, got '" + f[1] + "'";
    return std::nullopt;
  }
  s.fields.ok = f[1] == "ok";
  int* ints[] = {&s.fields.graylevel, &s.fields.x, &s.fields.y, &s.fields.w, &s.fields.h};
  for (int k = 0; k < 5; ++k) {
    const std::string& tok = f[2 + static_cast<std::size_t>(k)];
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), *ints[k]);
    if (ec != std::errc{} || p != tok.data() + tok.size()) {
      error = "field " + std::to_string(k + 3) + " is not an integer: '" + tok + "'";
      return std::nullopt;
    }
  }
  s.fields.tag = f[7];
  s.transcription = f[8];
  for (std::size_t k = 9; k < f.size(); ++k) s.transcription += " " + f[k];
  std::size_t dashes = std::count(s.id.begin(), s.id.end(), '-');
  if (dashes < 2) {
    error = "id '" + s.id + "' is not of the form form-part-line-word";
    return std::nullopt;
  }
  try {
    (void)utf8_decode(s.transcription);
  } catch (const Utf8Error& e) {
    error = std::string("transcription: ") + e.what();
    return std::nullopt;
  }
  return s;
}

inline std::string format_iam_line(const Sample& s) {
  std::ostringstream out;
  out << s.id << ' ' << (s.fields.ok ? "ok" : "err") << ' ' << s.fields.graylevel << ' '
      << s.fields.x << ' ' << s.fields.y << ' ' << s.fields.w << ' ' << s.fields.h << ' '
      << s.fields.tag << ' ' << s.transcription;
  return out.str();
}

/// images_root/a01/a01-000u/a01-000u-00-00.png for id a01-000u-00-00.
inline std::filesystem::path iam_image_path(const std::filesystem::path& root,
                                            const std::string& id) {
  const std::size_t d1 = id.find('-');
  const std::size_t d2 = id.find('-', d1 + 1);
  const std::string form = id.substr(0, d1);
  const std::string part = id.substr(0, d2);
  return root / form / part / (id + ".png");
}

struct LoadOptions {
  bool include_err = false;
  bool check_images = true;
  std::size_t time_steps = kDefaultTimeSteps;
  std::ostream* log = &std::cerr;
};

struct LoadResult {
  std::vector<Sample> samples;
  std::size_t comments = 0;
  std::size_t err_filtered = 0;
  std::size_t missing_images = 0;
  std::size_t infeasible = 0;
};

inline LoadResult load_iam(const std::string& index_path, const std::string& images_root,
                           const LoadOptions& opt = {}) {
  std::ifstream in(index_path);
  if (!in) throw DataError("cannot open words index " + index_path);
  LoadResult res;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') {
      ++res.comments;
      continue;
    }
    std::string err;
    auto s = parse_iam_line(line, err);
    if (!s) throw DataError(index_path + ":" + std::to_string(lineno) + ": " + err);
    if (!s->fields.ok && !opt.include_err) {
      ++res.err_filtered;
      continue;
    }
    if (!transcription_fits(s->transcription, opt.time_steps)) {
      ++res.infeasible;
      continue;
    }
    s->image_path = iam_image_path(images_root, s->id).string();
    if (opt.check_images && !std::filesystem::exists(s->image_path)) {
      ++res.missing_images;
      if (opt.log) *opt.log << "warning: missing image " << s->image_path << '\n';
      continue;
    }
    res.samples.push_back(std::move(*s));
  }
  if (opt.log && res.infeasible > 0) {
    *opt.log << "excluded " << res.infeasible << " samples too long for "
             << opt.time_steps << " time steps\n";
  }
  return res;
}

/// Sorted distinct characters across all transcriptions.
inline CharVocab build_vocab(const std::vector<Sample>& samples) {
  if (samples.empty()) throw DataError("build_vocab: no samples");
  std::set<char32_t> chars;
  for (const Sample& s : samples) {
    for (char32_t c : utf8_decode(s.transcription)) chars.insert(c);
  }
  if (chars.size() > CharVocab::kMaxChars) {
    throw DataError("build_vocab: " + std::to_string(chars.size()) +
                    " distinct characters exceed the limit of " +
                    std::to_string(CharVocab::kMaxChars));
  }
  return CharVocab(std::u32string(chars.begin(), chars.end()));
}

struct Split {
  std::vector<Sample> train;
  std::vector<Sample> test;
  std::uint64_t seed = 0;
};

inline Split split_95_5(const std::vector<Sample>& samples, std::uint64_t seed) {
  if (samples.size() < 20) {
    throw DataError("split_95_5: need at least 20 samples, got " +
                    std::to_string(samples.size()));
  }
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  const std::size_t n_test = std::max<std::size_t>(1, samples.size() * 5 / 100);
  const std::size_t n_train = samples.size() - n_test;
  Split split;
  split.seed = seed;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_train ? split.train : split.test).push_back(samples[order[i]]);
  }
  return split;
}

struct ToyJitter {
  double scale = 3.0;            // glyph pixel size
  double scale_jitter = 0.15;    // relative, uniform in [-j, j]
  int spacing_jitter = 2;        // extra pixels between glyphs, uniform in [0, j]
  int vertical_jitter = 3;       // per-glyph offset, uniform in [-j, j]
  double noise = 0.01;           // salt-and-pepper probability per pixel

  static ToyJitter none() { return ToyJitter{3.0, 0.0, 0, 0, 0.0}; }
};

inline void require_toy_glyphs(const std::string& word) {
  if (word.empty()) throw DataError("gen_toy: empty word");
  for (char32_t c : utf8_decode(word)) {
    if (!glyph5x7(c)) {
      std::string ch;
      utf8_append(ch, c);
      throw DataError("gen_toy: no glyph for '" + ch + "' in word '" + word + "'");
    }
  }
}

/// Renders one word in black on a white canvas.
inline GrayImage render_word(const std::string& word, const ToyJitter& j, Rng& rng) {
  require_toy_glyphs(word);
  const std::u32string chars = utf8_decode(word);
  const double scale = j.scale * (1.0 + rng.uniform(-j.scale_jitter, j.scale_jitter));
  const int gw = static_cast<int>(std::lround(5 * scale));
  const int gh = static_cast<int>(std::lround(7 * scale));
  const int gap = static_cast<int>(std::lround(scale));
  const int margin = 4 + j.vertical_jitter;

  std::vector<int> xs, ys;
  int x = margin;
  for (std::size_t i = 0; i < chars.size(); ++i) {
    if (i > 0) x += gap + static_cast<int>(rng.index(static_cast<std::uint64_t>(j.spacing_jitter) + 1));
    xs.push_back(x);
    ys.push_back(margin + static_cast<int>(rng.index(2 * static_cast<std::uint64_t>(j.vertical_jitter) + 1)) -
                 j.vertical_jitter);
    x += gw;
  }
  GrayImage img(gh + 2 * margin, x + margin, 255);
  for (std::size_t i = 0; i < chars.size(); ++i) {
    const Glyph g = *glyph5x7(chars[i]);
    for (int r = 0; r < gh; ++r) {
      const int gr = std::min(6, static_cast<int>(r / scale));
      for (int c = 0; c < gw; ++c) {
        const int gc = std::min(4, static_cast<int>(c / scale));
        if (g[static_cast<std::size_t>(gr)] & (0x10 >> gc)) img.at(ys[i] + r, xs[i] + c) = 0;
      }
    }
  }
  if (j.noise > 0.0) {
    for (auto& p : img.pixels) {
      if (rng.uniform() < j.noise) p = rng.uniform() < 0.5 ? 0 : 255;
    }
  }
  return img;
}

/// `samples_per_word` renders of every word, in word-major order, with ids
/// toy-wNNN-RR-00 so paths follow the IAM hierarchy.
inline std::vector<Sample> gen_toy(const std::vector<std::string>& words,
                                   std::size_t samples_per_word, std::uint64_t seed,
                                   const ToyJitter& jitter = {}) {
  for (const auto& w : words) require_toy_glyphs(w);
  Rng rng(seed);
  std::vector<Sample> out;
  out.reserve(words.size() * samples_per_word);
  for (std::size_t wi = 0; wi < words.size(); ++wi) {
    for (std::size_t r = 0; r < samples_per_word; ++r) {
      char id[64];
      std::snprintf(id, sizeof id, "toy-w%03zu-%02zu-00", wi, r);
      Sample s;
      s.id = id;
      s.transcription = words[wi];
      s.raster = render_word(words[wi], jitter, rng);
      s.fields.w = s.raster->width;
      s.fields.h = s.raster->height;
      out.push_back(std::move(s));
    }
  }
  return out;
}

/// Writes dir/words.txt and dir/words/<form>/<form-part>/<id>.png, loadable
/// with load_iam(dir/words.txt, dir/words).
inline void write_toy_dataset(const std::filesystem::path& dir, const std::vector<Sample>& samples) {
  std::filesystem::create_directories(dir / "words");
  std::ofstream index(dir / "words.txt");
  if (!index) throw DataError("cannot write " + (dir / "words.txt").string());
  index << "# toy word corpus in IAM words.txt layout\n";
  index << "# id result graylevel x y w h tag transcription\n";
  for (const Sample& s : samples) {
    const auto path = iam_image_path(dir / "words", s.id);
    std::filesystem::create_directories(path.parent_path());
    write_png(path.string(), s.image());
    index << format_iam_line(s) << '\n';
  }
  if (!index) throw DataError("failed writing " + (dir / "words.txt").string());
}

/// Thirty short words over lowercase letters used by the overfit check.
inline std::vector<std::string> default_toy_words() {
  return {"the",   "of",    "and",   "to",    "in",    "is",    "was",   "for",
          "that",  "with",  "his",   "he",    "it",    "at",    "by",    "had",
          "from",  "which", "they",  "you",   "were",  "her",   "would", "this",
          "there", "been",  "said",  "have",  "not",   "one"};
}

}  // namespace cdhwr
