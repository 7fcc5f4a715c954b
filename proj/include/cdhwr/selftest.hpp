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

// Brute-force reference implementations and the fast oracle suite behind
// `cdhwr selftest`.

#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "cdhwr/ctc.hpp"
#include "cdhwr/dct.hpp"
#include "cdhwr/gradcheck.hpp"
#include "cdhwr/metrics.hpp"
#include "cdhwr/network.hpp"
#include "cdhwr/random.hpp"

namespace cdhwr::oracle {

/// Direct DCT-II double sum with the codec's normalization.
inline std::vector<double> dct_direct(const std::vector<double>& block, int n) {
  std::vector<double> out(static_cast<std::size_t>(n * n));
  const double pi = std::numbers::pi;
  auto c = [](int k) { return k == 0 ? 1.0 / std::sqrt(2.0) : 1.0; };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
          s += block[static_cast<std::size_t>(x * n + y)] *
               std::cos((2 * x + 1) * i * pi / (2.0 * n)) *
               std::cos((2 * y + 1) * j * pi / (2.0 * n));
      out[static_cast<std::size_t>(i * n + j)] = s * c(i) * c(j) / std::sqrt(2.0 * n);
    }
  }
  return out;
}

/// Collapses a frame path: merge repeats, then drop blanks.
inline std::vector<int> collapse(const std::vector<int>& path, int blank) {
  std::vector<int> out;
  int prev = -1;
  for (int k : path) {
    if (k != prev && k != blank) out.push_back(k);
    prev = k;
  }
  return out;
}

/// Sum over all C^T frame paths collapsing to `label` of the path
/// probability. Feasible only for tiny T and C.
inline double ctc_path_sum(const std::vector<double>& log_probs, std::size_t frames,
                           std::size_t classes, const std::vector<int>& label, int blank) {
  std::vector<int> path(frames, 0);
  double total = 0.0;
  while (true) {
    if (collapse(path, blank) == label) {
      double lp = 0.0;
      for (std::size_t t = 0; t < frames; ++t) lp += log_probs[t * classes + path[t]];
      total += std::exp(lp);
    }
    std::size_t t = 0;
    while (t < frames && ++path[t] == static_cast<int>(classes)) path[t++] = 0;
    if (t == frames) break;
  }
  return total;
}

/// Textbook recursive Levenshtein distance, exponential time.
inline std::size_t edit_distance_recursive(const std::u32string& a, const std::u32string& b) {
  if (a.empty()) return b.size();
  if (b.empty()) return a.size();
  const std::u32string ar = a.substr(1), br = b.substr(1);
  if (a[0] == b[0]) return edit_distance_recursive(ar, br);
  return 1 + std::min({edit_distance_recursive(ar, b), edit_distance_recursive(a, br),
                       edit_distance_recursive(ar, br)});
}

/// Random row-normalized log-probabilities [frames, classes].
inline std::vector<double> random_log_probs(Rng& rng, std::size_t frames, std::size_t classes) {
  std::vector<double> lp(frames * classes);
  for (std::size_t t = 0; t < frames; ++t) {
    double m = -1e300;
    for (std::size_t k = 0; k < classes; ++k) {
      lp[t * classes + k] = 2.0 * rng.normal();
      m = std::max(m, lp[t * classes + k]);
    }
    double s = 0.0;
    for (std::size_t k = 0; k < classes; ++k) s += std::exp(lp[t * classes + k] - m);
    const double lse = m + std::log(s);
    for (std::size_t k = 0; k < classes; ++k) lp[t * classes + k] -= lse;
  }
  return lp;
}

/// Random label of length `u` over non-blank classes [0, classes-1).
inline std::vector<int> random_label(Rng& rng, std::size_t u, std::size_t classes) {
  std::vector<int> l(u);
  for (auto& v : l) v = static_cast<int>(rng.index(classes - 1));
  return l;
}

/// End-to-end mean CTC loss of `model` on a batch, as a function of every
/// parameter tensor in map order.
inline MultiFn network_loss_fn(Hwrcnet<double>& model, const Tensor<double>& input,
                               const std::vector<std::vector<int>>& labels) {
  return [&model, input, labels](Tape<double>& tape, const std::vector<Var>& vars) {
    ParamVars p;
    std::size_t i = 0;
    for (const auto& [name, _] : model.params) p.emplace(name, vars[i++]);
    Hwrcnet<double> local = model;  // running statistics stay untouched
    Var x = tape.constant(input);
    Var lp = model_forward(tape, local, p, x, Mode::kTrain);
    return ctc_loss_mean(tape, lp, labels, static_cast<int>(model.config.num_classes) - 1);
  };
}

}  // namespace cdhwr::oracle

namespace cdhwr {

struct SelftestOptions {
  /// Relative error injected into the forward DCT scale (mutation testing).
  double dct_scale_perturbation = 0.0;
  std::uint64_t seed = 20240601;
};

struct SelftestGroup {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

namespace detail {

inline SelftestGroup run_group(const std::string& name, const std::function<std::string()>& body) {
  SelftestGroup g;
  g.name = name;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    g.detail = body();
    g.passed = g.detail.rfind("FAIL", 0) != 0;
  } catch (const std::exception& e) {
    g.detail = std::string("FAIL exception: ") + e.what();
  }
  g.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return g;
}

inline std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

}  // namespace detail

inline std::vector<SelftestGroup> run_selftest(const SelftestOptions& opt = {}) {
  std::vector<SelftestGroup> groups;

  groups.push_back(detail::run_group("dct round trip", [&] {
    Rng rng(opt.seed);
    double worst = 0.0, worst_direct = 0.0;
    for (int n : {4, 8}) {
      for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> b(static_cast<std::size_t>(n * n));
        for (auto& v : b) v = rng.uniform(-1.0, 1.0);
        std::vector<double> c = forward_block_dct<double>(b, n);
        for (auto& v : c) v *= 1.0 + opt.dct_scale_perturbation;
        const std::vector<double> d = oracle::dct_direct(b, n);
        const std::vector<double> r = inverse_block_dct<double>(c, n);
        for (std::size_t i = 0; i < b.size(); ++i) {
          worst = std::max(worst, std::abs(r[i] - b[i]));
          worst_direct = std::max(worst_direct, std::abs(c[i] - d[i]));
        }
      }
    }
    const std::string s = detail::fmt("max round-trip error %.3g, max error vs direct sum %.3g",
                                      worst, worst_direct);
    return (worst < 1e-10 && worst_direct < 1e-10 ? "" : "FAIL ") + s;
  }));

  groups.push_back(detail::run_group("ctc brute force", [&] {
    Rng rng(opt.seed + 1);
    double worst = 0.0;
    int checked = 0;
    for (int rep = 0; rep < 60; ++rep) {
      const std::size_t classes = 2 + rng.index(3);
      const std::size_t frames = 1 + rng.index(6);
      const std::size_t u = rng.index(4);
      const std::vector<int> label = oracle::random_label(rng, u, classes);
      if (ctc_min_frames(label) > frames) continue;
      const std::vector<double> lp = oracle::random_log_probs(rng, frames, classes);
      const int blank = static_cast<int>(classes) - 1;
      const double p = std::exp(-ctc_loss<double>(lp, frames, classes, label, blank));
      const double ref = oracle::ctc_path_sum(lp, frames, classes, label, blank);
      worst = std::max(worst, std::abs(p - ref));
      ++checked;
    }
    const std::string s =
        detail::fmt("%.0f instances, max |p - brute force| %.3g", checked, worst);
    return (worst < 1e-10 ? "" : "FAIL ") + s;
  }));

  groups.push_back(detail::run_group("edit distance", [&] {
    Rng rng(opt.seed + 2);
    const std::u32string alphabet = U"abcé";
    auto word = [&] {
      std::u32string w(rng.index(6), U'a');
      for (auto& c : w) c = alphabet[rng.index(alphabet.size())];
      return w;
    };
    for (int rep = 0; rep < 200; ++rep) {
      const std::u32string a = word(), b = word(), c = word();
      const std::size_t ab = edit_distance_seq(a, b);
      if (ab != oracle::edit_distance_recursive(a, b)) return std::string("FAIL oracle mismatch");
      if (ab != edit_distance_seq(b, a)) return std::string("FAIL asymmetric");
      if (edit_distance_seq(a, a) != 0) return std::string("FAIL d(a,a) != 0");
      if (edit_distance_seq(a, c) > ab + edit_distance_seq(b, c)) {
        return std::string("FAIL triangle inequality");
      }
    }
    const EvalReport r = make_report({{"hello", "hallo"}, {"world", "world"}});
    if (r.wer != 100.0 - r.wa) return std::string("FAIL wer != 100 - wa");
    return std::string("200 random triples agree with recursion");
  }));

  groups.push_back(detail::run_group("gradients", [&] {
    Rng rng(opt.seed + 3);
    double ctc_worst = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
      const std::size_t classes = 4, frames = 6;
      const std::vector<int> label = oracle::random_label(rng, 1 + rng.index(2), classes);
      Tensor<double> lp(Shape{1, frames, classes}, oracle::random_log_probs(rng, frames, classes));
      ctc_worst = std::max(ctc_worst, grad_check(
                                          [&](Tape<double>& t, Var x) {
                                            return ctc_loss_mean(t, x, {label}, 3);
                                          },
                                          lp));
    }
    const HwrcnetConfig cfg = HwrcnetConfig::tiny();
    Hwrcnet<double> model = init_hwrcnet<double>(cfg, opt.seed);
    for (auto& [name, t] : model.params) {
      if (name.ends_with(".bias") || name.ends_with(".beta")) {
        for (auto& v : t.data()) v = 0.1 * rng.normal();
      }
    }
    Tensor<double> input(Shape{2, cfg.input_h, cfg.input_w, 1});
    for (auto& v : input.data()) v = rng.uniform();
    const std::vector<std::vector<int>> labels = {{1, 2}, {3}};
    std::vector<Tensor<double>> points;
    std::vector<std::vector<std::size_t>> coords;
    for (const auto& [_, t] : model.params) {
      points.push_back(t);
      std::vector<std::size_t> idx;
      for (std::size_t k = 0; k < std::min<std::size_t>(6, t.size()); ++k) {
        idx.push_back(rng.index(t.size()));
      }
      coords.push_back(idx);
    }
    const GradCheckResult net =
        grad_check(oracle::network_loss_fn(model, input, labels), points, 1e-6, coords);
    const std::string s = detail::fmt("ctc max rel error %.3g, network max rel error %.3g",
                                      ctc_worst, net.max_rel_error);
    return (ctc_worst < 1e-6 && net.max_rel_error < 1e-4 ? "" : "FAIL ") + s;
  }));

  return groups;
}

}  // namespace cdhwr
