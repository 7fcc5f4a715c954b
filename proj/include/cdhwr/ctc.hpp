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

// Connectionist temporal classification: forward-backward loss over the
// blank-interleaved label lattice (log space), its gradient, and decoders.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdhwr/metrics.hpp"
#include "cdhwr/tape.hpp"
#include "cdhwr/vocab.hpp"

namespace cdhwr {

/// The label cannot be emitted in the available number of frames.
class CtcInfeasible : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

inline double log_add(double a, double b) {
  if (a == kLogZero) return b;
  if (b == kLogZero) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

/// Fewest frames that can emit `label`: one per symbol plus a separating
/// blank between each adjacent repeated pair.
inline std::size_t ctc_min_frames(std::span<const int> label) {
  std::size_t n = label.size();
  for (std::size_t i = 1; i < label.size(); ++i) n += label[i] == label[i - 1];
  return n;
}

/// Log-space alpha/beta over the extended label (blank, l1, blank, ...,
/// lU, blank). Both tables include the emission at their own frame, so
/// log p(Y|X) = logsumexp of alpha over the two final states at frame T-1
/// and of beta over the two initial states at frame 0.
struct CtcLattice {
  std::size_t frames = 0;
  std::vector<int> ext;
  std::vector<double> alpha;  // [frames][ext.size()]
  std::vector<double> beta;
  double log_likelihood_alpha = kLogZero;
  double log_likelihood_beta = kLogZero;

  double a(std::size_t t, std::size_t s) const { return alpha[t * ext.size() + s]; }
  double b(std::size_t t, std::size_t s) const { return beta[t * ext.size() + s]; }
};

template <class T>
CtcLattice ctc_lattice(std::span<const T> log_probs, std::size_t frames,
                       std::size_t classes, std::span<const int> label, int blank) {
  if (frames == 0 || log_probs.size() != frames * classes) {
    throw ShapeError("ctc: log_probs must be [T,C] with T >= 1");
  }
  if (blank < 0 || static_cast<std::size_t>(blank) >= classes) {
    throw std::invalid_argument("ctc: blank index outside class range");
  }
  for (int l : label) {
    if (l < 0 || static_cast<std::size_t>(l) >= classes || l == blank) {
      throw std::invalid_argument("ctc: label index " + std::to_string(l) +
                                  " invalid (blank is " + std::to_string(blank) + ")");
    }
  }
  const std::size_t need = ctc_min_frames(label);
  if (need > frames) {
    throw CtcInfeasible("ctc: label of length " + std::to_string(label.size()) + " needs " +
                        std::to_string(need) + " frames, only " + std::to_string(frames) +
                        " available");
  }

  CtcLattice lat;
  lat.frames = frames;
  lat.ext.reserve(2 * label.size() + 1);
  lat.ext.push_back(blank);
  for (int l : label) {
    lat.ext.push_back(l);
    lat.ext.push_back(blank);
  }
  const std::size_t S = lat.ext.size();
  auto lp = [&](std::size_t t, int k) {
    return static_cast<double>(log_probs[t * classes + static_cast<std::size_t>(k)]);
  };
  auto skip_allowed = [&](std::size_t s) {
    return s >= 2 && lat.ext[s] != blank && lat.ext[s] != lat.ext[s - 2];
  };

  lat.alpha.assign(frames * S, kLogZero);
  lat.alpha[0] = lp(0, lat.ext[0]);
  if (S > 1) lat.alpha[1] = lp(0, lat.ext[1]);
  for (std::size_t t = 1; t < frames; ++t) {
    const double* prev = &lat.alpha[(t - 1) * S];
    double* cur = &lat.alpha[t * S];
    for (std::size_t s = 0; s < S; ++s) {
      double v = prev[s];
      if (s >= 1) v = log_add(v, prev[s - 1]);
      if (skip_allowed(s)) v = log_add(v, prev[s - 2]);
      cur[s] = v == kLogZero ? kLogZero : v + lp(t, lat.ext[s]);
    }
  }

  lat.beta.assign(frames * S, kLogZero);
  lat.beta[(frames - 1) * S + S - 1] = lp(frames - 1, lat.ext[S - 1]);
  if (S > 1) lat.beta[(frames - 1) * S + S - 2] = lp(frames - 1, lat.ext[S - 2]);
  for (std::size_t t = frames - 1; t-- > 0;) {
    const double* next = &lat.beta[(t + 1) * S];
    double* cur = &lat.beta[t * S];
    for (std::size_t s = 0; s < S; ++s) {
      double v = next[s];
      if (s + 1 < S) v = log_add(v, next[s + 1]);
      if (s + 2 < S && skip_allowed(s + 2)) v = log_add(v, next[s + 2]);
      cur[s] = v == kLogZero ? kLogZero : v + lp(t, lat.ext[s]);
    }
  }

  const double* last = &lat.alpha[(frames - 1) * S];
  lat.log_likelihood_alpha = S > 1 ? log_add(last[S - 1], last[S - 2]) : last[S - 1];
  lat.log_likelihood_beta = S > 1 ? log_add(lat.beta[0], lat.beta[1]) : lat.beta[0];
  return lat;
}

/// -log p(label | log_probs) for one [T, C] sequence.
template <class T>
double ctc_loss(std::span<const T> log_probs, std::size_t frames, std::size_t classes,
                std::span<const int> label, int blank) {
  return -ctc_lattice(log_probs, frames, classes, label, blank).log_likelihood_alpha;
}

/// Posterior occupancy gamma[t][k]: expected share of frame t spent on
/// class k over all alignments of the label. Rows sum to 1.
template <class T>
std::vector<double> ctc_occupancy(std::span<const T> log_probs, std::size_t frames,
                                  std::size_t classes, std::span<const int> label, int blank) {
  const CtcLattice lat = ctc_lattice(log_probs, frames, classes, label, blank);
  const std::size_t S = lat.ext.size();
  const double ll = lat.log_likelihood_alpha;
  std::vector<double> gamma(frames * classes, 0.0);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t s = 0; s < S; ++s) {
      const double ab = lat.a(t, s) + lat.b(t, s);
      if (ab == kLogZero || std::isnan(ab)) continue;
      const std::size_t k = static_cast<std::size_t>(lat.ext[s]);
      gamma[t * classes + k] +=
          std::exp(ab - static_cast<double>(log_probs[t * classes + k]) - ll);
    }
  }
  return gamma;
}

/// Gradient of ctc_loss with respect to log_probs, i.e. -gamma.
template <class T>
std::vector<double> ctc_grad(std::span<const T> log_probs, std::size_t frames,
                             std::size_t classes, std::span<const int> label, int blank) {
  std::vector<double> g = ctc_occupancy(log_probs, frames, classes, label, blank);
  for (auto& v : g) v = -v;
  return g;
}

/// Mean CTC loss over a batch of log-probability sequences [N, T, C].
template <class T>
Var ctc_loss_mean(Tape<T>& tape, Var log_probs, const std::vector<std::vector<int>>& labels,
                  int blank) {
  const Shape& s = tape.shape(log_probs);
  if (s.size() != 3 || s[0] != labels.size()) {
    throw ShapeError("ctc_loss_mean: log_probs " + shape_str(s) + " does not match " +
                     std::to_string(labels.size()) + " labels");
  }
  const std::size_t n = s[0], frames = s[1], classes = s[2];
  const std::size_t per = frames * classes;
  auto grads = std::make_shared<std::vector<double>>(n * per);
  const T* lp = tape.value(log_probs).ptr();
  double total = 0.0;
  for (std::size_t b = 0; b < n; ++b) {
    std::span<const T> seq(lp + b * per, per);
    const CtcLattice lat = ctc_lattice(seq, frames, classes, labels[b], blank);
    total += -lat.log_likelihood_alpha;
    const std::vector<double> g = ctc_grad(seq, frames, classes, labels[b], blank);
    std::copy(g.begin(), g.end(), grads->begin() + static_cast<std::ptrdiff_t>(b * per));
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  return tape.record(
      Tensor<T>::scalar(static_cast<T>(total * inv_n)), {log_probs},
      [log_probs, grads, inv_n](Tape<T>& t, Var self) {
        const double up = t.grad_mut(self)[0];
        Tensor<T>& dx = t.grad_mut(log_probs);
        for (std::size_t i = 0; i < dx.size(); ++i)
          dx[i] += static_cast<T>((*grads)[i] * inv_n * up);
      },
      "ctc_loss_mean");
}

/// Argmax per frame (first index on ties), merge repeats, drop blanks.
template <class T>
std::vector<int> best_path_labels(std::span<const T> log_probs, std::size_t frames,
                                  std::size_t classes, int blank) {
  std::vector<int> out;
  int prev = -1;
  for (std::size_t t = 0; t < frames; ++t) {
    const T* row = log_probs.data() + t * classes;
    const int k = static_cast<int>(std::max_element(row, row + classes) - row);
    if (k != prev && k != blank) out.push_back(k);
    prev = k;
  }
  return out;
}

template <class T>
std::string decode_best_path(std::span<const T> log_probs, std::size_t frames,
                             const CharVocab& vocab) {
  return vocab.decode(best_path_labels(log_probs, frames, vocab.num_classes(), vocab.blank()));
}

/// Prefix beam search over label sequences; ranks prefixes by total
/// posterior, ties broken by lexicographic order of the label indices.
template <class T>
std::vector<int> beam_labels(std::span<const T> log_probs, std::size_t frames,
                             std::size_t classes, int blank, std::size_t beam_width = 25) {
  if (beam_width == 0) throw std::invalid_argument("decode_beam: beam width must be >= 1");
  struct Score {
    double blank = kLogZero;
    double label = kLogZero;
    double total() const { return log_add(blank, label); }
  };
  using Beam = std::map<std::vector<int>, Score>;
  Beam beam;
  beam[{}] = Score{0.0, kLogZero};
  for (std::size_t t = 0; t < frames; ++t) {
    const T* row = log_probs.data() + t * classes;
    Beam next;
    for (const auto& [prefix, sc] : beam) {
      const double tot = sc.total();
      Score& same = next[prefix];
      same.blank = log_add(same.blank, tot + static_cast<double>(row[blank]));
      if (!prefix.empty()) {
        // Repeating the last symbol without a blank keeps the prefix.
        same.label = log_add(same.label, sc.label + static_cast<double>(row[prefix.back()]));
      }
      for (std::size_t k = 0; k < classes; ++k) {
        const int c = static_cast<int>(k);
        if (c == blank) continue;
        std::vector<int> ext = prefix;
        ext.push_back(c);
        Score& grow = next[ext];
        const double from = (!prefix.empty() && prefix.back() == c) ? sc.blank : tot;
        grow.label = log_add(grow.label, from + static_cast<double>(row[k]));
      }
    }
    std::vector<std::pair<std::vector<int>, Score>> ranked(next.begin(), next.end());
    // std::map iteration is already lexicographic; stable_sort keeps that on ties.
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      return a.second.total() > b.second.total();
    });
    if (ranked.size() > beam_width) ranked.resize(beam_width);
    beam = Beam(ranked.begin(), ranked.end());
  }
  const std::vector<int>* best = nullptr;
  double best_score = kLogZero;
  for (const auto& [prefix, sc] : beam) {
    if (best == nullptr || sc.total() > best_score) {
      best = &prefix;
      best_score = sc.total();
    }
  }
  return *best;
}

template <class T>
std::string decode_beam(std::span<const T> log_probs, std::size_t frames, const CharVocab& vocab,
                        std::size_t beam_width = 25) {
  return vocab.decode(
      beam_labels(log_probs, frames, vocab.num_classes(), vocab.blank(), beam_width));
}

/// Nearest lexicon word by edit distance; earlier entries win ties.
inline std::string lexicon_correct(const std::string& word, const std::vector<std::string>& lexicon) {
  if (lexicon.empty()) throw std::invalid_argument("lexicon_correct: empty lexicon");
  std::size_t best = 0;
  std::size_t best_dist = std::numeric_limits<std::size_t>::max();
  for (std::size_t i = 0; i < lexicon.size(); ++i) {
    const std::size_t d = edit_distance(word, lexicon[i]);
    if (d < best_dist) {
      best = i;
      best_dist = d;
      if (d == 0) break;
    }
  }
  return lexicon[best];
}

}  // namespace cdhwr
