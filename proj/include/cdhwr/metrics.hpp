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
#include <cstdio>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cdhwr/text.hpp"

namespace cdhwr {

/// Unit-cost Levenshtein distance over any sequence of comparable items.
template <class Seq>
std::size_t edit_distance_seq(const Seq& a, const Seq& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

/// Edit distance between UTF-8 strings, counted in Unicode scalar values.
inline std::size_t edit_distance(std::string_view a, std::string_view b) {
  return edit_distance_seq(utf8_decode(a), utf8_decode(b));
}

inline std::size_t char_count(std::string_view s) { return utf8_decode(s).size(); }

/// (ground truth, prediction)
using TextPair = std::pair<std::string, std::string>;

/// Character error rate in percent; may exceed 100.
inline double cer(const std::vector<TextPair>& pairs) {
  if (pairs.empty()) throw std::invalid_argument("cer: no pairs");
  std::size_t dist = 0, chars = 0;
  for (const auto& [gt, pt] : pairs) {
    dist += edit_distance(gt, pt);
    chars += char_count(gt);
  }
  if (chars == 0) throw std::invalid_argument("cer: ground truth has no characters");
  return 100.0 * static_cast<double>(dist) / static_cast<double>(chars);
}

/// Word accuracy (distance 0) and flexible word accuracy (distance <= 2),
/// both in percent.
inline std::pair<double, double> wa_waf(const std::vector<TextPair>& pairs) {
  if (pairs.empty()) throw std::invalid_argument("wa_waf: no pairs");
  std::size_t exact = 0, near = 0;
  for (const auto& [gt, pt] : pairs) {
    const std::size_t d = edit_distance(gt, pt);
    exact += d == 0;
    near += d <= 2;
  }
  const double n = static_cast<double>(pairs.size());
  return {100.0 * exact / n, 100.0 * near / n};
}

struct EvalReport {
  double cer = 0.0;
  double wer = 0.0;
  double wa = 0.0;
  double waf = 0.0;
  std::size_t samples = 0;
  std::size_t gt_chars = 0;
  std::size_t exact = 0;
  std::size_t within2 = 0;
};

inline EvalReport make_report(const std::vector<TextPair>& pairs) {
  if (pairs.empty()) throw std::invalid_argument("make_report: no pairs");
  EvalReport r;
  std::size_t dist = 0;
  for (const auto& [gt, pt] : pairs) {
    const std::size_t d = edit_distance(gt, pt);
    dist += d;
    r.gt_chars += char_count(gt);
    r.exact += d == 0;
    r.within2 += d <= 2;
  }
  if (r.gt_chars == 0) throw std::invalid_argument("make_report: ground truth has no characters");
  r.samples = pairs.size();
  const double n = static_cast<double>(r.samples);
  r.cer = 100.0 * static_cast<double>(dist) / static_cast<double>(r.gt_chars);
  r.wa = 100.0 * static_cast<double>(r.exact) / n;
  r.wer = 100.0 - r.wa;
  r.waf = 100.0 * static_cast<double>(r.within2) / n;
  return r;
}

inline nlohmann::json to_json(const EvalReport& r) {
  return nlohmann::json{{"cer", r.cer},
                        {"wer", r.wer},
                        {"wa", r.wa},
                        {"waf", r.waf},
                        {"counts",
                         {{"samples", r.samples},
                          {"gt_chars", r.gt_chars},
                          {"exact", r.exact},
                          {"within2", r.within2}}}};
}

inline std::string format_table(const EvalReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "+--------+---------+\n"
                "| metric |   value |\n"
                "+--------+---------+\n"
                "| WA     | %7.2f |\n"
                "| WAF    | %7.2f |\n"
                "| WER    | %7.2f |\n"
                "| CER    | %7.2f |\n"
                "+--------+---------+\n"
                "samples=%zu gt_chars=%zu exact=%zu within2=%zu\n",
                r.wa, r.waf, r.wer, r.cer, r.samples, r.gt_chars, r.exact, r.within2);
  return buf;
}

}  // namespace cdhwr
