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
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "cdhwr/text.hpp"

namespace cdhwr {

/// Ordered character set; class index i < size() is chars()[i], and the CTC
/// blank takes the last index, size().
class CharVocab {
 public:
  static constexpr std::size_t kMaxChars = 79;

  CharVocab() = default;

  /// Characters must be unique; order defines class indices.
  explicit CharVocab(std::u32string chars) : chars_(std::move(chars)) {
    for (std::size_t i = 0; i < chars_.size(); ++i) {
      if (!index_.emplace(chars_[i], static_cast<int>(i)).second) {
        throw std::invalid_argument("duplicate character in vocabulary");
      }
    }
  }

  static CharVocab from_utf8(const std::string& s) { return CharVocab(utf8_decode(s)); }

  std::size_t size() const { return chars_.size(); }
  int blank() const { return static_cast<int>(chars_.size()); }
  std::size_t num_classes() const { return chars_.size() + 1; }
  const std::u32string& chars() const { return chars_; }
  std::string utf8() const { return utf8_encode(chars_); }

  bool contains(char32_t c) const { return index_.count(c) != 0; }

  /// Class indices of a UTF-8 word; throws on characters outside the set.
  std::vector<int> encode(const std::string& word) const {
    std::vector<int> out;
    for (char32_t c : utf8_decode(word)) {
      auto it = index_.find(c);
      if (it == index_.end()) {
        std::string ch;
        utf8_append(ch, c);
        throw std::invalid_argument("character '" + ch + "' is not in the vocabulary");
      }
      out.push_back(it->second);
    }
    return out;
  }

  /// Inverse of encode; the blank and out-of-range indices are rejected.
  std::string decode(const std::vector<int>& labels) const {
    std::u32string s;
    for (int l : labels) {
      if (l < 0 || static_cast<std::size_t>(l) >= chars_.size()) {
        throw std::out_of_range("label index " + std::to_string(l) + " outside vocabulary");
      }
      s.push_back(chars_[static_cast<std::size_t>(l)]);
    }
    return utf8_encode(s);
  }

  friend bool operator==(const CharVocab& a, const CharVocab& b) { return a.chars_ == b.chars_; }

 private:
  std::u32string chars_;
  std::unordered_map<char32_t, int> index_;
};

}  // namespace cdhwr
