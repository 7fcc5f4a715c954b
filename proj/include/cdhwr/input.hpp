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

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdhwr/dct.hpp"
#include "cdhwr/image.hpp"
#include "cdhwr/preprocess.hpp"

namespace cdhwr {

enum class InputMode { kNormal, kDct8, kDct4 };

inline std::string to_string(InputMode m) {
  switch (m) {
    case InputMode::kNormal: return "normal";
    case InputMode::kDct8: return "dct8";
    case InputMode::kDct4: return "dct4";
  }
  return "?";
}

inline InputMode parse_input_mode(const std::string& s) {
  if (s == "normal") return InputMode::kNormal;
  if (s == "dct8") return InputMode::kDct8;
  if (s == "dct4") return InputMode::kDct4;
  throw std::invalid_argument("unknown input mode '" + s + "' (normal, dct8, dct4)");
}

inline int block_size_of(InputMode m) {
  return m == InputMode::kDct8 ? 8 : m == InputMode::kDct4 ? 4 : 0;
}

/// How an image becomes the network's 128x32 plane. quality 0 means the
/// DCT modes keep unquantized coefficients.
struct InputSpec {
  InputMode mode = InputMode::kNormal;
  int quality = 0;

  friend bool operator==(const InputSpec&, const InputSpec&) = default;
};

inline std::vector<float> network_input(const ModelInput& in, const InputSpec& spec) {
  if (spec.mode == InputMode::kNormal) return in.raster;
  const int block = block_size_of(spec.mode);
  std::optional<QuantTable> table;
  if (spec.quality != 0) table = jpeg_quant_table(block, spec.quality);
  return network_plane(compress_image(in, block, table ? &*table : nullptr));
}

inline std::vector<float> network_input(const GrayImage& img, const InputSpec& spec) {
  return network_input(preprocess(img), spec);
}

}  // namespace cdhwr
