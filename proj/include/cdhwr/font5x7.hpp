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

// 5x7 bitmap glyphs in the style of the classic LCD character ROM.
// Each glyph is seven rows; bit 4 is the leftmost column.

#pragma once

#include <array>
#include <cstdint>
#include <optional>

namespace cdhwr {

using Glyph = std::array<std::uint8_t, 7>;

inline std::optional<Glyph> glyph5x7(char32_t c) {
  switch (c) {
    case U' ': return Glyph{0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00};
    case U'!': return Glyph{0x04, 0x04, 0x04, 0x04, 0x00, 0x00, 0x04};
    case U'"': return Glyph{0x0A, 0x0A, 0x0A, 0x00, 0x00, 0x00, 0x00};
    case U'#': return Glyph{0x0A, 0x0A, 0x1F, 0x0A, 0x1F, 0x0A, 0x0A};
    case U'&': return Glyph{0x0C, 0x12, 0x14, 0x08, 0x15, 0x12, 0x0D};
    case U'\'': return Glyph{0x0C, 0x04, 0x08, 0x00, 0x00, 0x00, 0x00};
    case U'(': return Glyph{0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02};
    case U')': return Glyph{0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08};
    case U'*': return Glyph{0x00, 0x04, 0x15, 0x0E, 0x15, 0x04, 0x00};
    case U'+': return Glyph{0x00, 0x04, 0x04, 0x1F, 0x04, 0x04, 0x00};
    case U',': return Glyph{0x00, 0x00, 0x00, 0x00, 0x0C, 0x04, 0x08};
    case U'-': return Glyph{0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00};
    case U'.': return Glyph{0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C};
    case U'/': return Glyph{0x00, 0x01, 0x02, 0x04, 0x08, 0x10, 0x00};
    case U'0': return Glyph{0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E};
    case U'1': return Glyph{0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E};
    case U'2': return Glyph{0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F};
    case U'3': return Glyph{0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E};
    case U'4': return Glyph{0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02};
    case U'5': return Glyph{0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E};
    case U'6': return Glyph{0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E};
    case U'7': return Glyph{0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08};
    case U'8': return Glyph{0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E};
    case U'9': return Glyph{0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C};
    case U':': return Glyph{0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00};
    case U';': return Glyph{0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x04, 0x08};
    case U'?': return Glyph{0x0E, 0x11, 0x01, 0x02, 0x04, 0x00, 0x04};
    case U'A': return Glyph{0x0E, 0x11, 0x11, 0x11, 0x1F, 0x11, 0x11};
    case U'B': return Glyph{0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E};
    case U'C': return Glyph{0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E};
    case U'D': return Glyph{0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C};
    case U'E': return Glyph{0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F};
    case U'F': return Glyph{0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10};
    case U'G': return Glyph{0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F};
    case U'H': return Glyph{0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11};
    case U'I': return Glyph{0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E};
    case U'J': return Glyph{0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C};
    case U'K': return Glyph{0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11};
    case U'L': return Glyph{0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F};
    case U'M': return Glyph{0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11};
    case U'N': return Glyph{0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11};
    case U'O': return Glyph{0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E};
    case U'P': return Glyph{0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10};
    case U'Q': return Glyph{0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D};
    case U'R': return Glyph{0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11};
    case U'S': return Glyph{0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E};
    case U'T': return Glyph{0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04};
    case U'U': return Glyph{0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E};
    case U'V': return Glyph{0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04};
    case U'W': return Glyph{0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A};
    case U'X': return Glyph{0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11};
    case U'Y': return Glyph{0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04};
    case U'Z': return Glyph{0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F};
    case U'a': return Glyph{0x00, 0x00, 0x0E, 0x01, 0x0F, 0x11, 0x0F};
    case U'b': return Glyph{0x10, 0x10, 0x16, 0x19, 0x11, 0x11, 0x1E};
    case U'c': return Glyph{0x00, 0x00, 0x0E, 0x10, 0x10, 0x11, 0x0E};
    case U'd': return Glyph{0x01, 0x01, 0x0D, 0x13, 0x11, 0x11, 0x0F};
    case U'e': return Glyph{0x00, 0x00, 0x0E, 0x11, 0x1F, 0x10, 0x0E};
    case U'f': return Glyph{0x06, 0x09, 0x08, 0x1C, 0x08, 0x08, 0x08};
    case U'g': return Glyph{0x00, 0x0F, 0x11, 0x11, 0x0F, 0x01, 0x0E};
    case U'h': return Glyph{0x10, 0x10, 0x16, 0x19, 0x11, 0x11, 0x11};
    case U'i': return Glyph{0x04, 0x00, 0x0C, 0x04, 0x04, 0x04, 0x0E};
    case U'j': return Glyph{0x02, 0x00, 0x06, 0x02, 0x02, 0x12, 0x0C};
    case U'k': return Glyph{0x10, 0x10, 0x12, 0x14, 0x18, 0x14, 0x12};
    case U'l': return Glyph{0x0C, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E};
    case U'm': return Glyph{0x00, 0x00, 0x1A, 0x15, 0x15, 0x11, 0x11};
    case U'n': return Glyph{0x00, 0x00, 0x16, 0x19, 0x11, 0x11, 0x11};
    case U'o': return Glyph{0x00, 0x00, 0x0E, 0x11, 0x11, 0x11, 0x0E};
    case U'p': return Glyph{0x00, 0x00, 0x1E, 0x11, 0x1E, 0x10, 0x10};
    case U'q': return Glyph{0x00, 0x00, 0x0D, 0x13, 0x0F, 0x01, 0x01};
    case U'r': return Glyph{0x00, 0x00, 0x16, 0x19, 0x10, 0x10, 0x10};
    case U's': return Glyph{0x00, 0x00, 0x0E, 0x10, 0x0E, 0x01, 0x1E};
    case U't': return Glyph{0x08, 0x08, 0x1C, 0x08, 0x08, 0x09, 0x06};
    case U'u': return Glyph{0x00, 0x00, 0x11, 0x11, 0x11, 0x13, 0x0D};
    case U'v': return Glyph{0x00, 0x00, 0x11, 0x11, 0x11, 0x0A, 0x04};
    case U'w': return Glyph{0x00, 0x00, 0x11, 0x11, 0x15, 0x15, 0x0A};
    case U'x': return Glyph{0x00, 0x00, 0x11, 0x0A, 0x04, 0x0A, 0x11};
    case U'y': return Glyph{0x00, 0x00, 0x11, 0x11, 0x0F, 0x01, 0x0E};
    case U'z': return Glyph{0x00, 0x00, 0x1F, 0x02, 0x04, 0x08, 0x1F};
    default: return std::nullopt;
  }
}

}  // namespace cdhwr
