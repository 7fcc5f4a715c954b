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

// Checkpoint file layout:
//   "HWRC" | u32 version | u32 header length | UTF-8 JSON header | blocks
// The header lists every block by name and shape in storage order; each
// block is the row-major little-endian float32 data of that shape.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cdhwr/input.hpp"
#include "cdhwr/network.hpp"
#include "cdhwr/optim.hpp"
#include "cdhwr/vocab.hpp"

namespace cdhwr {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  Hwrcnet<float> model;
  CharVocab vocab;
  InputSpec input;
  std::uint64_t step = 0;
  std::uint64_t seed = 0;
  std::optional<AdamState<float>> adam;
};

namespace detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw CheckpointError("checkpoint truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

inline void put_block(std::ostream& out, const Tensor<float>& t) {
  std::vector<unsigned char> buf(t.size() * 4);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(t[i]);
    for (int k = 0; k < 4; ++k) buf[4 * i + k] = static_cast<unsigned char>(bits >> (8 * k));
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

inline Tensor<float> get_block(std::istream& in, const Shape& shape) {
  Tensor<float> t(shape);
  std::vector<unsigned char> buf(t.size() * 4);
  if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
    throw CheckpointError("checkpoint truncated in parameter data");
  }
  for (std::size_t i = 0; i < t.size(); ++i) {
    std::uint32_t bits = 0;
    for (int k = 0; k < 4; ++k) bits |= static_cast<std::uint32_t>(buf[4 * i + k]) << (8 * k);
    t[i] = std::bit_cast<float>(bits);
  }
  return t;
}

}  // namespace detail

inline void write_checkpoint(std::ostream& out, const Checkpoint& ck) {
  std::vector<std::pair<std::string, const Tensor<float>*>> blocks;
  for (const auto& [name, t] : ck.model.params) blocks.emplace_back("param/" + name, &t);
  for (const auto& [name, s] : ck.model.bn_stats) {
    if (!s.ready()) continue;
    blocks.emplace_back("bn/" + name + "/mean", &s.mean);
    blocks.emplace_back("bn/" + name + "/var", &s.var);
  }
  if (ck.adam) {
    for (const auto& [name, t] : ck.adam->m) blocks.emplace_back("adam_m/" + name, &t);
    for (const auto& [name, t] : ck.adam->v) blocks.emplace_back("adam_v/" + name, &t);
  }
  nlohmann::json listing = nlohmann::json::array();
  for (const auto& [name, t] : blocks) listing.push_back({{"name", name}, {"shape", t->shape()}});
  nlohmann::json header = {
      {"config", ck.model.config.to_json()},
      {"vocabulary", ck.vocab.utf8()},
      {"step", ck.step},
      {"seed", ck.seed},
      {"input_mode", to_string(ck.input.mode)},
      {"quality", ck.input.quality},
      {"init", kInitScheme},
      {"optimizer_state", ck.adam.has_value()},
      {"adam_step", ck.adam ? ck.adam->step : 0},
      {"blocks", listing},
  };
  const std::string text = header.dump();
  out.write("HWRC", 4);
  detail::put_u32(out, kCheckpointVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [_, t] : blocks) detail::put_block(out, *t);
  if (!out) throw CheckpointError("failed writing checkpoint");
}

inline Checkpoint read_checkpoint(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "HWRC", 4) != 0) {
    throw CheckpointError("not a checkpoint (bad magic)");
  }
  const std::uint32_t version = detail::get_u32(in);
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t len = detail::get_u32(in);
  std::string text(len, '\0');
  if (!in.read(text.data(), len)) throw CheckpointError("checkpoint truncated in header");
  Checkpoint ck;
  try {
    const nlohmann::json h = nlohmann::json::parse(text);
    ck.model.config = HwrcnetConfig::from_json(h.at("config"));
    ck.vocab = CharVocab::from_utf8(h.at("vocabulary").get<std::string>());
    ck.step = h.at("step").get<std::uint64_t>();
    ck.seed = h.at("seed").get<std::uint64_t>();
    ck.input.mode = parse_input_mode(h.at("input_mode").get<std::string>());
    ck.input.quality = h.at("quality").get<int>();
    if (h.at("optimizer_state").get<bool>()) {
      ck.adam.emplace();
      ck.adam->step = h.at("adam_step").get<std::uint64_t>();
    }
    for (const auto& b : h.at("blocks")) {
      const std::string name = b.at("name").get<std::string>();
      Tensor<float> t = detail::get_block(in, b.at("shape").get<Shape>());
      const auto slash = name.find('/');
      const std::string kind = name.substr(0, slash), rest = name.substr(slash + 1);
      if (kind == "param") {
        ck.model.params.emplace(rest, std::move(t));
      } else if (kind == "bn") {
        const auto s2 = rest.rfind('/');
        auto& st = ck.model.bn_stats[rest.substr(0, s2)];
        (rest.substr(s2 + 1) == "mean" ? st.mean : st.var) = std::move(t);
      } else if (kind == "adam_m" && ck.adam) {
        ck.adam->m.emplace(rest, std::move(t));
      } else if (kind == "adam_v" && ck.adam) {
        ck.adam->v.emplace(rest, std::move(t));
      } else {
        throw CheckpointError("unknown block " + name);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("bad checkpoint header: ") + e.what());
  }
  // Stages with batch norm always carry a stats entry, ready or not.
  for (std::size_t i = 0; i < ck.model.config.stages.size(); ++i) {
    if (ck.model.config.stages[i].batchnorm) ck.model.bn_stats[stage_name(i) + ".bn"];
  }
  const auto expected = init_hwrcnet<float>(ck.model.config, 0);
  for (const auto& [name, t] : expected.params) {
    auto it = ck.model.params.find(name);
    if (it == ck.model.params.end()) throw CheckpointError("checkpoint lacks parameter " + name);
    if (it->second.shape() != t.shape()) {
      throw CheckpointError("parameter " + name + " has shape " + shape_str(it->second.shape()) +
                            ", config expects " + shape_str(t.shape()));
    }
  }
  if (ck.model.params.size() != expected.params.size()) {
    throw CheckpointError("checkpoint has unexpected parameters");
  }
  if (ck.vocab.num_classes() != ck.model.config.num_classes) {
    throw CheckpointError("vocabulary size does not match the model's class count");
  }
  return ck;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw CheckpointError("cannot write " + tmp);
    write_checkpoint(out, ck);
  }
  std::filesystem::rename(tmp, path);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

}  // namespace cdhwr
