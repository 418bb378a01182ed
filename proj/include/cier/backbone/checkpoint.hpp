// Copyright 2026 The CIER Authors.
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

#ifndef CIER_BACKBONE_CHECKPOINT_HPP_
#define CIER_BACKBONE_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "cier/backbone/backbone.hpp"

namespace cier::backbone {

// Layout:
//   "CIERCKPT" | u32 version | u64 header bytes | header JSON | tensor data
// Tensor data is row-major IEEE-754 binary64, little-endian, in header order.

nlohmann::json config_to_json(const BackboneConfig& config);
BackboneConfig config_from_json(const nlohmann::json& j);

struct Checkpoint {
    Backbone backbone;
    std::uint64_t seed = 0;
    std::uint64_t vocab_hash = 0;
    nlohmann::json metadata;  // caller-owned extras (prompts, ablation flag, ...)
};

void save_checkpoint(const std::filesystem::path& path, const Backbone& backbone, std::uint64_t seed,
                     std::uint64_t vocab_hash, const nlohmann::json& metadata = nlohmann::json::object());

/// Throws ParseError on a corrupt archive and ValidationError when
/// `expected_vocab_hash` is given and differs from the stored hash.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           std::optional<std::uint64_t> expected_vocab_hash = std::nullopt);

/// FNV-1a hash of the checkpoint file bytes.
std::string file_hash(const std::filesystem::path& path);

}  // namespace cier::backbone

#endif  // CIER_BACKBONE_CHECKPOINT_HPP_
