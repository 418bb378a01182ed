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

#include "cier/backbone/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

namespace cier::backbone {
namespace {

constexpr char kMagic[8] = {'C', 'I', 'E', 'R', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename U>
void put_le(std::string& out, U value) {
    for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

template <typename U>
U get_le(const std::string& in, std::size_t& pos) {
    if (pos + sizeof(U) > in.size()) throw ParseError("checkpoint truncated");
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        value |= static_cast<U>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
    }
    pos += sizeof(U);
    return value;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open checkpoint: " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

nlohmann::json config_to_json(const BackboneConfig& c) {
    return {{"d_model", c.d_model},
            {"n_layers", c.n_layers},
            {"n_heads", c.n_heads},
            {"ffn_width", c.ffn_width},
            {"context_length", c.context_length},
            {"vocab_size", c.vocab_size},
            {"adapter_rank", c.adapter_rank},
            {"adapter_scale", c.adapter_scale},
            {"adapted_projections", c.adapted_projections},
            {"init_std", c.init_std}};
}

BackboneConfig config_from_json(const nlohmann::json& j) {
    BackboneConfig c;
    c.d_model = j.at("d_model").get<int>();
    c.n_layers = j.at("n_layers").get<int>();
    c.n_heads = j.at("n_heads").get<int>();
    c.ffn_width = j.at("ffn_width").get<int>();
    c.context_length = j.at("context_length").get<int>();
    c.vocab_size = j.at("vocab_size").get<int>();
    c.adapter_rank = j.at("adapter_rank").get<int>();
    c.adapter_scale = j.at("adapter_scale").get<double>();
    c.adapted_projections = j.at("adapted_projections").get<std::vector<std::string>>();
    c.init_std = j.value("init_std", 0.02);
    return c;
}

void save_checkpoint(const std::filesystem::path& path, const Backbone& backbone, std::uint64_t seed,
                     std::uint64_t vocab_hash, const nlohmann::json& metadata) {
    nlohmann::json tensors = nlohmann::json::array();
    for (const Param& p : backbone.params()) {
        tensors.push_back({{"name", p.name}, {"group", to_string(p.group)}, {"rows", p.value.rows()}, {"cols", p.value.cols()}});
    }
    const nlohmann::json header = {{"config", config_to_json(backbone.config())},
                                   {"seed", seed},
                                   {"vocab_hash", to_hex(vocab_hash)},
                                   {"user_ids", backbone.users().ids()},
                                   {"item_ids", backbone.items().ids()},
                                   {"tensors", tensors},
                                   {"metadata", metadata}};
    const std::string header_text = header.dump();

    std::string blob(kMagic, sizeof(kMagic));
    put_le<std::uint32_t>(blob, kVersion);
    put_le<std::uint64_t>(blob, header_text.size());
    blob += header_text;
    for (const Param& p : backbone.params()) {
        for (Eigen::Index i = 0; i < p.value.size(); ++i) {
            put_le<std::uint64_t>(blob, std::bit_cast<std::uint64_t>(p.value.data()[i]));
        }
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write checkpoint: " + path.string());
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!out) throw Error("failed writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path, std::optional<std::uint64_t> expected_vocab_hash) {
    const std::string blob = read_file(path);
    if (blob.size() < sizeof(kMagic) || std::memcmp(blob.data(), kMagic, sizeof(kMagic)) != 0) {
        throw ParseError(path.string() + ": not a checkpoint archive");
    }
    std::size_t pos = sizeof(kMagic);
    const auto version = get_le<std::uint32_t>(blob, pos);
    if (version != kVersion) throw ParseError("unsupported checkpoint version " + std::to_string(version));
    const auto header_len = get_le<std::uint64_t>(blob, pos);
    if (pos + header_len > blob.size()) throw ParseError("checkpoint header truncated");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(blob.substr(pos, header_len));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("checkpoint header: ") + e.what());
    }
    pos += header_len;

    const std::uint64_t stored_hash = std::stoull(header.at("vocab_hash").get<std::string>(), nullptr, 16);
    if (expected_vocab_hash && *expected_vocab_hash != stored_hash) {
        throw ValidationError("checkpoint vocabulary hash " + to_hex(stored_hash) + " does not match tokenizer " +
                              to_hex(*expected_vocab_hash));
    }

    const auto seed = header.at("seed").get<std::uint64_t>();
    Backbone backbone(config_from_json(header.at("config")), header.at("user_ids").get<std::vector<std::string>>(),
                      header.at("item_ids").get<std::vector<std::string>>(), seed);
    const auto& tensors = header.at("tensors");
    if (tensors.size() != backbone.params().size()) throw ParseError("checkpoint tensor count mismatch");
    for (const auto& t : tensors) {
        const auto name = t.at("name").get<std::string>();
        Param& p = backbone.params()[backbone.params().index(name)];
        if (p.value.rows() != t.at("rows").get<Eigen::Index>() || p.value.cols() != t.at("cols").get<Eigen::Index>()) {
            throw ParseError("checkpoint tensor shape mismatch for " + name);
        }
        for (Eigen::Index i = 0; i < p.value.size(); ++i) {
            p.value.data()[i] = std::bit_cast<double>(get_le<std::uint64_t>(blob, pos));
        }
    }
    if (pos != blob.size()) throw ParseError("trailing bytes in checkpoint");
    return Checkpoint{std::move(backbone), seed, stored_hash, header.value("metadata", nlohmann::json::object())};
}

std::string file_hash(const std::filesystem::path& path) { return to_hex(fnv1a64(read_file(path))); }

}  // namespace cier::backbone
