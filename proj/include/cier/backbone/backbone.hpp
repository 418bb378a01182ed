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

#ifndef CIER_BACKBONE_BACKBONE_HPP_
#define CIER_BACKBONE_BACKBONE_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "cier/backbone/parameters.hpp"
#include "cier/common.hpp"

namespace cier::backbone {

struct BackboneConfig {
    int d_model = 128;
    int n_layers = 2;
    int n_heads = 4;
    int ffn_width = 512;
    int context_length = 64;
    int vocab_size = 0;
    int adapter_rank = 0;
    double adapter_scale = 1.0;
    std::vector<std::string> adapted_projections = {"q", "v"};  // any of q, k, v, o
    double init_std = 0.02;

    /// Throws ValidationError on inconsistent sizes.
    void validate() const;

    /// Checks that [user, item, rating slot, prompt, explanation] fits.
    void validate_layout(std::size_t prompt_tokens, std::size_t max_explanation_tokens) const;

    bool operator==(const BackboneConfig&) const = default;
};

enum class TrainMode { kFull, kAdapter };

/// Maps opaque user or item ids to table rows. Ids unseen at construction map
/// to the trailing cold-start row.
class IdTable {
public:
    IdTable() = default;
    explicit IdTable(std::vector<std::string> ids);

    Eigen::Index row(std::string_view id) const;
    bool contains(std::string_view id) const;
    Eigen::Index cold_start_row() const { return static_cast<Eigen::Index>(ids_.size()); }
    /// Rows in the embedding table, including the cold-start row.
    Eigen::Index rows() const { return static_cast<Eigen::Index>(ids_.size()) + 1; }
    const std::vector<std::string>& ids() const { return ids_; }

private:
    std::vector<std::string> ids_;
    std::map<std::string, Eigen::Index, std::less<>> rows_;
};

/// One input position expressed as a weighted sum of parameter rows, so the
/// gradient of the input embedding can be routed back to its sources.
struct SlotTerm {
    std::size_t param;
    Eigen::Index row;
    double weight;
};

struct InputSlot {
    std::vector<SlotTerm> terms;
};

using InputSequence = std::vector<InputSlot>;

struct LayerNormCache {
    Matrix xhat;
    Vector rstd;
};

struct LayerCache {
    Matrix input;
    LayerNormCache ln1;
    Matrix h1;
    Matrix q, k, v;
    Matrix lora_q, lora_k, lora_v, lora_o;  // X·Aᵀ for adapted projections
    std::vector<Matrix> probs;              // per head, T x T
    Matrix attn;                            // concatenated head outputs
    Matrix x1;
    LayerNormCache ln2;
    Matrix h2;
    Matrix ffn_pre;
    Matrix ffn_act;
};

struct ForwardCache {
    std::vector<LayerCache> layers;
    LayerNormCache ln_f;
    Matrix final_hidden;
    bool last_only = false;
};

/// Dense matrix-vector projection with an optional low-rank adapter:
/// W x + scale * B (A x). `A` is r x in, `B` is out x r. r = 0 disables it.
Vector adapted_projection(const Vector& x, const Matrix& W, const Matrix& A, const Matrix& B, double scale);

struct EmbeddedIds {
    RowVector user;
    RowVector item;
    Matrix tokens;
};

/// Pre-LayerNorm causal transformer decoder over embedding sequences, with
/// user and item id tables and optional low-rank adapters.
class Backbone {
public:
    Backbone(BackboneConfig config, std::vector<std::string> user_ids, std::vector<std::string> item_ids,
             std::uint64_t seed);

    const BackboneConfig& config() const { return config_; }
    ParameterSet& params() { return params_; }
    const ParameterSet& params() const { return params_; }
    const IdTable& users() const { return users_; }
    const IdTable& items() const { return items_; }

    std::size_t token_embedding() const { return tok_emb_; }
    std::size_t user_table() const { return user_emb_; }
    std::size_t item_table() const { return item_emb_; }
    std::size_t lm_head() const { return lm_head_; }

    /// Logits for every position (or only the last when `last_only`).
    /// Position embeddings are added here. Throws ValidationError on empty or
    /// overlong input.
    Matrix forward(const Matrix& embeddings, ForwardCache* cache = nullptr, bool last_only = false) const;

    /// Accumulates parameter gradients and returns d(loss)/d(embeddings).
    Matrix backward(const ForwardCache& cache, const Matrix& dlogits);

    /// Rows of the user table, item table and token embedding for the given ids.
    EmbeddedIds embed(std::string_view user_id, std::string_view item_id, const std::vector<TokenId>& token_ids) const;

    InputSlot user_slot(std::string_view user_id) const;
    InputSlot item_slot(std::string_view item_id) const;
    InputSlot token_slot(TokenId id) const;

    Matrix materialize(const InputSequence& sequence) const;
    void scatter_gradient(const InputSequence& sequence, const Matrix& d_embeddings);

    /// Indices of trainable tensors. Adapter mode yields exactly the adapter
    /// factors plus the user and item tables, and requires adapter_rank > 0.
    std::vector<std::size_t> trainable_parameters(TrainMode mode) const;

private:
    struct Projection {
        std::size_t weight;
        std::size_t lora_a = SIZE_MAX;
        std::size_t lora_b = SIZE_MAX;
        bool adapted() const { return lora_a != SIZE_MAX; }
    };
    struct LayerParams {
        std::size_t ln1_gain, ln1_bias;
        Projection q, k, v, o;
        std::size_t ln2_gain, ln2_bias;
        std::size_t up_w, up_b, down_w, down_b;
    };

    Matrix project(const Projection& p, const Matrix& x, Matrix* lora_cache) const;
    Matrix project_backward(const Projection& p, const Matrix& x, const Matrix& lora_cache, const Matrix& dout);

    BackboneConfig config_;
    IdTable users_;
    IdTable items_;
    ParameterSet params_;
    std::size_t tok_emb_ = 0, pos_emb_ = 0, user_emb_ = 0, item_emb_ = 0;
    std::vector<LayerParams> layers_;
    std::size_t lnf_gain_ = 0, lnf_bias_ = 0, lm_head_ = 0;
};

}  // namespace cier::backbone

#endif  // CIER_BACKBONE_BACKBONE_HPP_
