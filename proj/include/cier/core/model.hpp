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

#ifndef CIER_CORE_MODEL_HPP_
#define CIER_CORE_MODEL_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cier/backbone/backbone.hpp"
#include "cier/core/rating.hpp"
#include "cier/corpus/bpe.hpp"

namespace cier::core {

inline constexpr std::size_t kMaxExplanationTokens = 20;

/// Literal prompt texts. The keyword prompt is the explanation prompt with
/// the word "explanation" replaced by "keyword".
struct PromptSet {
    std::string rating = "how would the user rate the item ?";
    std::string explanation = "write the explanation for the rating :";

    std::string keyword() const;
    /// Every prompt text, for inclusion in the tokenizer corpus.
    std::vector<std::string> texts() const;

    bool operator==(const PromptSet&) const = default;
};

struct Span {
    std::size_t begin = 0;
    std::size_t length = 0;
    std::size_t end() const { return begin + length; }
    bool operator==(const Span&) const = default;
};

/// Positions of [user, item, rating slot?, prompt, target] in one sequence.
struct SequenceLayout {
    Span user;
    Span item;
    std::optional<Span> rating_slot;
    Span prompt;
    Span target;

    std::size_t size() const { return target.end(); }
    /// Throws Error unless the spans are contiguous, ordered and the user and
    /// item spans hold one position each.
    void check() const;
};

struct ModelInput {
    SequenceLayout layout;
    backbone::InputSequence slots;
};

/// Context placed in the rating slot: a distribution, or nullopt for the
/// masked (CIER-M) variant which uses the PAD embedding.
using RatingSlot = std::optional<RatingDistribution>;

struct GenerationResult {
    RatingDistribution distribution;
    double score = 0.0;
    std::vector<TokenId> explanation_ids;
    std::string explanation_text;

    bool operator==(const GenerationResult&) const = default;
};

/// Backbone plus tokenizer plus prompts: rating head, soft-rating embedding
/// and rating-aware generation.
class CierModel {
public:
    /// `mask_rating` selects the CIER-M ablation.
    CierModel(backbone::Backbone backbone, corpus::BpeModel bpe, PromptSet prompts = {}, bool mask_rating = false);

    backbone::Backbone& backbone() { return backbone_; }
    const backbone::Backbone& backbone() const { return backbone_; }
    const corpus::BpeModel& tokenizer() const { return bpe_; }
    const Verbalizer& verbalizer() const { return verbalizer_; }
    const PromptSet& prompts() const { return prompts_; }
    bool masks_rating() const { return mask_rating_; }

    const std::vector<TokenId>& rating_prompt_ids() const { return rating_prompt_; }
    const std::vector<TokenId>& explanation_prompt_ids() const { return explanation_prompt_; }
    const std::vector<TokenId>& keyword_prompt_ids() const { return keyword_prompt_; }

    /// [user, item, rating prompt]
    ModelInput build_rating_input(std::string_view user_id, std::string_view item_id) const;

    /// [user, item, rating slot, prompt, targets]. A nullopt slot (or a model
    /// built with mask_rating) puts the PAD embedding in the rating slot.
    ModelInput build_explanation_input(std::string_view user_id, std::string_view item_id, const RatingSlot& rating,
                                       const std::vector<TokenId>& prompt, const std::vector<TokenId>& targets) const;

    /// The five verbalizer logits taken from one row of backbone logits.
    std::array<double, kRatingClasses> verbalizer_logits(const backbone::RowVector& logits) const;

    RatingDistribution predict_rating(std::string_view user_id, std::string_view item_id) const;

    /// Soft rating embedding: sum_x p_x * Embedding(V(x)).
    backbone::RowVector sr2we(const RatingDistribution& dist) const;
    backbone::InputSlot rating_slot(const RatingSlot& rating) const;

    /// predict_rating -> rating_score -> sr2we -> greedy decoding until EOS or
    /// `max_len` tokens.
    GenerationResult infer(std::string_view user_id, std::string_view item_id,
                           std::size_t max_len = kMaxExplanationTokens) const;

    /// Greedy decoding from an explicit rating-slot context.
    std::vector<TokenId> generate(std::string_view user_id, std::string_view item_id, const RatingSlot& rating,
                                  std::size_t max_len = kMaxExplanationTokens) const;

    /// Explanation (or keyword) target: at most kMaxExplanationTokens tokens plus EOS.
    std::vector<TokenId> text_target(std::string_view text) const;

    nlohmann::json metadata() const;
    void save(const std::filesystem::path& path, std::uint64_t seed) const;
    /// Verifies that the checkpoint was trained with `bpe`.
    static CierModel load(const std::filesystem::path& path, corpus::BpeModel bpe);

private:
    backbone::Backbone backbone_;
    corpus::BpeModel bpe_;
    Verbalizer verbalizer_;
    PromptSet prompts_;
    bool mask_rating_;
    std::vector<TokenId> rating_prompt_;
    std::vector<TokenId> explanation_prompt_;
    std::vector<TokenId> keyword_prompt_;
};

}  // namespace cier::core

#endif  // CIER_CORE_MODEL_HPP_
