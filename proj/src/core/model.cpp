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

#include "cier/core/model.hpp"

#include <limits>
#include <regex>

#include "cier/backbone/checkpoint.hpp"

namespace cier::core {

using backbone::InputSlot;
using backbone::Matrix;
using backbone::RowVector;

std::string PromptSet::keyword() const {
    static const std::regex word(R"(\bexplanation\b)");
    return std::regex_replace(explanation, word, "keyword");
}

std::vector<std::string> PromptSet::texts() const { return {rating, explanation, keyword()}; }

void SequenceLayout::check() const {
    if (user.begin != 0 || user.length != 1) throw Error("layout: user span must be position 0");
    if (item.begin != user.end() || item.length != 1) throw Error("layout: item span must follow user");
    std::size_t next = item.end();
    if (rating_slot) {
        if (rating_slot->begin != next || rating_slot->length != 1) throw Error("layout: rating slot must follow item");
        next = rating_slot->end();
    }
    if (prompt.begin != next) throw Error("layout: prompt must follow the previous span");
    if (target.begin != prompt.end()) throw Error("layout: target must follow the prompt");
}

CierModel::CierModel(backbone::Backbone backbone, corpus::BpeModel bpe, PromptSet prompts, bool mask_rating)
    : backbone_(std::move(backbone)),
      bpe_(std::move(bpe)),
      verbalizer_(bpe_),
      prompts_(std::move(prompts)),
      mask_rating_(mask_rating),
      rating_prompt_(bpe_.encode(prompts_.rating)),
      explanation_prompt_(bpe_.encode(prompts_.explanation)),
      keyword_prompt_(bpe_.encode(prompts_.keyword())) {
    if (static_cast<std::size_t>(backbone_.config().vocab_size) != bpe_.size()) {
        throw ValidationError("backbone vocab_size " + std::to_string(backbone_.config().vocab_size) +
                              " does not match tokenizer size " + std::to_string(bpe_.size()));
    }
    backbone_.config().validate_layout(std::max(explanation_prompt_.size(), keyword_prompt_.size()),
                                       kMaxExplanationTokens);
    backbone_.config().validate_layout(rating_prompt_.size(), 0);
}

ModelInput CierModel::build_rating_input(std::string_view user_id, std::string_view item_id) const {
    ModelInput in;
    in.layout.user = {0, 1};
    in.layout.item = {1, 1};
    in.layout.prompt = {2, rating_prompt_.size()};
    in.layout.target = {in.layout.prompt.end(), 0};
    in.slots.push_back(backbone_.user_slot(user_id));
    in.slots.push_back(backbone_.item_slot(item_id));
    for (TokenId id : rating_prompt_) in.slots.push_back(backbone_.token_slot(id));
    if (in.slots.size() > static_cast<std::size_t>(backbone_.config().context_length)) {
        throw ValidationError("rating prompt overflows the context");
    }
    return in;
}

ModelInput CierModel::build_explanation_input(std::string_view user_id, std::string_view item_id,
                                              const RatingSlot& rating, const std::vector<TokenId>& prompt,
                                              const std::vector<TokenId>& targets) const {
    ModelInput in;
    in.layout.user = {0, 1};
    in.layout.item = {1, 1};
    in.layout.rating_slot = Span{2, 1};
    in.layout.prompt = {3, prompt.size()};
    in.layout.target = {in.layout.prompt.end(), targets.size()};
    in.slots.reserve(in.layout.size());
    in.slots.push_back(backbone_.user_slot(user_id));
    in.slots.push_back(backbone_.item_slot(item_id));
    in.slots.push_back(rating_slot(rating));
    for (TokenId id : prompt) in.slots.push_back(backbone_.token_slot(id));
    for (TokenId id : targets) in.slots.push_back(backbone_.token_slot(id));
    // The last target is only ever predicted, never consumed as input.
    const std::size_t consumed = in.slots.size() - (targets.empty() ? 0 : 1);
    if (consumed > static_cast<std::size_t>(backbone_.config().context_length)) {
        throw ValidationError("explanation input of " + std::to_string(consumed) + " positions overflows context " +
                              std::to_string(backbone_.config().context_length));
    }
    return in;
}

std::array<double, kRatingClasses> CierModel::verbalizer_logits(const RowVector& logits) const {
    std::array<double, kRatingClasses> out{};
    for (int x = 1; x <= kRatingClasses; ++x) out[static_cast<std::size_t>(x - 1)] = logits(verbalizer_.token(x));
    return out;
}

RatingDistribution CierModel::predict_rating(std::string_view user_id, std::string_view item_id) const {
    const ModelInput in = build_rating_input(user_id, item_id);
    const Matrix logits = backbone_.forward(backbone_.materialize(in.slots), nullptr, /*last_only=*/true);
    return restricted_softmax(verbalizer_logits(logits.row(0)));
}

RowVector CierModel::sr2we(const RatingDistribution& dist) const {
    const Matrix& emb = backbone_.params()[backbone_.token_embedding()].value;
    RowVector out = RowVector::Zero(emb.cols());
    for (int x = 1; x <= kRatingClasses; ++x) out += dist[x] * emb.row(verbalizer_.token(x));
    return out;
}

InputSlot CierModel::rating_slot(const RatingSlot& rating) const {
    if (mask_rating_ || !rating) return backbone_.token_slot(corpus::BpeModel::kPad);
    InputSlot slot;
    for (int x = 1; x <= kRatingClasses; ++x) {
        slot.terms.push_back({backbone_.token_embedding(), static_cast<Eigen::Index>(verbalizer_.token(x)), (*rating)[x]});
    }
    return slot;
}

std::vector<TokenId> CierModel::generate(std::string_view user_id, std::string_view item_id, const RatingSlot& rating,
                                         std::size_t max_len) const {
    ModelInput in = build_explanation_input(user_id, item_id, rating, explanation_prompt_, {});
    std::vector<TokenId> out;
    const auto context = static_cast<std::size_t>(backbone_.config().context_length);
    while (out.size() < max_len) {
        const Matrix logits = backbone_.forward(backbone_.materialize(in.slots), nullptr, /*last_only=*/true);
        TokenId best = corpus::BpeModel::kEos;
        double best_logit = -std::numeric_limits<double>::infinity();
        for (Eigen::Index v = 0; v < logits.cols(); ++v) {
            if (v == corpus::BpeModel::kPad || v == corpus::BpeModel::kBos || v == corpus::BpeModel::kUnk) continue;
            if (logits(0, v) > best_logit) {
                best_logit = logits(0, v);
                best = static_cast<TokenId>(v);
            }
        }
        if (best == corpus::BpeModel::kEos) break;
        out.push_back(best);
        if (in.slots.size() == context) break;
        in.slots.push_back(backbone_.token_slot(best));
    }
    return out;
}

GenerationResult CierModel::infer(std::string_view user_id, std::string_view item_id, std::size_t max_len) const {
    GenerationResult r;
    r.distribution = predict_rating(user_id, item_id);
    r.score = rating_score(r.distribution);
    r.explanation_ids = generate(user_id, item_id, r.distribution, max_len);
    r.explanation_text = bpe_.decode(r.explanation_ids);
    return r;
}

std::vector<TokenId> CierModel::text_target(std::string_view text) const {
    std::vector<TokenId> ids = bpe_.encode(text);
    if (ids.size() > kMaxExplanationTokens) ids.resize(kMaxExplanationTokens);
    ids.push_back(corpus::BpeModel::kEos);
    return ids;
}

nlohmann::json CierModel::metadata() const {
    return {{"prompts", {{"rating", prompts_.rating}, {"explanation", prompts_.explanation}}},
            {"mask_rating", mask_rating_}};
}

void CierModel::save(const std::filesystem::path& path, std::uint64_t seed) const {
    backbone::save_checkpoint(path, backbone_, seed, bpe_.vocab_hash(), metadata());
}

CierModel CierModel::load(const std::filesystem::path& path, corpus::BpeModel bpe) {
    auto ckpt = backbone::load_checkpoint(path, bpe.vocab_hash());
    PromptSet prompts;
    const auto& meta = ckpt.metadata;
    if (meta.contains("prompts")) {
        prompts.rating = meta["prompts"].value("rating", prompts.rating);
        prompts.explanation = meta["prompts"].value("explanation", prompts.explanation);
    }
    return CierModel(std::move(ckpt.backbone), std::move(bpe), std::move(prompts), meta.value("mask_rating", false));
}

}  // namespace cier::core
