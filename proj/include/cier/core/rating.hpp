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

#ifndef CIER_CORE_RATING_HPP_
#define CIER_CORE_RATING_HPP_

#include <array>

#include "cier/common.hpp"
#include "cier/corpus/bpe.hpp"

namespace cier::core {

inline constexpr int kRatingClasses = 5;

/// Probability vector over ratings 1..5; probs[x - 1] is P(rating = x).
struct RatingDistribution {
    std::array<double, kRatingClasses> probs{};

    static RatingDistribution one_hot(int rating);
    static RatingDistribution uniform();

    double operator[](int rating) const { return probs.at(static_cast<std::size_t>(rating - 1)); }

    /// Throws ValidationError unless non-negative and summing to 1 within `tol`.
    void validate(double tol = 1e-6) const;

    bool operator==(const RatingDistribution&) const = default;
};

/// Fixed map from rating x to the single token "x".
class Verbalizer {
public:
    /// Throws ValidationError if any of "1".."5" is not an atomic token.
    explicit Verbalizer(const corpus::BpeModel& bpe);

    TokenId token(int rating) const { return ids_.at(static_cast<std::size_t>(rating - 1)); }
    const std::array<TokenId, kRatingClasses>& ids() const { return ids_; }

private:
    std::array<TokenId, kRatingClasses> ids_{};
};

/// Softmax over the five verbalizer logits only.
RatingDistribution restricted_softmax(const std::array<double, kRatingClasses>& verbalizer_logits);

/// Expected rating sum_x x * p_x.
double rating_score(const RatingDistribution& dist);

}  // namespace cier::core

#endif  // CIER_CORE_RATING_HPP_
