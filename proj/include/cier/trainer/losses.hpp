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

#ifndef CIER_TRAINER_LOSSES_HPP_
#define CIER_TRAINER_LOSSES_HPP_

#include <array>
#include <vector>

#include "cier/backbone/parameters.hpp"
#include "cier/core/model.hpp"
#include "cier/core/rating.hpp"

namespace cier::trainer {

inline constexpr double kProbFloor = 1e-12;

/// Cross-entropy -sum_x target_x log(max(pred_x, 1e-12)).
double rating_loss(const core::RatingDistribution& pred, const core::RatingDistribution& target);

/// Batch mean of rating_loss. Sizes must match and be non-zero.
double rating_loss(const std::vector<core::RatingDistribution>& preds,
                   const std::vector<core::RatingDistribution>& targets);

/// d rating_loss / d verbalizer logits, for pred = restricted_softmax(logits).
std::array<double, core::kRatingClasses> rating_loss_grad(const core::RatingDistribution& pred,
                                                          const core::RatingDistribution& target);

struct TextLoss {
    double loss = 0.0;
    backbone::Matrix dlogits;  // same shape as the logits; empty when not requested
};

/// Mean over target tokens of -log softmax(logits[p])[e_t], where the t-th
/// target (0-based) is read from position layout.target.begin + t - 1.
/// `logits` must cover positions up to layout.size() - 2. Throws
/// ValidationError for an empty target.
TextLoss text_loss(const backbone::Matrix& logits, const core::SequenceLayout& layout,
                   const std::vector<TokenId>& targets, bool with_grad = false);

}  // namespace cier::trainer

#endif  // CIER_TRAINER_LOSSES_HPP_
