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

#include "cier/trainer/losses.hpp"

#include <cmath>

namespace cier::trainer {

using core::kRatingClasses;
using core::RatingDistribution;

double rating_loss(const RatingDistribution& pred, const RatingDistribution& target) {
    double loss = 0.0;
    for (std::size_t x = 0; x < kRatingClasses; ++x) {
        if (target.probs[x] == 0.0) continue;
        loss -= target.probs[x] * std::log(std::max(pred.probs[x], kProbFloor));
    }
    return loss;
}

double rating_loss(const std::vector<RatingDistribution>& preds, const std::vector<RatingDistribution>& targets) {
    if (preds.size() != targets.size() || preds.empty()) {
        throw ValidationError("rating_loss: prediction and target batches must be equal-sized and non-empty");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) sum += rating_loss(preds[i], targets[i]);
    return sum / static_cast<double>(preds.size());
}

std::array<double, kRatingClasses> rating_loss_grad(const RatingDistribution& pred, const RatingDistribution& target) {
    std::array<double, kRatingClasses> g{};
    for (std::size_t x = 0; x < kRatingClasses; ++x) {
        const double q = target.probs[x];
        if (q == 0.0 || pred.probs[x] < kProbFloor) continue;
        for (std::size_t j = 0; j < kRatingClasses; ++j) g[j] += q * pred.probs[j];
        g[x] -= q;
    }
    return g;
}

TextLoss text_loss(const backbone::Matrix& logits, const core::SequenceLayout& layout,
                   const std::vector<TokenId>& targets, bool with_grad) {
    if (targets.empty()) throw ValidationError("text_loss: empty target");
    if (targets.size() != layout.target.length) throw ValidationError("text_loss: target span length mismatch");
    if (layout.target.begin == 0) throw ValidationError("text_loss: target cannot start at position 0");
    const auto last_pos = static_cast<Eigen::Index>(layout.target.begin + targets.size() - 2);
    if (logits.rows() <= last_pos) throw ValidationError("text_loss: logits do not cover the target span");

    TextLoss out;
    if (with_grad) out.dlogits = backbone::Matrix::Zero(logits.rows(), logits.cols());
    const double inv_n = 1.0 / static_cast<double>(targets.size());
    const double log_floor = std::log(kProbFloor);
    for (std::size_t t = 0; t < targets.size(); ++t) {
        const auto pos = static_cast<Eigen::Index>(layout.target.begin + t - 1);
        const auto row = logits.row(pos);
        const double mx = row.maxCoeff();
        const double lse = mx + std::log((row.array() - mx).exp().sum());
        const double logp = row(targets[t]) - lse;
        if (logp < log_floor) {
            out.loss -= log_floor * inv_n;
            continue;
        }
        out.loss -= logp * inv_n;
        if (with_grad) {
            out.dlogits.row(pos) = (row.array() - lse).exp().matrix() * inv_n;
            out.dlogits(pos, targets[t]) -= inv_n;
        }
    }
    return out;
}

}  // namespace cier::trainer
