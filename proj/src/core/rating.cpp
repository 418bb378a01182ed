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

#include "cier/core/rating.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace cier::core {

RatingDistribution RatingDistribution::one_hot(int rating) {
    if (rating < 1 || rating > kRatingClasses) throw ValidationError("rating " + std::to_string(rating) + " outside [1,5]");
    RatingDistribution d;
    d.probs[static_cast<std::size_t>(rating - 1)] = 1.0;
    return d;
}

RatingDistribution RatingDistribution::uniform() {
    RatingDistribution d;
    d.probs.fill(1.0 / kRatingClasses);
    return d;
}

void RatingDistribution::validate(double tol) const {
    double sum = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0)) throw ValidationError("rating distribution has a negative or NaN entry");
        sum += p;
    }
    if (std::abs(sum - 1.0) > tol) throw ValidationError("rating distribution does not sum to 1");
}

Verbalizer::Verbalizer(const corpus::BpeModel& bpe) {
    std::set<TokenId> seen;
    for (int x = 1; x <= kRatingClasses; ++x) {
        const auto ids = bpe.encode(std::to_string(x));
        if (ids.size() != 1 || ids[0] != bpe.verbalizer_id(x)) {
            throw ValidationError("verbalizer token '" + std::to_string(x) + "' is not atomic");
        }
        ids_[static_cast<std::size_t>(x - 1)] = ids[0];
        seen.insert(ids[0]);
    }
    if (seen.size() != kRatingClasses) throw ValidationError("verbalizer is not injective");
}

RatingDistribution restricted_softmax(const std::array<double, kRatingClasses>& logits) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    RatingDistribution d;
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        d.probs[i] = std::exp(logits[i] - mx);
        z += d.probs[i];
    }
    for (double& p : d.probs) p /= z;
    return d;
}

double rating_score(const RatingDistribution& dist) {
    double s = 0.0;
    for (int x = 1; x <= kRatingClasses; ++x) s += x * dist.probs[static_cast<std::size_t>(x - 1)];
    return std::clamp(s, 1.0, 5.0);
}

}  // namespace cier::core
