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

#ifndef CIER_TRAINER_SMOOTHING_HPP_
#define CIER_TRAINER_SMOOTHING_HPP_

#include <string>
#include <string_view>
#include <vector>

#include "cier/common.hpp"
#include "cier/core/rating.hpp"

namespace cier::trainer {

enum class SmoothingStrategy { kHard, kNeighbor, kUniform, kGaussian };

std::string to_string(SmoothingStrategy s);
SmoothingStrategy smoothing_strategy_from_string(std::string_view s);

struct SmoothingConfig {
    SmoothingStrategy strategy = SmoothingStrategy::kNeighbor;
    double gamma = 0.2;  // probability that a target gets smoothed
    double alpha = 0.2;  // mass moved off the true rating
    int k = 2;           // neighbour count
    double sigma = 1.0;  // gaussian width

    /// 0 <= gamma <= 1, k in 1..4, 0 <= alpha <= k/(k+1), sigma > 0.
    void validate() const;
};

/// The k ratings closest to r (excluding r). Distance ties go to the lower
/// rating; near the ends the nearest existing ratings are used, so r=1, k=2
/// gives {2, 3}. Sorted ascending.
std::vector<int> neighbor_set(int rating, int k);

/// The smoothed target for `rating` under cfg.strategy, without the gamma gate.
core::RatingDistribution smoothed_distribution(int rating, const SmoothingConfig& cfg);

/// With probability gamma returns smoothed_distribution, otherwise the one-hot
/// target. Exactly one uniform draw is consumed per call for every strategy.
core::RatingDistribution smooth_rating(int rating, const SmoothingConfig& cfg, Rng& rng);

}  // namespace cier::trainer

#endif  // CIER_TRAINER_SMOOTHING_HPP_
