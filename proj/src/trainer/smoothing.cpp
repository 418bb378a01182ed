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

#include "cier/trainer/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace cier::trainer {

using core::kRatingClasses;
using core::RatingDistribution;

std::string to_string(SmoothingStrategy s) {
    switch (s) {
        case SmoothingStrategy::kHard: return "hard";
        case SmoothingStrategy::kNeighbor: return "neighbor";
        case SmoothingStrategy::kUniform: return "uniform";
        case SmoothingStrategy::kGaussian: return "gaussian";
    }
    return "neighbor";
}

SmoothingStrategy smoothing_strategy_from_string(std::string_view s) {
    if (s == "hard") return SmoothingStrategy::kHard;
    if (s == "neighbor") return SmoothingStrategy::kNeighbor;
    if (s == "uniform" || s == "label") return SmoothingStrategy::kUniform;
    if (s == "gaussian") return SmoothingStrategy::kGaussian;
    throw ValidationError("unknown smoothing strategy '" + std::string(s) + "'");
}

void SmoothingConfig::validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ValidationError("gamma must lie in [0, 1]");
    if (k < 1 || k > kRatingClasses - 1) throw ValidationError("k must lie in [1, 4]");
    const double alpha_max = static_cast<double>(k) / (k + 1);
    if (!(alpha >= 0.0 && alpha <= alpha_max + 1e-12)) {
        throw ValidationError("alpha must lie in [0, k/(k+1)]");
    }
    if (!(sigma > 0.0)) throw ValidationError("sigma must be positive");
}

std::vector<int> neighbor_set(int rating, int k) {
    if (rating < 1 || rating > kRatingClasses) throw ValidationError("rating outside [1,5]");
    if (k < 1 || k > kRatingClasses - 1) throw ValidationError("k must lie in [1, 4]");
    std::vector<int> others;
    for (int x = 1; x <= kRatingClasses; ++x) {
        if (x != rating) others.push_back(x);
    }
    std::stable_sort(others.begin(), others.end(),
                     [rating](int a, int b) { return std::abs(a - rating) < std::abs(b - rating); });
    others.resize(static_cast<std::size_t>(k));
    std::sort(others.begin(), others.end());
    return others;
}

RatingDistribution smoothed_distribution(int rating, const SmoothingConfig& cfg) {
    RatingDistribution d = RatingDistribution::one_hot(rating);
    const auto idx = [](int x) { return static_cast<std::size_t>(x - 1); };
    switch (cfg.strategy) {
        case SmoothingStrategy::kHard:
            break;
        case SmoothingStrategy::kNeighbor:
            d.probs[idx(rating)] = 1.0 - cfg.alpha;
            for (int x : neighbor_set(rating, cfg.k)) d.probs[idx(x)] = cfg.alpha / cfg.k;
            break;
        case SmoothingStrategy::kUniform:
            for (int x = 1; x <= kRatingClasses; ++x) {
                d.probs[idx(x)] = x == rating ? 1.0 - cfg.alpha : cfg.alpha / (kRatingClasses - 1);
            }
            break;
        case SmoothingStrategy::kGaussian: {
            double z = 0.0;
            for (int x = 1; x <= kRatingClasses; ++x) {
                const double diff = x - rating;
                d.probs[idx(x)] = std::exp(-diff * diff / (2.0 * cfg.sigma * cfg.sigma));
                z += d.probs[idx(x)];
            }
            for (double& p : d.probs) p /= z;
            break;
        }
    }
    return d;
}

RatingDistribution smooth_rating(int rating, const SmoothingConfig& cfg, Rng& rng) {
    if (rating < 1 || rating > kRatingClasses) throw ValidationError("rating outside [1,5]");
    const double draw = rng.uniform();
    if (draw < cfg.gamma) return smoothed_distribution(rating, cfg);
    return RatingDistribution::one_hot(rating);
}

}  // namespace cier::trainer
