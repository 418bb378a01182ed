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

#include "cier/app/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cier/common.hpp"

namespace cier::app {

void SyntheticConfig::validate() const {
    if (users == 0 || items == 0) throw ValidationError("synthetic corpus needs users and items");
    if (records == 0 || records > users * items) {
        throw ValidationError("synthetic records must be in [1, users * items]");
    }
    if (user_spread < 0.0 || item_spread < 0.0 || noise < 0.0) throw ValidationError("spreads must be >= 0");
}

const std::array<std::array<const char*, 3>, 5>& sentiment_words() {
    static const std::array<std::array<const char*, 3>, 5> words = {{
        {"terrible", "awful", "horrible"},
        {"poor", "disappointing", "bad"},
        {"okay", "average", "decent"},
        {"good", "nice", "pleasant"},
        {"excellent", "great", "wonderful"},
    }};
    return words;
}

const std::vector<std::string>& feature_words() {
    static const std::vector<std::string> features = {"pool",  "room", "staff",   "breakfast", "location", "bed",
                                                      "lobby", "gym",  "view",    "service",   "bathroom", "wifi"};
    return features;
}

std::vector<corpus::InteractionRecord> synthesize(const SyntheticConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    std::vector<double> user_offset(cfg.users);
    std::vector<double> item_offset(cfg.items);
    std::vector<std::size_t> item_feature(cfg.items);
    for (auto& u : user_offset) u = cfg.user_spread * rng.normal();
    for (std::size_t i = 0; i < cfg.items; ++i) {
        item_offset[i] = cfg.item_spread * rng.normal();
        item_feature[i] = rng.below(feature_words().size());
    }

    std::vector<std::size_t> pairs(cfg.users * cfg.items);
    std::iota(pairs.begin(), pairs.end(), std::size_t{0});
    rng.shuffle(pairs);
    pairs.resize(cfg.records);
    std::sort(pairs.begin(), pairs.end());

    std::vector<corpus::InteractionRecord> out;
    out.reserve(cfg.records);
    for (std::size_t p : pairs) {
        const std::size_t u = p / cfg.items;
        const std::size_t i = p % cfg.items;
        const double latent = 3.0 + user_offset[u] + item_offset[i] + cfg.noise * rng.normal();
        const int rating = static_cast<int>(std::clamp(std::lround(latent), 1L, 5L));
        const std::string& feature = feature_words()[item_feature[i]];
        const char* word = sentiment_words()[static_cast<std::size_t>(rating - 1)][rng.below(3)];

        corpus::InteractionRecord r;
        r.user_id = "u" + std::to_string(u);
        r.item_id = "i" + std::to_string(i);
        r.rating = rating;
        r.explanation = rng.below(2) == 0 ? "the " + feature + " was " + word : std::string(word) + " " + feature;
        r.features = {feature};
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace cier::app
