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

// Synthetic users x items corpus whose explanation sentiment is a fixed
// function of the rating. Every offline test and the default experiment run
// on it.

#ifndef CIER_APP_SYNTHETIC_HPP_
#define CIER_APP_SYNTHETIC_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "cier/corpus/record.hpp"

namespace cier::app {

struct SyntheticConfig {
    std::size_t users = 40;
    std::size_t items = 30;
    std::size_t records = 480;  // distinct (user, item) pairs
    double user_spread = 1.0;   // std of the user offset
    double item_spread = 1.0;   // std of the item offset
    double noise = 0.3;         // std of the per-pair noise
    std::uint64_t seed = 7;

    void validate() const;
};

/// Three interchangeable words per rating; their lexicon polarity is
/// -1, -0.5, 0, 0.5, 1 for ratings 1..5.
const std::array<std::array<const char*, 3>, 5>& sentiment_words();
const std::vector<std::string>& feature_words();

/// rating = clamp(round(3 + user offset + item offset + noise), 1, 5); each
/// item has one feature; the explanation names the feature and a sentiment
/// word for the rating.
std::vector<corpus::InteractionRecord> synthesize(const SyntheticConfig& cfg);

}  // namespace cier::app

#endif  // CIER_APP_SYNTHETIC_HPP_
