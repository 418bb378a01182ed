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

#include "cier/trainer/curriculum.hpp"

#include <string>

namespace cier::trainer {

double transition_probability(std::size_t t, std::size_t total_batches) {
    if (total_batches == 0) throw ValidationError("curriculum: total batch count must be positive");
    if (t >= total_batches) {
        throw ValidationError("curriculum: batch index " + std::to_string(t) + " outside [0, " +
                              std::to_string(total_batches) + ")");
    }
    return static_cast<double>(t) / static_cast<double>(total_batches);
}

Task curriculum_task(std::size_t t, std::size_t total_batches, Rng& rng) {
    const double p = transition_probability(t, total_batches);
    return rng.uniform() < p ? Task::kExplanation : Task::kKeyword;
}

}  // namespace cier::trainer
