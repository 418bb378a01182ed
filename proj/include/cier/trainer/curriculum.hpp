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

#ifndef CIER_TRAINER_CURRICULUM_HPP_
#define CIER_TRAINER_CURRICULUM_HPP_

#include <cstddef>

#include "cier/common.hpp"

namespace cier::trainer {

enum class Task { kKeyword, kExplanation };

/// P(t) = t / T, the chance that batch t trains explanation generation.
double transition_probability(std::size_t t, std::size_t total_batches);

/// Draws n ~ U[0,1) and returns kExplanation iff n < P(t).
/// Throws ValidationError when total_batches is 0 or t >= total_batches.
Task curriculum_task(std::size_t t, std::size_t total_batches, Rng& rng);

}  // namespace cier::trainer

#endif  // CIER_TRAINER_CURRICULUM_HPP_
