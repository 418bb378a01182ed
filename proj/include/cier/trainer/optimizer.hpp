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

#ifndef CIER_TRAINER_OPTIMIZER_HPP_
#define CIER_TRAINER_OPTIMIZER_HPP_

#include <vector>

#include "cier/backbone/parameters.hpp"

namespace cier::trainer {

struct AdamWConfig {
    double lr_adapter = 1e-4;  // adapter factors
    double lr_other = 1e-3;    // everything else that is trainable
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;  // decoupled; skipped for 1-row tensors (gains, biases)
};

/// AdamW with one learning rate for adapter factors and one for the rest.
/// Only the tensors listed at construction are ever touched.
class AdamW {
public:
    AdamW(const backbone::ParameterSet& params, std::vector<std::size_t> trainable, AdamWConfig config);

    void step(backbone::ParameterSet& params);
    long steps() const { return steps_; }
    const std::vector<std::size_t>& trainable() const { return trainable_; }

private:
    std::vector<std::size_t> trainable_;
    AdamWConfig config_;
    std::vector<backbone::Matrix> m_;
    std::vector<backbone::Matrix> v_;
    long steps_ = 0;
};

}  // namespace cier::trainer

#endif  // CIER_TRAINER_OPTIMIZER_HPP_
