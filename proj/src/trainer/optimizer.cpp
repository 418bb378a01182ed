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

#include "cier/trainer/optimizer.hpp"

#include <cmath>

namespace cier::trainer {

using backbone::Matrix;
using backbone::ParamGroup;

AdamW::AdamW(const backbone::ParameterSet& params, std::vector<std::size_t> trainable, AdamWConfig config)
    : trainable_(std::move(trainable)), config_(config) {
    for (std::size_t idx : trainable_) {
        m_.push_back(Matrix::Zero(params[idx].value.rows(), params[idx].value.cols()));
        v_.push_back(Matrix::Zero(params[idx].value.rows(), params[idx].value.cols()));
    }
}

void AdamW::step(backbone::ParameterSet& params) {
    ++steps_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
    for (std::size_t i = 0; i < trainable_.size(); ++i) {
        auto& p = params[trainable_[i]];
        const double lr = p.group == ParamGroup::kAdapter ? config_.lr_adapter : config_.lr_other;
        m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * p.grad;
        v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * p.grad.cwiseAbs2();
        if (p.value.rows() > 1 && config_.weight_decay > 0.0) p.value *= 1.0 - lr * config_.weight_decay;
        p.value.array() -= lr * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + config_.eps);
    }
}

}  // namespace cier::trainer
