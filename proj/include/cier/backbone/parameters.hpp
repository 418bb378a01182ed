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

#ifndef CIER_BACKBONE_PARAMETERS_HPP_
#define CIER_BACKBONE_PARAMETERS_HPP_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace cier::backbone {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using Vector = Eigen::VectorXd;

enum class ParamGroup { kBase, kAdapter, kUserTable, kItemTable };

const char* to_string(ParamGroup group);
ParamGroup param_group_from_string(std::string_view s);

struct Param {
    std::string name;
    ParamGroup group = ParamGroup::kBase;
    Matrix value;
    Matrix grad;
};

/// Ordered collection of named tensors with gradient buffers.
class ParameterSet {
public:
    std::size_t add(std::string name, ParamGroup group, Matrix init);

    Param& operator[](std::size_t i) { return params_[i]; }
    const Param& operator[](std::size_t i) const { return params_[i]; }

    /// Throws Error for unknown names.
    std::size_t index(std::string_view name) const;
    const Param* find(std::string_view name) const;

    std::size_t size() const { return params_.size(); }
    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

    void zero_grad();
    std::size_t scalar_count() const;

private:
    std::vector<Param> params_;
};

}  // namespace cier::backbone

#endif  // CIER_BACKBONE_PARAMETERS_HPP_
