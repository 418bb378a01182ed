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

#include "cier/backbone/parameters.hpp"

#include "cier/common.hpp"

namespace cier::backbone {

const char* to_string(ParamGroup group) {
    switch (group) {
        case ParamGroup::kBase: return "base";
        case ParamGroup::kAdapter: return "adapter";
        case ParamGroup::kUserTable: return "user_table";
        case ParamGroup::kItemTable: return "item_table";
    }
    return "base";
}

ParamGroup param_group_from_string(std::string_view s) {
    if (s == "base") return ParamGroup::kBase;
    if (s == "adapter") return ParamGroup::kAdapter;
    if (s == "user_table") return ParamGroup::kUserTable;
    if (s == "item_table") return ParamGroup::kItemTable;
    throw ParseError("unknown parameter group '" + std::string(s) + "'");
}

std::size_t ParameterSet::add(std::string name, ParamGroup group, Matrix init) {
    if (find(name)) throw Error("duplicate parameter " + name);
    Param p;
    p.name = std::move(name);
    p.group = group;
    p.grad = Matrix::Zero(init.rows(), init.cols());
    p.value = std::move(init);
    params_.push_back(std::move(p));
    return params_.size() - 1;
}

std::size_t ParameterSet::index(std::string_view name) const {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (params_[i].name == name) return i;
    }
    throw Error("unknown parameter " + std::string(name));
}

const Param* ParameterSet::find(std::string_view name) const {
    for (const auto& p : params_) {
        if (p.name == name) return &p;
    }
    return nullptr;
}

void ParameterSet::zero_grad() {
    for (auto& p : params_) p.grad.setZero();
}

std::size_t ParameterSet::scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
    return n;
}

}  // namespace cier::backbone
