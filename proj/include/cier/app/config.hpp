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

#ifndef CIER_APP_CONFIG_HPP_
#define CIER_APP_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "cier/app/synthetic.hpp"
#include "cier/backbone/backbone.hpp"
#include "cier/core/model.hpp"
#include "cier/judge/judge.hpp"
#include "cier/trainer/trainer.hpp"

namespace cier::app {

/// Everything an experiment needs. Every field has a default, and the default
/// config runs end to end on the synthetic corpus.
struct ExperimentConfig {
    std::uint64_t seed = 42;
    std::filesystem::path data;  // JSONL corpus; empty: synthetic corpus
    std::filesystem::path workdir = "cier_work";
    SyntheticConfig synthetic;
    std::size_t bpe_vocab = 400;
    std::size_t repeats = 5;
    backbone::BackboneConfig backbone;
    trainer::TrainerConfig trainer;
    core::PromptSet prompts;
    std::size_t max_explanation_tokens = core::kMaxExplanationTokens;
    bool metrics_csv = true;  // also write metrics.csv next to metrics.json
    judge::JudgeConfig judge;

    void validate() const;
    nlohmann::json to_json() const;
};

ExperimentConfig default_config();

/// Keys missing from the file keep their defaults; unknown keys are errors.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& yaml_text);

/// Propagates the experiment seed into the trainer and judge seeds.
void apply_seed(ExperimentConfig& cfg, std::uint64_t seed);

}  // namespace cier::app

#endif  // CIER_APP_CONFIG_HPP_
