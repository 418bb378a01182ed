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

// Small models and corpora shared by the unit and acceptance tests.

#ifndef CIER_TESTS_SUPPORT_FIXTURES_HPP_
#define CIER_TESTS_SUPPORT_FIXTURES_HPP_

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "cier/app/config.hpp"
#include "cier/app/pipeline.hpp"
#include "cier/app/synthetic.hpp"
#include "cier/backbone/backbone.hpp"
#include "cier/core/model.hpp"
#include "cier/corpus/bpe.hpp"

namespace cier::testing {

inline std::vector<corpus::InteractionRecord> tiny_records(std::size_t n = 32, std::uint64_t seed = 7) {
    app::SyntheticConfig c;
    c.users = 8;
    c.items = 8;
    c.records = n;
    c.seed = seed;
    return app::synthesize(c);
}

inline corpus::BpeModel tiny_bpe(const std::vector<corpus::InteractionRecord>& records, std::size_t vocab = 120) {
    return corpus::train_bpe(app::tokenizer_corpus(records, core::PromptSet{}), vocab);
}

inline backbone::BackboneConfig tiny_config(std::size_t vocab, int d = 16, int layers = 2, int rank = 0) {
    backbone::BackboneConfig c;
    c.d_model = d;
    c.n_layers = layers;
    c.n_heads = 2;
    c.ffn_width = 2 * d;
    c.vocab_size = static_cast<int>(vocab);
    c.adapter_rank = rank;
    return c;
}

inline std::vector<std::string> ids_of(const std::vector<corpus::InteractionRecord>& records, bool users) {
    std::vector<std::string> out;
    for (const auto& r : records) out.push_back(users ? r.user_id : r.item_id);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

inline core::CierModel tiny_model(const std::vector<corpus::InteractionRecord>& records, const corpus::BpeModel& bpe,
                                  const backbone::BackboneConfig& cfg, bool mask = false, std::uint64_t seed = 1) {
    return core::CierModel(backbone::Backbone(cfg, ids_of(records, true), ids_of(records, false), seed), bpe,
                           core::PromptSet{}, mask);
}

/// Quick end-to-end experiment on a small synthetic corpus.
inline app::ExperimentConfig small_experiment(const std::filesystem::path& workdir) {
    app::ExperimentConfig c = app::default_config();
    c.workdir = workdir;
    c.synthetic.users = 6;
    c.synthetic.items = 6;
    c.synthetic.records = 30;
    c.bpe_vocab = 150;
    c.repeats = 2;
    c.backbone.d_model = 16;
    c.backbone.n_heads = 2;
    c.backbone.ffn_width = 32;
    c.trainer.epochs = 2;
    c.trainer.batch_size = 8;
    c.max_explanation_tokens = 8;
    return c;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("cier_test_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline std::string read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace cier::testing

#endif  // CIER_TESTS_SUPPORT_FIXTURES_HPP_
