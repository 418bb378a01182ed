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

// prepare -> train -> generate -> evaluate -> judge over a working directory:
//
//   <workdir>/config.json                    resolved configuration
//   <workdir>/data.jsonl                     normalized corpus
//   <workdir>/bpe.json                       tokenizer
//   <workdir>/splits/split_<k>.json          split manifests
//   <workdir>/runs/<variant>/split_<k>/      model.ckpt, train_log.jsonl,
//                                            predictions.jsonl, metrics.json,
//                                            coherence.json
//   <workdir>/runs/<variant>/metrics_mean.json, metrics.csv

#ifndef CIER_APP_PIPELINE_HPP_
#define CIER_APP_PIPELINE_HPP_

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cier/app/config.hpp"
#include "cier/corpus/record.hpp"
#include "cier/judge/judge.hpp"
#include "cier/metrics/metrics.hpp"
#include "cier/trainer/trainer.hpp"

namespace cier::app {

enum class Variant { kCier, kCierM };  // CIER-M masks the rating slot

std::string variant_name(Variant v);

struct Workdir {
    std::filesystem::path root;

    std::filesystem::path config() const { return root / "config.json"; }
    std::filesystem::path data() const { return root / "data.jsonl"; }
    std::filesystem::path bpe() const { return root / "bpe.json"; }
    std::filesystem::path split(std::size_t k) const;
    std::filesystem::path run(Variant v, std::size_t k) const;
    std::filesystem::path checkpoint(Variant v, std::size_t k) const { return run(v, k) / "model.ckpt"; }
    std::filesystem::path train_log(Variant v, std::size_t k) const { return run(v, k) / "train_log.jsonl"; }
    std::filesystem::path predictions(Variant v, std::size_t k) const { return run(v, k) / "predictions.jsonl"; }
    std::filesystem::path metrics(Variant v, std::size_t k) const { return run(v, k) / "metrics.json"; }
    std::filesystem::path coherence(Variant v, std::size_t k) const { return run(v, k) / "coherence.json"; }
    std::filesystem::path summary(Variant v) const;
    std::filesystem::path summary_csv(Variant v) const;
};

struct PrepareResult {
    std::size_t records = 0;
    std::size_t vocab_size = 0;
    std::vector<std::filesystem::path> splits;
};

struct TrainResult {
    std::filesystem::path checkpoint;
    std::string checkpoint_hash;
    trainer::FitResult fit;
};

class Pipeline {
public:
    /// `log` receives one progress line per step; nullptr silences it.
    explicit Pipeline(ExperimentConfig config, std::ostream* log = nullptr);

    const ExperimentConfig& config() const { return config_; }
    const Workdir& workdir() const { return workdir_; }

    /// Writes the corpus, tokenizer and split manifests. Refuses to overwrite
    /// an existing preparation unless `force`.
    PrepareResult prepare(bool force = false);

    /// Trains on split k and writes the best checkpoint and the epoch log.
    TrainResult train(std::size_t split, Variant variant);

    /// Greedy inference on every test record of split k.
    std::vector<metrics::Prediction> generate(std::size_t split, Variant variant);

    metrics::MetricsReport evaluate(std::size_t split, Variant variant);

    /// Evaluates every split and writes the mean report.
    metrics::MetricsReport evaluate_all(Variant variant);

    judge::CoherenceReport judge(std::size_t split, Variant variant, judge::Transport transport = {});

    /// prepare + train/generate/evaluate/judge for every split, then the mean.
    metrics::MetricsReport run(Variant variant, bool force = false);

private:
    void note(const std::string& line) const;
    void check_split(std::size_t split) const;
    std::vector<corpus::InteractionRecord> load_data() const;

    ExperimentConfig config_;
    Workdir workdir_;
    std::ostream* log_;
};

/// Metrics of an arbitrary prediction file; writes `out` when given.
metrics::MetricsReport evaluate_file(const std::filesystem::path& predictions,
                                     const std::optional<std::filesystem::path>& out = std::nullopt);

judge::CoherenceReport judge_file(const judge::JudgeConfig& cfg, const std::filesystem::path& predictions,
                                  const std::optional<std::filesystem::path>& out = std::nullopt,
                                  judge::Transport transport = {});

/// Tokenizer corpus: explanations, feature words and the prompts (twice, so
/// their word pieces merge).
std::vector<std::string> tokenizer_corpus(const std::vector<corpus::InteractionRecord>& records,
                                          const core::PromptSet& prompts);

}  // namespace cier::app

#endif  // CIER_APP_PIPELINE_HPP_
