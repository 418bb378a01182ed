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

// Command-line front end for the experiment pipeline.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cier/app/config.hpp"
#include "cier/app/pipeline.hpp"
#include "cier/app/synthetic.hpp"
#include "cier/corpus/record.hpp"

namespace {

using cier::app::ExperimentConfig;
using cier::app::Pipeline;
using cier::app::Variant;

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> split;
    bool ablate = false;
    bool force = false;
    std::string predictions;
    std::string out;
    std::string kind;
};

ExperimentConfig resolve(const Options& o) {
    ExperimentConfig cfg = o.config.empty() ? cier::app::default_config() : cier::app::load_config(o.config);
    if (o.seed) cier::app::apply_seed(cfg, *o.seed);
    if (!o.kind.empty()) cfg.judge.kind = cier::judge::oracle_kind_from_string(o.kind);
    return cfg;
}

std::size_t need_split(const Options& o) {
    if (!o.split) throw cier::ValidationError("--split is required");
    return *o.split;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CIER explainable recommendation experiments"};
    app.require_subcommand(1);
    app.fallthrough();
    Options o;
    app.add_option("--config", o.config, "YAML experiment config")->check(CLI::ExistingFile);
    app.add_option("--seed", o.seed, "Override the experiment seed");

    auto* synth = app.add_subcommand("synth", "Write the synthetic corpus as JSONL");
    synth->add_option("--out", o.out, "Output file")->required();

    auto* prepare = app.add_subcommand("prepare", "Write corpus, tokenizer and split manifests");
    prepare->add_flag("--force", o.force, "Overwrite an existing preparation");

    auto* train = app.add_subcommand("train", "Train on one split and keep the best checkpoint");
    auto* generate = app.add_subcommand("generate", "Predict ratings and explanations for a test split");
    auto* evaluate = app.add_subcommand("evaluate", "Metrics for one split, a prediction file, or the mean over splits");
    auto* judge = app.add_subcommand("judge", "Coherence rate of a split or prediction file");
    auto* run = app.add_subcommand("run", "prepare, then train/generate/judge/evaluate every split");
    run->add_flag("--force", o.force, "Re-prepare the working directory");

    for (auto* sub : {train, generate, evaluate, judge}) sub->add_option("--split", o.split, "Split index");
    for (auto* sub : {train, generate, evaluate, judge, run}) {
        sub->add_flag("--ablate-rating", o.ablate, "Use the CIER-M variant (rating slot masked)");
    }
    for (auto* sub : {evaluate, judge}) {
        sub->add_option("--predictions", o.predictions, "Prediction JSONL instead of a workdir split");
        sub->add_option("--out", o.out, "Write the report here as well");
    }
    judge->add_option("--kind", o.kind, "lexicon, remote_classifier or llm_judge");

    CLI11_PARSE(app, argc, argv);

    try {
        const ExperimentConfig cfg = resolve(o);
        const Variant variant = o.ablate ? Variant::kCierM : Variant::kCier;
        Pipeline pipeline(cfg, &std::cerr);
        const std::optional<std::filesystem::path> out =
            o.out.empty() ? std::nullopt : std::optional<std::filesystem::path>(o.out);

        if (synth->parsed()) {
            cier::corpus::write_records(o.out, cier::app::synthesize(cfg.synthetic));
        } else if (prepare->parsed()) {
            const auto r = pipeline.prepare(o.force);
            std::cout << nlohmann::json{{"records", r.records}, {"vocab_size", r.vocab_size}, {"splits", r.splits.size()}}
                             .dump()
                      << "\n";
        } else if (train->parsed()) {
            const auto r = pipeline.train(need_split(o), variant);
            std::cout << nlohmann::json{{"checkpoint", r.checkpoint.string()},
                                        {"checkpoint_hash", r.checkpoint_hash},
                                        {"best_epoch", r.fit.best_epoch},
                                        {"best_val_loss", r.fit.best_val_loss}}
                             .dump()
                      << "\n";
        } else if (generate->parsed()) {
            const auto preds = pipeline.generate(need_split(o), variant);
            std::cout << nlohmann::json{{"predictions", pipeline.workdir().predictions(variant, *o.split).string()},
                                        {"lines", preds.size()}}
                             .dump()
                      << "\n";
        } else if (evaluate->parsed()) {
            cier::metrics::MetricsReport r;
            if (!o.predictions.empty()) {
                r = cier::app::evaluate_file(o.predictions, out);
            } else if (o.split) {
                r = pipeline.evaluate(*o.split, variant);
            } else {
                r = pipeline.evaluate_all(variant);
            }
            std::cout << r.to_json().dump(2) << "\n";
        } else if (judge->parsed()) {
            cier::judge::CoherenceReport r;
            if (!o.predictions.empty()) {
                r = cier::app::judge_file(cfg.judge, o.predictions, out);
            } else {
                r = pipeline.judge(need_split(o), variant);
            }
            if (r.unparseable > 0) std::cerr << "warning: " << r.unparseable << " unparseable replies excluded\n";
            std::cout << r.to_json().dump(2) << "\n";
        } else if (run->parsed()) {
            std::cout << pipeline.run(variant, o.force).to_json().dump(2) << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "cier: error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
