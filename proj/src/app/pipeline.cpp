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

#include "cier/app/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>

#include "cier/backbone/checkpoint.hpp"
#include "cier/corpus/bpe.hpp"
#include "cier/corpus/splits.hpp"

namespace cier::app {
namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("write failed: " + path.string());
}

void require_file(const fs::path& path, const std::string& hint) {
    if (!fs::exists(path)) throw Error("missing " + path.string() + " (" + hint + ")");
}

std::vector<std::string> unique_sorted(std::vector<std::string> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

}  // namespace

std::string variant_name(Variant v) { return v == Variant::kCierM ? "cier_m" : "cier"; }

fs::path Workdir::split(std::size_t k) const { return root / "splits" / ("split_" + std::to_string(k) + ".json"); }

fs::path Workdir::run(Variant v, std::size_t k) const {
    return root / "runs" / variant_name(v) / ("split_" + std::to_string(k));
}

fs::path Workdir::summary(Variant v) const { return root / "runs" / variant_name(v) / "metrics_mean.json"; }
fs::path Workdir::summary_csv(Variant v) const { return root / "runs" / variant_name(v) / "metrics.csv"; }

std::vector<std::string> tokenizer_corpus(const std::vector<corpus::InteractionRecord>& records,
                                          const core::PromptSet& prompts) {
    std::vector<std::string> texts;
    texts.reserve(records.size() * 2 + 8);
    for (const auto& r : records) {
        texts.push_back(r.explanation);
        for (const auto& f : r.features) texts.push_back(f);
    }
    for (int rep = 0; rep < 2; ++rep) {
        for (const auto& t : prompts.texts()) texts.push_back(t);
    }
    return texts;
}

Pipeline::Pipeline(ExperimentConfig config, std::ostream* log)
    : config_(std::move(config)), workdir_{config_.workdir}, log_(log) {
    config_.validate();
}

void Pipeline::note(const std::string& line) const {
    if (log_) *log_ << "[cier] " << line << std::endl;
}

void Pipeline::check_split(std::size_t split) const {
    if (split >= config_.repeats) {
        throw ValidationError("split " + std::to_string(split) + " out of range [0, " +
                              std::to_string(config_.repeats) + ")");
    }
}

std::vector<corpus::InteractionRecord> Pipeline::load_data() const {
    require_file(workdir_.data(), "run prepare first");
    return corpus::ingest(workdir_.data());
}

PrepareResult Pipeline::prepare(bool force) {
    for (const fs::path& p : {workdir_.data(), workdir_.bpe(), workdir_.split(0)}) {
        if (fs::exists(p) && !force) {
            throw Error("refusing to overwrite " + p.string() + " (pass --force to re-prepare)");
        }
    }

    std::vector<corpus::InteractionRecord> records;
    if (config_.data.empty()) {
        records = synthesize(config_.synthetic);
        note("synthesized " + std::to_string(records.size()) + " records");
    } else {
        if (!fs::exists(config_.data)) throw Error("data file not found: " + config_.data.string());
        records = corpus::ingest(config_.data);
        note("read " + std::to_string(records.size()) + " records from " + config_.data.string());
    }

    fs::create_directories(workdir_.root / "splits");
    corpus::write_records(workdir_.data(), records);
    const corpus::BpeModel bpe = corpus::train_bpe(tokenizer_corpus(records, config_.prompts), config_.bpe_vocab);
    bpe.save(workdir_.bpe());
    note("tokenizer: " + std::to_string(bpe.size()) + " tokens");

    PrepareResult result;
    result.records = records.size();
    result.vocab_size = bpe.size();
    const auto splits = corpus::make_splits(records.size(), config_.seed, static_cast<int>(config_.repeats));
    for (std::size_t k = 0; k < splits.size(); ++k) {
        corpus::save_split(workdir_.split(k), splits[k]);
        result.splits.push_back(workdir_.split(k));
    }
    write_text(workdir_.config(), config_.to_json().dump(2) + "\n");
    note("wrote " + std::to_string(splits.size()) + " split manifests under " + (workdir_.root / "splits").string());
    return result;
}

TrainResult Pipeline::train(std::size_t split, Variant variant) {
    check_split(split);
    const auto records = load_data();
    require_file(workdir_.bpe(), "run prepare first");
    require_file(workdir_.split(split), "run prepare first");
    corpus::BpeModel bpe = corpus::BpeModel::load(workdir_.bpe());
    const corpus::DatasetSplit s = corpus::load_split(workdir_.split(split));

    // Only training ids get their own rows; everything else is cold start.
    std::vector<std::string> users;
    std::vector<std::string> items;
    for (std::size_t idx : s.train) {
        users.push_back(records.at(idx).user_id);
        items.push_back(records.at(idx).item_id);
    }
    backbone::BackboneConfig bc = config_.backbone;
    bc.vocab_size = static_cast<int>(bpe.size());
    const std::uint64_t seed = config_.seed + split;
    core::CierModel model(backbone::Backbone(bc, unique_sorted(users), unique_sorted(items), seed), std::move(bpe),
                          config_.prompts, variant == Variant::kCierM);

    trainer::TrainerConfig tc = config_.trainer;
    tc.seed = config_.trainer.seed + split;
    trainer::Trainer tr(model, tc);
    const auto train_set = trainer::encode_examples(model, records, s.train);
    const auto valid_set = trainer::encode_examples(model, records, s.valid);

    if (tc.mode == backbone::TrainMode::kAdapter && tc.pretrain_epochs > 0) {
        const double lm = tr.pretrain_base(train_set, tc.pretrain_epochs);
        note("base warm-up: " + std::to_string(tc.pretrain_epochs) + " epochs, loss " + std::to_string(lm));
    }

    const fs::path dir = workdir_.run(variant, split);
    fs::create_directories(dir);
    std::ofstream log(workdir_.train_log(variant, split), std::ios::binary | std::ios::trunc);
    if (!log) throw Error("cannot write " + workdir_.train_log(variant, split).string());
    TrainResult result;
    result.fit = tr.fit(train_set, valid_set, [&](const trainer::EpochLog& e) {
        log << trainer::to_json_line(e) << '\n';
        log.flush();
        note(variant_name(variant) + " split " + std::to_string(split) + " epoch " + std::to_string(e.epoch) +
             " val_loss " + std::to_string(e.val_loss) + (e.saved ? " *" : ""));
    });
    result.checkpoint = workdir_.checkpoint(variant, split);
    model.save(result.checkpoint, seed);
    result.checkpoint_hash = backbone::file_hash(result.checkpoint);
    note("best epoch " + std::to_string(result.fit.best_epoch) + ", checkpoint " + result.checkpoint.string());
    return result;
}

std::vector<metrics::Prediction> Pipeline::generate(std::size_t split, Variant variant) {
    check_split(split);
    const auto records = load_data();
    require_file(workdir_.checkpoint(variant, split), "run train first");
    const corpus::DatasetSplit s = corpus::load_split(workdir_.split(split));
    const core::CierModel model =
        core::CierModel::load(workdir_.checkpoint(variant, split), corpus::BpeModel::load(workdir_.bpe()));

    std::vector<metrics::Prediction> out;
    out.reserve(s.test.size());
    for (std::size_t idx : s.test) {
        const auto& r = records.at(idx);
        const core::GenerationResult g = model.infer(r.user_id, r.item_id, config_.max_explanation_tokens);
        out.push_back({r.user_id, r.item_id, r.rating, g.score, r.explanation, g.explanation_text, r.features});
    }
    metrics::write_predictions(workdir_.predictions(variant, split), out);
    note("wrote " + std::to_string(out.size()) + " predictions to " + workdir_.predictions(variant, split).string());
    return out;
}

metrics::MetricsReport evaluate_file(const fs::path& predictions, const std::optional<fs::path>& out) {
    require_file(predictions, "run generate first");
    const metrics::MetricsReport r = metrics::evaluate(metrics::read_predictions(predictions));
    if (out) write_text(*out, r.to_json().dump(2) + "\n");
    return r;
}

metrics::MetricsReport Pipeline::evaluate(std::size_t split, Variant variant) {
    check_split(split);
    metrics::MetricsReport r = evaluate_file(workdir_.predictions(variant, split));
    if (fs::exists(workdir_.coherence(variant, split))) {
        std::ifstream in(workdir_.coherence(variant, split));
        r.coherence_rate = nlohmann::json::parse(in).at("coherence_rate").get<double>();
    }
    write_text(workdir_.metrics(variant, split), r.to_json().dump(2) + "\n");
    return r;
}

metrics::MetricsReport Pipeline::evaluate_all(Variant variant) {
    std::vector<metrics::MetricsReport> reports;
    std::string csv;
    for (std::size_t k = 0; k < config_.repeats; ++k) {
        reports.push_back(evaluate(k, variant));
        if (csv.empty()) csv = "split," + reports.back().csv_header() + "\n";
        csv += std::to_string(k) + "," + reports.back().csv_row() + "\n";
    }
    const metrics::MetricsReport mean = metrics::aggregate(reports);
    csv += "mean," + mean.csv_row() + "\n";
    write_text(workdir_.summary(variant), mean.to_json().dump(2) + "\n");
    if (config_.metrics_csv) write_text(workdir_.summary_csv(variant), csv);
    note("mean over " + std::to_string(reports.size()) + " splits written to " + workdir_.summary(variant).string());
    return mean;
}

judge::CoherenceReport judge_file(const judge::JudgeConfig& cfg, const fs::path& predictions,
                                  const std::optional<fs::path>& out, judge::Transport transport) {
    require_file(predictions, "run generate first");
    judge::SentimentOracle oracle(cfg, std::move(transport));
    const judge::CoherenceReport r = judge::coherence_rate(metrics::read_predictions(predictions), oracle);
    if (out) write_text(*out, r.to_json().dump(2) + "\n");
    return r;
}

judge::CoherenceReport Pipeline::judge(std::size_t split, Variant variant, judge::Transport transport) {
    check_split(split);
    const judge::CoherenceReport r = judge_file(config_.judge, workdir_.predictions(variant, split),
                                                workdir_.coherence(variant, split), std::move(transport));
    if (r.unparseable > 0) note("warning: " + std::to_string(r.unparseable) + " unparseable judge replies excluded");
    note("coherence " + std::to_string(r.rate) + "% over " + std::to_string(r.judged) + " verdicts");
    return r;
}

metrics::MetricsReport Pipeline::run(Variant variant, bool force) {
    if (force || !fs::exists(workdir_.split(config_.repeats - 1))) prepare(force);
    for (std::size_t k = 0; k < config_.repeats; ++k) {
        train(k, variant);
        generate(k, variant);
        judge(k, variant);
    }
    return evaluate_all(variant);
}

}  // namespace cier::app
