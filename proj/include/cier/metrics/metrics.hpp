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

#ifndef CIER_METRICS_METRICS_HPP_
#define CIER_METRICS_METRICS_HPP_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace cier::metrics {

/// Lowercases, splits on whitespace and emits every ASCII punctuation
/// character as its own token.
std::vector<std::string> tokenize(std::string_view text);

struct RatingErrors {
    double rmse = 0.0;
    double mae = 0.0;
};

/// Throws ValidationError on empty or mismatched inputs.
RatingErrors rmse_mae(const std::vector<double>& pred, const std::vector<int>& truth);

/// Clipped n-gram counts for one order, summed over a corpus.
struct NgramStats {
    long matches = 0;
    long candidate_total = 0;
};

/// Corpus-level statistics for orders 1..max_n plus the two lengths.
struct BleuStats {
    std::vector<NgramStats> orders;
    long candidate_length = 0;
    long reference_length = 0;
};

BleuStats bleu_stats(const std::vector<std::vector<std::string>>& candidates,
                     const std::vector<std::vector<std::string>>& references, int max_n);

/// Score from statistics: brevity penalty times the geometric mean of the
/// modified precisions with uniform weights. No unigram match gives 0; a
/// higher order without matches contributes log(1e-9).
double bleu_from_stats(const BleuStats& stats, int n);

/// Corpus BLEU-n (n = 1 or 4) over metric tokens; one reference per candidate.
double bleu(const std::vector<std::string>& candidates, const std::vector<std::string>& references, int n);

struct RougeScores {
    double rouge1_recall = 0.0;
    double rouge2_recall = 0.0;
    double rougeL_f1 = 0.0;
};

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b);

/// Per-pair ROUGE-1/2 recall and ROUGE-L F1 averaged over the corpus.
RougeScores rouge(const std::vector<std::string>& candidates, const std::vector<std::string>& references);

struct Explainability {
    double fmr = 0.0;
    double fcr = 0.0;
    double div = 0.0;
    double usr = 0.0;
    bool div_defined = true;  // false when fewer than two texts
};

/// `features[i]` are the ground-truth features of record i. A feature counts
/// as present in a text when its tokens occur contiguously in the text tokens.
Explainability explainability(const std::vector<std::string>& generated,
                              const std::vector<std::vector<std::string>>& features);

/// Coherent iff |y - y_hat| <= 1. Throws ValidationError when y is outside
/// [1,5] or y_hat outside {1..5}.
int coherent(double y, int y_hat);

struct MetricsReport {
    double rmse = 0.0;
    double mae = 0.0;
    double bleu1 = 0.0;  // percentages from here on, except div
    double bleu4 = 0.0;
    double rouge1_recall = 0.0;
    double rouge2_recall = 0.0;
    double rougeL_f1 = 0.0;
    double fmr = 0.0;
    double fcr = 0.0;
    double usr = 0.0;
    double div = 0.0;
    bool div_defined = true;
    double coherence_rate = -1.0;  // percentage; negative when not measured
    std::size_t n = 0;

    nlohmann::json to_json() const;
    static MetricsReport from_json(const nlohmann::json& j);
    std::string csv_header() const;
    std::string csv_row() const;
};

/// One line of a prediction file.
struct Prediction {
    std::string user;
    std::string item;
    int rating_true = 0;
    double rating_pred = 0.0;
    std::string explanation_true;
    std::string explanation_pred;
    std::vector<std::string> features;

    bool operator==(const Prediction&) const = default;
};

std::string to_json_line(const Prediction& p);
Prediction parse_prediction(std::string_view line, std::size_t line_no = 0);
std::vector<Prediction> read_predictions(const std::filesystem::path& path);
void write_predictions(const std::filesystem::path& path, const std::vector<Prediction>& predictions);

/// All text and rating metrics for one prediction set.
MetricsReport evaluate(const std::vector<Prediction>& predictions);

/// Field-wise mean over reports (coherence only over reports that measured it).
MetricsReport aggregate(const std::vector<MetricsReport>& reports);

}  // namespace cier::metrics

#endif  // CIER_METRICS_METRICS_HPP_
