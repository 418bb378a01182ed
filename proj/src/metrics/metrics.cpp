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

#include "cier/metrics/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cier/common.hpp"

namespace cier::metrics {
namespace {

using Tokens = std::vector<std::string>;
using NgramCounts = std::map<Tokens, long>;

constexpr double kBleuEpsilon = 1e-9;

NgramCounts count_ngrams(const Tokens& tokens, int n) {
    NgramCounts counts;
    const auto un = static_cast<std::size_t>(n);
    for (std::size_t i = 0; i + un <= tokens.size(); ++i) {
        ++counts[Tokens(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                        tokens.begin() + static_cast<std::ptrdiff_t>(i + un))];
    }
    return counts;
}

long clipped_overlap(const NgramCounts& cand, const NgramCounts& ref) {
    long m = 0;
    for (const auto& [gram, c] : cand) {
        auto it = ref.find(gram);
        if (it != ref.end()) m += std::min(c, it->second);
    }
    return m;
}

void check_corpus(std::size_t a, std::size_t b) {
    if (a == 0) throw ValidationError("empty corpus");
    if (a != b) throw ValidationError("candidate and reference counts differ");
}

bool contains_sequence(const Tokens& text, const Tokens& needle) {
    if (needle.empty() || needle.size() > text.size()) return false;
    return std::search(text.begin(), text.end(), needle.begin(), needle.end()) != text.end();
}

std::string join(const Tokens& t) {
    std::string s;
    for (const auto& w : t) {
        if (!s.empty()) s += ' ';
        s += w;
    }
    return s;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    Tokens out;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else if (c < 0x80 && std::ispunct(c)) {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
            out.emplace_back(1, static_cast<char>(c));
        } else {
            cur.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

RatingErrors rmse_mae(const std::vector<double>& pred, const std::vector<int>& truth) {
    if (pred.empty()) throw ValidationError("rmse_mae: empty input");
    if (pred.size() != truth.size()) throw ValidationError("rmse_mae: length mismatch");
    double se = 0.0;
    double ae = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - truth[i];
        se += d * d;
        ae += std::abs(d);
    }
    const auto n = static_cast<double>(pred.size());
    return {std::sqrt(se / n), ae / n};
}

BleuStats bleu_stats(const std::vector<Tokens>& candidates, const std::vector<Tokens>& references, int max_n) {
    check_corpus(candidates.size(), references.size());
    if (max_n < 1) throw ValidationError("BLEU order must be positive");
    BleuStats s;
    s.orders.assign(static_cast<std::size_t>(max_n), {});
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        s.candidate_length += static_cast<long>(candidates[i].size());
        s.reference_length += static_cast<long>(references[i].size());
        for (int n = 1; n <= max_n; ++n) {
            auto& o = s.orders[static_cast<std::size_t>(n - 1)];
            o.matches += clipped_overlap(count_ngrams(candidates[i], n), count_ngrams(references[i], n));
            o.candidate_total += std::max<long>(0, static_cast<long>(candidates[i].size()) - n + 1);
        }
    }
    return s;
}

double bleu_from_stats(const BleuStats& stats, int n) {
    if (n < 1 || static_cast<std::size_t>(n) > stats.orders.size()) throw ValidationError("BLEU order out of range");
    if (stats.candidate_length == 0 || stats.orders[0].matches == 0) return 0.0;
    const auto c = static_cast<double>(stats.candidate_length);
    const auto r = static_cast<double>(stats.reference_length);
    const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
    double log_sum = 0.0;
    for (int k = 0; k < n; ++k) {
        const auto& o = stats.orders[static_cast<std::size_t>(k)];
        const double p = o.matches > 0 ? static_cast<double>(o.matches) / static_cast<double>(o.candidate_total)
                                       : kBleuEpsilon;
        log_sum += std::log(p) / n;
    }
    return bp * std::exp(log_sum);
}

double bleu(const std::vector<std::string>& candidates, const std::vector<std::string>& references, int n) {
    check_corpus(candidates.size(), references.size());
    std::vector<Tokens> c;
    std::vector<Tokens> r;
    for (const auto& s : candidates) c.push_back(tokenize(s));
    for (const auto& s : references) r.push_back(tokenize(s));
    return bleu_from_stats(bleu_stats(c, r, n), n);
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
    std::vector<std::size_t> prev(b.size() + 1, 0);
    std::vector<std::size_t> cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

RougeScores rouge(const std::vector<std::string>& candidates, const std::vector<std::string>& references) {
    check_corpus(candidates.size(), references.size());
    RougeScores sum;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const Tokens c = tokenize(candidates[i]);
        const Tokens r = tokenize(references[i]);
        for (int n = 1; n <= 2; ++n) {
            const long ref_total = std::max<long>(0, static_cast<long>(r.size()) - n + 1);
            if (ref_total == 0) continue;
            const double recall = static_cast<double>(clipped_overlap(count_ngrams(c, n), count_ngrams(r, n))) /
                                  static_cast<double>(ref_total);
            (n == 1 ? sum.rouge1_recall : sum.rouge2_recall) += recall;
        }
        const std::size_t lcs = lcs_length(c, r);
        if (lcs > 0) {
            const double p = static_cast<double>(lcs) / static_cast<double>(c.size());
            const double rc = static_cast<double>(lcs) / static_cast<double>(r.size());
            sum.rougeL_f1 += 2.0 * p * rc / (p + rc);
        }
    }
    const auto n = static_cast<double>(candidates.size());
    return {sum.rouge1_recall / n, sum.rouge2_recall / n, sum.rougeL_f1 / n};
}

Explainability explainability(const std::vector<std::string>& generated,
                              const std::vector<std::vector<std::string>>& features) {
    check_corpus(generated.size(), features.size());
    const std::size_t n = generated.size();

    std::map<std::string, Tokens> dataset_features;  // normalized text -> tokens
    std::vector<std::vector<std::string>> record_features(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& f : features[i]) {
            Tokens t = tokenize(f);
            if (t.empty()) continue;
            const std::string key = join(t);
            record_features[i].push_back(key);
            dataset_features.emplace(key, std::move(t));
        }
    }

    std::vector<std::set<std::string>> present(n);
    std::set<std::string> covered;
    std::set<std::string> distinct_texts;
    std::size_t matched = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const Tokens text = tokenize(generated[i]);
        for (const auto& [key, tokens] : dataset_features) {
            if (contains_sequence(text, tokens)) present[i].insert(key);
        }
        covered.insert(present[i].begin(), present[i].end());
        const bool any = std::any_of(record_features[i].begin(), record_features[i].end(),
                                     [&](const std::string& k) { return present[i].contains(k); });
        if (any) ++matched;
        distinct_texts.insert(generated[i]);
    }

    Explainability e;
    e.fmr = static_cast<double>(matched) / static_cast<double>(n);
    e.fcr = dataset_features.empty() ? 0.0
                                     : static_cast<double>(covered.size()) / static_cast<double>(dataset_features.size());
    e.usr = static_cast<double>(distinct_texts.size()) / static_cast<double>(n);
    if (n < 2) {
        e.div = 0.0;
        e.div_defined = false;
    } else {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                std::size_t overlap = 0;
                for (const auto& k : present[i]) overlap += present[j].count(k);
                total += static_cast<double>(overlap);
            }
        }
        e.div = total / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
    }
    return e;
}

int coherent(double y, int y_hat) {
    if (!(y >= 1.0 && y <= 5.0)) throw ValidationError("coherent: model rating outside [1,5]");
    if (y_hat < 1 || y_hat > 5) throw ValidationError("coherent: sentiment rating outside {1..5}");
    return std::abs(y - y_hat) <= 1.0 ? 1 : 0;
}

nlohmann::json MetricsReport::to_json() const {
    nlohmann::json j = {{"n", n},
                        {"rmse", rmse},
                        {"mae", mae},
                        {"bleu1", bleu1},
                        {"bleu4", bleu4},
                        {"rouge1_recall", rouge1_recall},
                        {"rouge2_recall", rouge2_recall},
                        {"rougeL_f1", rougeL_f1},
                        {"fmr", fmr},
                        {"fcr", fcr},
                        {"usr", usr},
                        {"div", div},
                        {"div_defined", div_defined}};
    if (coherence_rate >= 0.0) j["coherence_rate"] = coherence_rate;
    return j;
}

MetricsReport MetricsReport::from_json(const nlohmann::json& j) {
    MetricsReport r;
    r.n = j.value("n", std::size_t{0});
    r.rmse = j.at("rmse").get<double>();
    r.mae = j.at("mae").get<double>();
    r.bleu1 = j.at("bleu1").get<double>();
    r.bleu4 = j.at("bleu4").get<double>();
    r.rouge1_recall = j.at("rouge1_recall").get<double>();
    r.rouge2_recall = j.at("rouge2_recall").get<double>();
    r.rougeL_f1 = j.at("rougeL_f1").get<double>();
    r.fmr = j.at("fmr").get<double>();
    r.fcr = j.at("fcr").get<double>();
    r.usr = j.at("usr").get<double>();
    r.div = j.at("div").get<double>();
    r.div_defined = j.value("div_defined", true);
    r.coherence_rate = j.value("coherence_rate", -1.0);
    return r;
}

std::string MetricsReport::csv_header() const {
    return "n,rmse,mae,bleu1,bleu4,rouge1_recall,rouge2_recall,rougeL_f1,fmr,fcr,usr,div,coherence_rate";
}

std::string MetricsReport::csv_row() const {
    std::ostringstream os;
    os.precision(6);
    os << n << ',' << rmse << ',' << mae << ',' << bleu1 << ',' << bleu4 << ',' << rouge1_recall << ','
       << rouge2_recall << ',' << rougeL_f1 << ',' << fmr << ',' << fcr << ',' << usr << ',' << div << ',';
    if (coherence_rate >= 0.0) os << coherence_rate;
    return os.str();
}

std::string to_json_line(const Prediction& p) {
    nlohmann::json j = {{"user", p.user},
                        {"item", p.item},
                        {"rating_true", p.rating_true},
                        {"rating_pred", p.rating_pred},
                        {"explanation_true", p.explanation_true},
                        {"explanation_pred", p.explanation_pred},
                        {"features", p.features}};
    return j.dump();
}

Prediction parse_prediction(std::string_view line, std::size_t line_no) {
    try {
        const auto j = nlohmann::json::parse(line);
        Prediction p;
        p.user = j.at("user").get<std::string>();
        p.item = j.at("item").get<std::string>();
        p.rating_true = j.at("rating_true").get<int>();
        p.rating_pred = j.at("rating_pred").get<double>();
        p.explanation_true = j.at("explanation_true").get<std::string>();
        p.explanation_pred = j.at("explanation_pred").get<std::string>();
        p.features = j.value("features", std::vector<std::string>{});
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("prediction: ") + e.what(), line_no);
    }
}

std::vector<Prediction> read_predictions(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open prediction file: " + path.string());
    std::vector<Prediction> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        out.push_back(parse_prediction(line, line_no));
    }
    return out;
}

void write_predictions(const std::filesystem::path& path, const std::vector<Prediction>& predictions) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write prediction file: " + path.string());
    for (const auto& p : predictions) out << to_json_line(p) << '\n';
}

MetricsReport evaluate(const std::vector<Prediction>& predictions) {
    if (predictions.empty()) throw ValidationError("no predictions to evaluate");
    std::vector<double> pred;
    std::vector<int> truth;
    std::vector<std::string> cand;
    std::vector<std::string> refs;
    std::vector<std::vector<std::string>> feats;
    for (const auto& p : predictions) {
        pred.push_back(p.rating_pred);
        truth.push_back(p.rating_true);
        cand.push_back(p.explanation_pred);
        refs.push_back(p.explanation_true);
        feats.push_back(p.features);
    }
    MetricsReport r;
    r.n = predictions.size();
    const auto err = rmse_mae(pred, truth);
    r.rmse = err.rmse;
    r.mae = err.mae;

    std::vector<Tokens> ct;
    std::vector<Tokens> rt;
    for (const auto& s : cand) ct.push_back(tokenize(s));
    for (const auto& s : refs) rt.push_back(tokenize(s));
    const BleuStats stats = bleu_stats(ct, rt, 4);
    r.bleu1 = 100.0 * bleu_from_stats(stats, 1);
    r.bleu4 = 100.0 * bleu_from_stats(stats, 4);

    const RougeScores rs = rouge(cand, refs);
    r.rouge1_recall = 100.0 * rs.rouge1_recall;
    r.rouge2_recall = 100.0 * rs.rouge2_recall;
    r.rougeL_f1 = 100.0 * rs.rougeL_f1;

    const Explainability e = explainability(cand, feats);
    r.fmr = 100.0 * e.fmr;
    r.fcr = 100.0 * e.fcr;
    r.usr = 100.0 * e.usr;
    r.div = e.div;
    r.div_defined = e.div_defined;
    return r;
}

MetricsReport aggregate(const std::vector<MetricsReport>& reports) {
    if (reports.empty()) throw ValidationError("no reports to aggregate");
    MetricsReport m;
    double coh_sum = 0.0;
    std::size_t coh_n = 0;
    for (const auto& r : reports) {
        m.n += r.n;
        m.rmse += r.rmse;
        m.mae += r.mae;
        m.bleu1 += r.bleu1;
        m.bleu4 += r.bleu4;
        m.rouge1_recall += r.rouge1_recall;
        m.rouge2_recall += r.rouge2_recall;
        m.rougeL_f1 += r.rougeL_f1;
        m.fmr += r.fmr;
        m.fcr += r.fcr;
        m.usr += r.usr;
        m.div += r.div;
        m.div_defined = m.div_defined && r.div_defined;
        if (r.coherence_rate >= 0.0) {
            coh_sum += r.coherence_rate;
            ++coh_n;
        }
    }
    const auto k = static_cast<double>(reports.size());
    for (double* f : {&m.rmse, &m.mae, &m.bleu1, &m.bleu4, &m.rouge1_recall, &m.rouge2_recall, &m.rougeL_f1, &m.fmr,
                      &m.fcr, &m.usr, &m.div}) {
        *f /= k;
    }
    m.coherence_rate = coh_n ? coh_sum / static_cast<double>(coh_n) : -1.0;
    return m;
}

}  // namespace cier::metrics
