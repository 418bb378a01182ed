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

#include "cier/judge/judge.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

namespace cier::judge {
namespace {

constexpr std::string_view kPromptV1 =
    "You are checking whether a recommendation explanation agrees with the rating it comes with.\n"
    "Ratings use a 1 to 5 scale. The sentiment each rating implies:\n"
    "- 1: strongly negative, the explanation complains about the item.\n"
    "- 2: mostly negative, at most a minor positive remark.\n"
    "- 3: neutral or mixed.\n"
    "- 4: mostly positive, at most a minor reservation.\n"
    "- 5: strongly positive, praise without reservation.\n"
    "The pair is coherent when the sentiment of the explanation matches the rating or an adjacent rating.\n"
    "\n"
    "Rating: {rating}\n"
    "Explanation: {explanation}\n"
    "\n"
    "Is the explanation coherent with the rating? Answer with \"Yes\" or \"No\".\n";

struct LexiconEntry {
    const char* word;
    double polarity;
};

constexpr LexiconEntry kBuiltinLexicon[] = {
    {"excellent", 1.0},     {"great", 1.0},         {"wonderful", 1.0},     {"amazing", 1.0},
    {"perfect", 1.0},       {"fantastic", 1.0},     {"outstanding", 1.0},   {"superb", 1.0},
    {"love", 1.0},          {"loved", 1.0},         {"best", 1.0},          {"awesome", 1.0},
    {"good", 0.5},          {"nice", 0.5},          {"pleasant", 0.5},      {"comfortable", 0.5},
    {"friendly", 0.5},      {"helpful", 0.5},       {"enjoyable", 0.5},     {"lovely", 0.5},
    {"like", 0.5},          {"liked", 0.5},         {"recommend", 0.5},     {"tasty", 0.5},
    {"okay", 0.0},          {"ok", 0.0},            {"average", 0.0},       {"decent", 0.0},
    {"fair", 0.0},          {"ordinary", 0.0},      {"acceptable", 0.0},    {"mixed", 0.0},
    {"poor", -0.5},         {"disappointing", -0.5},{"bad", -0.5},          {"dirty", -0.5},
    {"rude", -0.5},         {"noisy", -0.5},        {"slow", -0.5},         {"uncomfortable", -0.5},
    {"mediocre", -0.5},     {"bland", -0.5},        {"overpriced", -0.5},   {"unhelpful", -0.5},
    {"terrible", -1.0},     {"awful", -1.0},        {"horrible", -1.0},     {"disgusting", -1.0},
    {"worst", -1.0},        {"hate", -1.0},         {"hated", -1.0},        {"dreadful", -1.0},
    {"appalling", -1.0},    {"filthy", -1.0},
};

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string format_rating(double r) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", r);
    return buf;
}

// Chat-completions replies carry the text in choices[0].message.content;
// anything else is taken verbatim.
std::string chat_content(const std::string& body) {
    const auto j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_object() && j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
        const auto& c = j["choices"][0];
        if (c.contains("message") && c["message"].contains("content") && c["message"]["content"].is_string()) {
            return c["message"]["content"].get<std::string>();
        }
        if (c.contains("text") && c["text"].is_string()) return c["text"].get<std::string>();
    }
    return body;
}

std::optional<int> rating_from_label(const std::string& label) {
    const std::string l = lower(label);
    if (l.rfind("label_", 0) == 0 && l.size() == 7 && l[6] >= '0' && l[6] <= '4') return l[6] - '0' + 1;
    for (char c : l) {
        if (c >= '1' && c <= '5') return c - '0';
    }
    if (l.find("negative") != std::string::npos) return 1;
    if (l.find("neutral") != std::string::npos) return 3;
    if (l.find("positive") != std::string::npos) return 5;
    return std::nullopt;
}

}  // namespace

// ---- Lexicon ----

Lexicon Lexicon::builtin() {
    Lexicon lex;
    for (const auto& e : kBuiltinLexicon) lex.add(e.word, e.polarity);
    return lex;
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open lexicon file: " + path.string());
    Lexicon lex;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto tab = t.find('\t');
        if (tab == std::string::npos) throw ParseError("expected word<TAB>polarity", line_no);
        const std::string word = trim(t.substr(0, tab));
        const std::string value = trim(t.substr(tab + 1));
        double polarity = 0.0;
        try {
            std::size_t used = 0;
            polarity = std::stod(value, &used);
            if (used != value.size()) throw std::invalid_argument(value);
        } catch (const std::exception&) {
            throw ParseError("bad polarity '" + value + "'", line_no);
        }
        if (word.empty()) throw ParseError("empty word", line_no);
        if (!(polarity >= -1.0 && polarity <= 1.0)) throw ParseError("polarity outside [-1,1]", line_no);
        lex.add(word, polarity);
    }
    return lex;
}

void Lexicon::add(std::string word, double polarity) {
    if (!(polarity >= -1.0 && polarity <= 1.0)) throw ValidationError("polarity outside [-1,1] for " + word);
    words_[lower(word)] = polarity;
}

std::optional<double> Lexicon::polarity(std::string_view word) const {
    auto it = words_.find(lower(word));
    if (it == words_.end()) return std::nullopt;
    return it->second;
}

int polarity_to_rating(double m) {
    if (!std::isfinite(m)) return 3;
    m = std::clamp(m, -1.0, 1.0);
    return std::min(4, static_cast<int>(std::floor((m + 1.0) * 2.5))) + 1;
}

int Lexicon::score(std::string_view text) const {
    double sum = 0.0;
    std::size_t hits = 0;
    for (const auto& tok : metrics::tokenize(text)) {
        auto it = words_.find(tok);
        if (it == words_.end()) continue;
        sum += it->second;
        ++hits;
    }
    return hits ? polarity_to_rating(sum / static_cast<double>(hits)) : 3;
}

// ---- config ----

std::string to_string(OracleKind kind) {
    switch (kind) {
        case OracleKind::kLexicon: return "lexicon";
        case OracleKind::kRemoteClassifier: return "remote_classifier";
        case OracleKind::kLlmJudge: return "llm_judge";
    }
    return "lexicon";
}

OracleKind oracle_kind_from_string(std::string_view s) {
    if (s == "lexicon") return OracleKind::kLexicon;
    if (s == "remote_classifier") return OracleKind::kRemoteClassifier;
    if (s == "llm_judge") return OracleKind::kLlmJudge;
    throw ValidationError("unknown judge kind '" + std::string(s) + "'");
}

void JudgeConfig::validate() const {
    if (kind != OracleKind::kLexicon && endpoint.empty()) {
        throw ValidationError("judge kind " + to_string(kind) + " needs an endpoint");
    }
    if (timeout_s <= 0.0) throw ValidationError("judge timeout must be positive");
    if (max_retries < 0) throw ValidationError("judge max_retries must be >= 0");
    if (backoff_s < 0.0) throw ValidationError("judge backoff must be >= 0");
    if (concurrency < 1 || concurrency > 8) throw ValidationError("judge concurrency must be in [1, 8]");
    if (sample_size == 0) throw ValidationError("judge sample_size must be positive");
}

// ---- prompt / parsing ----

std::string_view prompt_template_v1() { return kPromptV1; }

std::string render_prompt(std::string_view tmpl, double rating, std::string_view explanation) {
    std::string out;
    out.reserve(tmpl.size() + explanation.size());
    for (std::size_t i = 0; i < tmpl.size();) {
        if (tmpl.substr(i, 8) == "{rating}") {
            out += format_rating(rating);
            i += 8;
        } else if (tmpl.substr(i, 13) == "{explanation}") {
            out += explanation;
            i += 13;
        } else {
            out += tmpl[i++];
        }
    }
    return out;
}

std::optional<bool> parse_verdict(std::string_view reply) {
    std::size_t i = 0;
    while (i < reply.size()) {
        const unsigned char c = static_cast<unsigned char>(reply[i]);
        if (std::isspace(c) || c == '"' || c == '\'' || c == '*' || c == '`' || c == '_' || c == '#' || c == '>') {
            ++i;
        } else {
            break;
        }
    }
    const std::string head = lower(reply.substr(i, 4));
    auto word_ends = [&](std::size_t len) {
        return head.size() == len || !std::isalpha(static_cast<unsigned char>(head[len]));
    };
    if (head.rfind("yes", 0) == 0 && word_ends(3)) return true;
    if (head.rfind("no", 0) == 0 && word_ends(2)) return false;
    return std::nullopt;
}

std::optional<int> parse_classifier_reply(const nlohmann::json& reply) {
    const nlohmann::json* j = &reply;
    // Unwrap [[{...}, ...]] as returned by batched pipelines.
    while (j->is_array() && j->size() == 1 && (*j)[0].is_array()) j = &(*j)[0];
    if (j->is_array()) {
        const nlohmann::json* best = nullptr;
        double best_score = -std::numeric_limits<double>::infinity();
        for (const auto& c : *j) {
            if (!c.is_object() || !c.contains("label")) continue;
            const double s = c.value("score", 0.0);
            if (!best || s > best_score) {
                best = &c;
                best_score = s;
            }
        }
        if (!best || !(*best)["label"].is_string()) return std::nullopt;
        return rating_from_label((*best)["label"].get<std::string>());
    }
    if (!j->is_object()) return std::nullopt;
    if (j->contains("label") && (*j)["label"].is_string()) return rating_from_label((*j)["label"].get<std::string>());
    for (const char* key : {"rating", "score"}) {
        if (j->contains(key) && (*j)[key].is_number_integer()) {
            const int v = (*j)[key].get<int>();
            if (v >= 1 && v <= 5) return v;
        }
    }
    return std::nullopt;
}

// ---- cache ----

ReplyCache::ReplyCache(std::filesystem::path path) : path_(std::move(path)) {
    if (path_.empty()) return;
    std::ifstream in(path_);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto j = nlohmann::json::parse(line, nullptr, false);
        if (!j.is_object() || !j.contains("key") || !j.contains("reply")) {
            throw ParseError("malformed cache entry in " + path_.string(), line_no);
        }
        entries_[j["key"].get<std::string>()] = j["reply"].get<std::string>();
    }
}

std::optional<std::string> ReplyCache::get(const std::string& key) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void ReplyCache::put(const std::string& key, const std::string& reply) {
    std::lock_guard<std::mutex> lock(mu_);
    if (!entries_.emplace(key, reply).second) return;
    if (path_.empty()) return;
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    if (!out) throw Error("cannot append to cache " + path_.string());
    out << nlohmann::json{{"key", key}, {"reply", reply}}.dump() << '\n';
}

std::size_t ReplyCache::size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return entries_.size();
}

// ---- oracle ----

SentimentOracle::SentimentOracle(JudgeConfig cfg, Transport transport)
    : cfg_(std::move(cfg)), transport_(std::move(transport)), cache_(cfg_.cache_path) {
    cfg_.validate();
    lexicon_ = cfg_.lexicon_path.empty() ? Lexicon::builtin() : Lexicon::load(cfg_.lexicon_path);
    template_ = cfg_.prompt_path.empty() ? std::string(kPromptV1) : read_file(cfg_.prompt_path);
    if (cfg_.kind != OracleKind::kLexicon && !transport_) transport_ = http_transport(cfg_);
}

std::size_t SentimentOracle::network_calls() const {
    std::lock_guard<std::mutex> lock(mu_);
    return calls_;
}

std::string SentimentOracle::call(const std::string& body, const std::function<bool(const std::string&)>& accept,
                                  bool use_cache, bool* cached) {
    const std::string key = to_hex(fnv1a64(body));
    if (use_cache) {
        if (auto hit = cache_.get(key)) {
            *cached = true;
            return *hit;
        }
    }
    *cached = false;
    std::string reply;
    for (int attempt = 0;; ++attempt) {
        try {
            {
                std::lock_guard<std::mutex> lock(mu_);
                ++calls_;
            }
            reply = transport_(body);
            break;
        } catch (const TransportError& e) {
            if (attempt >= cfg_.max_retries) {
                throw TransportError("judge request failed after " + std::to_string(attempt + 1) +
                                     " attempts: " + e.what());
            }
            const double wait = cfg_.backoff_s * std::pow(2.0, attempt);
            std::this_thread::sleep_for(std::chrono::duration<double>(wait));
        }
    }
    if (accept(reply)) cache_.put(key, reply);
    return reply;
}

std::optional<int> SentimentOracle::classify(const std::string& text, std::string* reply, bool* cached) {
    const std::string body = nlohmann::json{{"inputs", text}, {"text", text}}.dump();
    auto parse = [](const std::string& r) { return parse_classifier_reply(nlohmann::json::parse(r, nullptr, false)); };
    auto ok = [&](const std::string& r) { return parse(r).has_value(); };
    *reply = call(body, ok, true, cached);
    auto s = parse(*reply);
    if (!s) {
        *reply = call(body, ok, false, cached);
        s = parse(*reply);
    }
    return s;
}

int SentimentOracle::score(const std::string& text) {
    switch (cfg_.kind) {
        case OracleKind::kLexicon: return lexicon_.score(text);
        case OracleKind::kRemoteClassifier: {
            std::string reply;
            bool cached = false;
            const auto s = classify(text, &reply, &cached);
            if (!s) throw Error("classifier reply has no usable label: " + reply.substr(0, 200));
            return *s;
        }
        case OracleKind::kLlmJudge: break;
    }
    throw ValidationError("score() is not available for the llm_judge kind");
}

JudgeVerdict SentimentOracle::judge(const metrics::Prediction& p, std::size_t index) {
    JudgeVerdict v;
    v.index = index;
    v.user = p.user;
    v.item = p.item;
    if (cfg_.kind != OracleKind::kLlmJudge) {
        if (cfg_.kind == OracleKind::kLexicon) {
            const int s = lexicon_.score(p.explanation_pred);
            v.reply = std::to_string(s);
            v.verdict = metrics::coherent(p.rating_pred, s) ? Verdict::kCoherent : Verdict::kIncoherent;
        } else {
            const auto s = classify(p.explanation_pred, &v.reply, &v.cached);
            if (!s) {
                v.verdict = Verdict::kUnparseable;
            } else {
                v.verdict = metrics::coherent(p.rating_pred, *s) ? Verdict::kCoherent : Verdict::kIncoherent;
            }
        }
        return v;
    }

    nlohmann::json request = {
        {"model", cfg_.model},
        {"messages", nlohmann::json::array({{{"role", "user"},
                                              {"content", render_prompt(template_, p.rating_pred, p.explanation_pred)}}})},
        {"temperature", 0}};
    const std::string body = request.dump();
    auto ok = [](const std::string& r) { return parse_verdict(chat_content(r)).has_value(); };
    std::string reply = call(body, ok, true, &v.cached);
    auto verdict = parse_verdict(chat_content(reply));
    if (!verdict) {
        reply = call(body, ok, false, &v.cached);
        verdict = parse_verdict(chat_content(reply));
    }
    v.reply = chat_content(reply);
    if (!verdict) {
        v.verdict = Verdict::kUnparseable;
    } else {
        v.verdict = *verdict ? Verdict::kCoherent : Verdict::kIncoherent;
    }
    return v;
}

// ---- sampling / aggregation ----

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t sample_size, std::uint64_t seed) {
    const std::size_t k = std::min(n, sample_size);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.below(n - i)]);
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

namespace {

std::vector<JudgeVerdict> judge_indices(const std::vector<metrics::Prediction>& predictions, SentimentOracle& oracle,
                                        const std::vector<std::size_t>& indices) {
    std::vector<JudgeVerdict> out(indices.size());
    const std::size_t workers =
        oracle.kind() == OracleKind::kLexicon
            ? 1
            : std::min<std::size_t>(static_cast<std::size_t>(oracle.config().concurrency), indices.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < indices.size(); ++i) out[i] = oracle.judge(predictions[indices[i]], indices[i]);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mu;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (!failed) {
                const std::size_t i = next++;
                if (i >= indices.size()) return;
                try {
                    out[i] = oracle.judge(predictions[indices[i]], indices[i]);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mu);
                    if (!error) error = std::current_exception();
                    failed = true;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return out;
}

}  // namespace

std::vector<JudgeVerdict> judge_sample(const std::vector<metrics::Prediction>& predictions, SentimentOracle& oracle,
                                       std::size_t sample_size, std::uint64_t seed) {
    if (predictions.empty()) throw ValidationError("no predictions to judge");
    return judge_indices(predictions, oracle, sample_indices(predictions.size(), sample_size, seed));
}

nlohmann::json CoherenceReport::to_json() const {
    return {{"kind", to_string(kind)}, {"coherence_rate", rate}, {"judged", judged},
            {"coherent", coherent},    {"unparseable", unparseable}, {"cached", cached}};
}

CoherenceReport coherence_rate(const std::vector<metrics::Prediction>& predictions, SentimentOracle& oracle) {
    if (predictions.empty()) throw ValidationError("no predictions to judge");
    std::vector<JudgeVerdict> verdicts;
    if (oracle.kind() == OracleKind::kLlmJudge) {
        verdicts = judge_sample(predictions, oracle, oracle.config().sample_size, oracle.config().seed);
    } else {
        std::vector<std::size_t> all(predictions.size());
        std::iota(all.begin(), all.end(), std::size_t{0});
        verdicts = judge_indices(predictions, oracle, all);
    }
    CoherenceReport r;
    r.kind = oracle.kind();
    for (const auto& v : verdicts) {
        if (v.cached) ++r.cached;
        if (v.verdict == Verdict::kUnparseable) {
            ++r.unparseable;
            continue;
        }
        ++r.judged;
        if (v.verdict == Verdict::kCoherent) ++r.coherent;
    }
    if (r.judged == 0) throw Error("no parseable verdicts; coherence rate undefined");
    r.rate = 100.0 * static_cast<double>(r.coherent) / static_cast<double>(r.judged);
    return r;
}

}  // namespace cier::judge
