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

// Coherence adjudication between predicted ratings and generated text. Three
// oracle kinds share one interface: an offline polarity lexicon, a remote
// sentiment classifier and a chat-completions judge that answers Yes/No.

#ifndef CIER_JUDGE_JUDGE_HPP_
#define CIER_JUDGE_JUDGE_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "cier/common.hpp"
#include "cier/metrics/metrics.hpp"

namespace cier::judge {

/// Word polarities in [-1, 1].
class Lexicon {
public:
    Lexicon() = default;

    /// Small general-purpose review lexicon compiled into the library.
    static Lexicon builtin();

    /// Plain text, one "word<TAB>polarity" per line; blank lines and lines
    /// starting with '#' are skipped.
    static Lexicon load(const std::filesystem::path& path);

    void add(std::string word, double polarity);
    std::optional<double> polarity(std::string_view word) const;
    std::size_t size() const { return words_.size(); }

    /// Mean polarity of matched tokens mapped onto 1..5 (five equal bins over
    /// [-1, 1]); 3 when nothing matches. Never throws.
    int score(std::string_view text) const;

private:
    std::unordered_map<std::string, double> words_;
};

/// Bin index of a mean polarity, 1..5.
int polarity_to_rating(double mean_polarity);

enum class OracleKind { kLexicon, kRemoteClassifier, kLlmJudge };

std::string to_string(OracleKind kind);
OracleKind oracle_kind_from_string(std::string_view s);

struct JudgeConfig {
    OracleKind kind = OracleKind::kLexicon;
    std::string lexicon_path;  // empty: built-in lexicon
    std::string endpoint;      // full URL for the remote kinds
    std::string model = "gpt-4o";
    std::string api_key_env = "CIER_JUDGE_API_KEY";
    double timeout_s = 30.0;
    int max_retries = 3;
    double backoff_s = 0.5;  // doubled on every retry
    int concurrency = 8;
    std::size_t sample_size = 500;
    std::uint64_t seed = 42;
    std::string cache_path;     // empty: in-memory cache only
    std::string prompt_path;    // empty: built-in template

    void validate() const;
};

/// Raised when a remote call still fails after all retries.
class TransportError : public Error {
public:
    using Error::Error;
};

/// Sends one JSON request body and returns the response body. Throws
/// TransportError on failure.
using Transport = std::function<std::string(const std::string& body)>;

/// Transport over HTTP(S) POST to `cfg.endpoint`, with a bearer token taken
/// from the environment variable named by `cfg.api_key_env` when it is set.
Transport http_transport(const JudgeConfig& cfg);

/// Versioned judge instruction; placeholders {rating} and {explanation}.
std::string_view prompt_template_v1();
std::string render_prompt(std::string_view tmpl, double rating, std::string_view explanation);

/// true for Yes, false for No, nullopt otherwise. Leading whitespace, quotes
/// and markup are ignored and the comparison is case-insensitive.
std::optional<bool> parse_verdict(std::string_view reply);

/// Integer sentiment 1..5 from a classifier reply: {"score": k}, {"label": ..}
/// or a (nested) list of {"label", "score"} candidates.
std::optional<int> parse_classifier_reply(const nlohmann::json& reply);

/// Append-only JSONL store of {"key", "reply"} lines; memory only when the
/// path is empty.
class ReplyCache {
public:
    ReplyCache() = default;
    explicit ReplyCache(std::filesystem::path path);

    std::optional<std::string> get(const std::string& key) const;
    void put(const std::string& key, const std::string& reply);
    std::size_t size() const;

private:
    std::filesystem::path path_;
    std::unordered_map<std::string, std::string> entries_;
    mutable std::mutex mu_;
};

enum class Verdict { kCoherent, kIncoherent, kUnparseable };

struct JudgeVerdict {
    std::size_t index = 0;  // line in the prediction file
    std::string user;
    std::string item;
    Verdict verdict = Verdict::kUnparseable;
    std::string reply;  // raw reply, or the oracle score for sentiment kinds
    bool cached = false;
};

class SentimentOracle {
public:
    /// Remote kinds without a transport use http_transport(cfg).
    explicit SentimentOracle(JudgeConfig cfg, Transport transport = {});

    const JudgeConfig& config() const { return cfg_; }
    OracleKind kind() const { return cfg_.kind; }

    /// Sentiment rating of a text (lexicon and classifier kinds).
    int score(const std::string& text);

    /// Verdict for one prediction under any kind.
    JudgeVerdict judge(const metrics::Prediction& p, std::size_t index);

    std::size_t network_calls() const;

private:
    // Cached, retried remote call; `accept` decides whether a reply is usable
    // (only usable replies are cached).
    std::string call(const std::string& body, const std::function<bool(const std::string&)>& accept,
                     bool use_cache, bool* cached);
    // Remote classifier score, asked once more when the first reply is unusable.
    std::optional<int> classify(const std::string& text, std::string* reply, bool* cached);

    JudgeConfig cfg_;
    Transport transport_;
    Lexicon lexicon_;
    std::string template_;
    ReplyCache cache_;
    mutable std::mutex mu_;
    std::size_t calls_ = 0;
};

/// Seeded sample of min(sample_size, n) distinct indices, in ascending order.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t sample_size, std::uint64_t seed);

/// Judges a seeded sample with at most cfg.concurrency requests in flight.
std::vector<JudgeVerdict> judge_sample(const std::vector<metrics::Prediction>& predictions, SentimentOracle& oracle,
                                       std::size_t sample_size, std::uint64_t seed);

struct CoherenceReport {
    OracleKind kind = OracleKind::kLexicon;
    double rate = 0.0;  // percentage
    std::size_t judged = 0;
    std::size_t coherent = 0;
    std::size_t unparseable = 0;
    std::size_t cached = 0;

    nlohmann::json to_json() const;
};

/// Sentiment kinds score every prediction; llm_judge uses the seeded sample.
/// Throws Error when no verdict could be parsed.
CoherenceReport coherence_rate(const std::vector<metrics::Prediction>& predictions, SentimentOracle& oracle);

}  // namespace cier::judge

#endif  // CIER_JUDGE_JUDGE_HPP_
