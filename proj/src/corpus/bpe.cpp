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

#include "cier/corpus/bpe.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace cier::corpus {
namespace {

constexpr const char* kSpecials[] = {"<pad>", "<bos>", "<eos>", "<unk>"};
constexpr const char* kVerbalizer[] = {"1", "2", "3", "4", "5"};

bool is_verbalizer(const std::string& s) {
    return s.size() == 1 && s[0] >= '1' && s[0] <= '5';
}

std::vector<std::string> split_words(const std::string& normalized) {
    std::vector<std::string> words;
    std::size_t start = 0;
    while (start < normalized.size()) {
        std::size_t end = normalized.find(' ', start);
        if (end == std::string::npos) end = normalized.size();
        words.push_back(normalized.substr(start, end - start));
        start = end + 1;
    }
    return words;
}

// Symbols of the i-th word of a text, with the word marker for i > 0.
std::vector<std::string> word_symbols(const std::string& word, bool marked) {
    std::vector<std::string> symbols;
    if (marked) symbols.emplace_back(BpeModel::kWordMarker);
    for (auto& s : utf8_symbols(word)) symbols.push_back(std::move(s));
    return symbols;
}

}  // namespace

std::string normalize_text(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

std::vector<std::string> utf8_symbols(std::string_view word) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < word.size()) {
        const auto lead = static_cast<unsigned char>(word[i]);
        std::size_t len = 1;
        if (lead >= 0xF0) len = 4;
        else if (lead >= 0xE0) len = 3;
        else if (lead >= 0xC0) len = 2;
        len = std::min(len, word.size() - i);
        out.emplace_back(word.substr(i, len));
        i += len;
    }
    return out;
}

BpeModel::BpeModel() {
    for (const char* s : kSpecials) add_token(s);
    for (const char* s : kVerbalizer) add_token(s);
    add_token(std::string(kWordMarker));
}

void BpeModel::add_token(const std::string& tok) {
    if (index_.contains(tok)) return;
    index_.emplace(tok, static_cast<TokenId>(tokens_.size()));
    tokens_.push_back(tok);
}

void BpeModel::rebuild_index() {
    index_.clear();
    for (std::size_t i = 0; i < tokens_.size(); ++i) index_.emplace(tokens_[i], static_cast<TokenId>(i));
    merge_rank_.clear();
    for (std::size_t i = 0; i < merges_.size(); ++i) merge_rank_.emplace(merges_[i], i);
}

std::optional<TokenId> BpeModel::find(std::string_view token) const {
    auto it = index_.find(std::string(token));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

TokenId BpeModel::verbalizer_id(int rating) const {
    if (rating < 1 || rating > 5) throw ValidationError("verbalizer rating outside [1,5]");
    return kFirstVerbalizer + rating - 1;
}

std::vector<std::string> BpeModel::encode_word(const std::vector<std::string>& symbols) const {
    std::vector<std::string> parts = symbols;
    while (parts.size() > 1) {
        std::size_t best_rank = SIZE_MAX;
        std::size_t best_pos = 0;
        for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
            auto it = merge_rank_.find({parts[i], parts[i + 1]});
            if (it != merge_rank_.end() && it->second < best_rank) {
                best_rank = it->second;
                best_pos = i;
            }
        }
        if (best_rank == SIZE_MAX) break;
        parts[best_pos] += parts[best_pos + 1];
        parts.erase(parts.begin() + static_cast<std::ptrdiff_t>(best_pos) + 1);
    }
    return parts;
}

std::vector<TokenId> BpeModel::encode(std::string_view text) const {
    std::vector<TokenId> ids;
    const auto words = split_words(normalize_text(text));
    for (std::size_t w = 0; w < words.size(); ++w) {
        for (const auto& piece : encode_word(word_symbols(words[w], w > 0))) {
            auto it = index_.find(piece);
            ids.push_back(it == index_.end() ? kUnk : it->second);
        }
    }
    return ids;
}

std::string BpeModel::decode(const std::vector<TokenId>& ids) const {
    std::string joined;
    for (TokenId id : ids) {
        if (id == kPad || id == kBos || id == kEos) continue;
        if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size() || id == kUnk) {
            joined += "<unk>";
            continue;
        }
        joined += tokens_[static_cast<std::size_t>(id)];
    }
    std::string out;
    out.reserve(joined.size());
    for (std::size_t i = 0; i < joined.size();) {
        if (joined.compare(i, kWordMarker.size(), kWordMarker) == 0) {
            out.push_back(' ');
            i += kWordMarker.size();
        } else {
            out.push_back(joined[i++]);
        }
    }
    return out;
}

std::uint64_t BpeModel::vocab_hash() const {
    std::uint64_t h = fnv1a64("cier-bpe-v1");
    for (const auto& t : tokens_) {
        h = fnv1a64(t, h);
        h = fnv1a64("\n", h);
    }
    for (const auto& [a, b] : merges_) {
        h = fnv1a64(a, h);
        h = fnv1a64(" ", h);
        h = fnv1a64(b, h);
        h = fnv1a64("\n", h);
    }
    return h;
}

std::string BpeModel::to_json() const {
    nlohmann::json merges = nlohmann::json::array();
    for (const auto& [a, b] : merges_) merges.push_back({a, b});
    nlohmann::json j = {{"format", "cier-bpe"},
                        {"version", 1},
                        {"normalization", "lowercase+collapse-whitespace"},
                        {"word_marker", std::string(kWordMarker)},
                        {"specials", {{"pad", kPad}, {"bos", kBos}, {"eos", kEos}, {"unk", kUnk}}},
                        {"verbalizer", {{"1", 4}, {"2", 5}, {"3", 6}, {"4", 7}, {"5", 8}}},
                        {"tokens", tokens_},
                        {"merges", merges}};
    return j.dump(1);
}

BpeModel BpeModel::from_json(std::string_view text) {
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.at("format") != "cier-bpe") throw ParseError("not a BPE model file");
        BpeModel m;
        m.tokens_ = j.at("tokens").get<std::vector<std::string>>();
        m.merges_.clear();
        for (const auto& pr : j.at("merges")) m.merges_.emplace_back(pr.at(0).get<std::string>(), pr.at(1).get<std::string>());
        if (m.tokens_.size() < 10) throw ParseError("token table too short");
        for (int i = 0; i < 4; ++i) {
            if (m.tokens_[static_cast<std::size_t>(i)] != kSpecials[i]) throw ParseError("special token table mismatch");
        }
        for (int i = 0; i < 5; ++i) {
            if (m.tokens_[static_cast<std::size_t>(4 + i)] != kVerbalizer[i]) throw ParseError("verbalizer token mismatch");
        }
        m.rebuild_index();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("BPE model: ") + e.what());
    }
}

void BpeModel::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write BPE model: " + path.string());
    out << to_json() << '\n';
}

BpeModel BpeModel::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open BPE model: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

BpeModel train_bpe(const std::vector<std::string>& texts, std::size_t vocab_size) {
    if (texts.empty()) throw ValidationError("BPE corpus is empty");

    // Word frequencies keyed by symbol sequence.
    std::map<std::vector<std::string>, std::size_t> word_counts;
    std::set<std::string> alphabet;
    for (const auto& text : texts) {
        const auto words = split_words(normalize_text(text));
        for (std::size_t w = 0; w < words.size(); ++w) {
            auto symbols = word_symbols(words[w], w > 0);
            for (const auto& s : symbols) alphabet.insert(s);
            ++word_counts[std::move(symbols)];
        }
    }

    BpeModel model;
    for (const auto& s : alphabet) model.add_token(s);
    if (vocab_size <= model.size()) {
        throw ValidationError("vocab_size " + std::to_string(vocab_size) + " must exceed base vocabulary of " +
                              std::to_string(model.size()) + " tokens");
    }

    std::vector<std::pair<std::vector<std::string>, std::size_t>> words(word_counts.begin(), word_counts.end());
    while (model.size() < vocab_size) {
        std::map<std::pair<std::string, std::string>, std::size_t> pair_counts;
        for (const auto& [symbols, count] : words) {
            for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
                if (is_verbalizer(symbols[i]) || is_verbalizer(symbols[i + 1])) continue;
                pair_counts[{symbols[i], symbols[i + 1]}] += count;
            }
        }
        const std::pair<std::string, std::string>* best = nullptr;
        std::size_t best_count = 0;
        for (const auto& [pr, count] : pair_counts) {
            if (count > best_count) {
                best = &pr;
                best_count = count;
            }
        }
        if (best == nullptr || best_count < 2) break;

        const auto merged_pair = *best;
        const std::string merged = merged_pair.first + merged_pair.second;
        model.merges_.push_back(merged_pair);
        model.add_token(merged);

        for (auto& [symbols, count] : words) {
            std::vector<std::string> next;
            next.reserve(symbols.size());
            for (std::size_t i = 0; i < symbols.size(); ++i) {
                if (i + 1 < symbols.size() && symbols[i] == merged_pair.first && symbols[i + 1] == merged_pair.second) {
                    next.push_back(merged);
                    ++i;
                } else {
                    next.push_back(symbols[i]);
                }
            }
            symbols = std::move(next);
        }
    }
    model.rebuild_index();
    return model;
}

std::vector<std::vector<TokenId>> keyword_targets(const InteractionRecord& record, const BpeModel& bpe) {
    std::vector<std::vector<TokenId>> out;
    for (const auto& f : record.features) {
        auto ids = bpe.encode(f);
        if (!ids.empty()) out.push_back(std::move(ids));
    }
    if (out.empty()) out.push_back({BpeModel::kUnk});
    return out;
}

}  // namespace cier::corpus
