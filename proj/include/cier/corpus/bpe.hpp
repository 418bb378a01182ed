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

#ifndef CIER_CORPUS_BPE_HPP_
#define CIER_CORPUS_BPE_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cier/common.hpp"
#include "cier/corpus/record.hpp"

namespace cier::corpus {

/// Lowercases ASCII letters, collapses whitespace runs to one space and trims.
std::string normalize_text(std::string_view text);

/// Byte-pair-encoding vocabulary.
///
/// Words are the space-separated pieces of the normalized text. Every word
/// after the first starts with the marker symbol U+2581, so decoding is a
/// plain concatenation. Ids 0..3 are PAD/BOS/EOS/UNK and ids 4..8 are the
/// verbalizer tokens "1".."5"; the verbalizer tokens never take part in a
/// merge, so encode("3") is always the single id of "3".
class BpeModel {
public:
    static constexpr TokenId kPad = 0;
    static constexpr TokenId kBos = 1;
    static constexpr TokenId kEos = 2;
    static constexpr TokenId kUnk = 3;
    static constexpr TokenId kFirstVerbalizer = 4;
    static constexpr std::string_view kWordMarker = "\xE2\x96\x81";

    BpeModel();

    std::vector<TokenId> encode(std::string_view text) const;

    /// Specials other than UNK are dropped; UNK renders as "<unk>".
    std::string decode(const std::vector<TokenId>& ids) const;

    std::size_t size() const { return tokens_.size(); }
    const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }
    std::optional<TokenId> find(std::string_view token) const;
    const std::vector<std::string>& tokens() const { return tokens_; }
    const std::vector<std::pair<std::string, std::string>>& merges() const { return merges_; }

    /// Id of verbalizer token for rating 1..5.
    TokenId verbalizer_id(int rating) const;

    /// Content hash over the token table and merge list.
    std::uint64_t vocab_hash() const;

    std::string to_json() const;
    static BpeModel from_json(std::string_view text);
    void save(const std::filesystem::path& path) const;
    static BpeModel load(const std::filesystem::path& path);

    friend BpeModel train_bpe(const std::vector<std::string>& texts, std::size_t vocab_size);

private:
    void add_token(const std::string& tok);
    void rebuild_index();
    std::vector<std::string> encode_word(const std::vector<std::string>& symbols) const;

    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId> index_;
    std::vector<std::pair<std::string, std::string>> merges_;
    std::map<std::pair<std::string, std::string>, std::size_t> merge_rank_;
};

/// Greedy most-frequent-pair merging until `vocab_size` tokens exist or no
/// pair occurs at least twice. Count ties go to the lexicographically
/// smallest pair. Throws ValidationError for an empty corpus or a vocab size
/// that does not exceed the base alphabet.
BpeModel train_bpe(const std::vector<std::string>& texts, std::size_t vocab_size);

/// Splits a UTF-8 string into code-point strings.
std::vector<std::string> utf8_symbols(std::string_view word);

/// One encoded target per feature; a record without features gets [[UNK]].
std::vector<std::vector<TokenId>> keyword_targets(const InteractionRecord& record, const BpeModel& bpe);

}  // namespace cier::corpus

#endif  // CIER_CORPUS_BPE_HPP_
