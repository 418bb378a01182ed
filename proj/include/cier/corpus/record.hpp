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

#ifndef CIER_CORPUS_RECORD_HPP_
#define CIER_CORPUS_RECORD_HPP_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace cier::corpus {

/// One (user, item, rating, explanation, features) example.
struct InteractionRecord {
    std::string user_id;
    std::string item_id;
    int rating = 0;
    std::string explanation;
    std::vector<std::string> features;  // lowercase

    bool operator==(const InteractionRecord&) const = default;
};

/// Throws ValidationError if the record breaks the rating range or has a
/// blank explanation.
void validate(const InteractionRecord& record);

/// Parses a single JSON-lines object. `line_no` only feeds error messages.
InteractionRecord parse_record(std::string_view line, std::size_t line_no = 0);

/// Reads a JSON-lines record file. Blank lines are skipped; order is kept.
std::vector<InteractionRecord> ingest(const std::filesystem::path& path);

std::string to_json_line(const InteractionRecord& record);

void write_records(const std::filesystem::path& path, const std::vector<InteractionRecord>& records);

}  // namespace cier::corpus

#endif  // CIER_CORPUS_RECORD_HPP_
