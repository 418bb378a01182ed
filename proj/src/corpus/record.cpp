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

#include "cier/corpus/record.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include <json.hpp>

#include "cier/common.hpp"

namespace cier::corpus {
namespace {

using nlohmann::json;

std::string lowercase(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string id_field(const json& obj, const char* key, std::size_t line_no) {
    if (!obj.contains(key)) throw ParseError(std::string("missing key '") + key + "'", line_no);
    const json& v = obj.at(key);
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    throw ParseError(std::string("key '") + key + "' must be a string or integer", line_no);
}

}  // namespace

void validate(const InteractionRecord& record) {
    if (record.rating < 1 || record.rating > 5) {
        throw ValidationError("rating " + std::to_string(record.rating) + " outside [1,5]");
    }
    const bool blank = std::all_of(record.explanation.begin(), record.explanation.end(),
                                   [](unsigned char c) { return std::isspace(c); });
    if (blank) throw ValidationError("explanation is empty");
}

InteractionRecord parse_record(std::string_view line, std::size_t line_no) {
    json obj;
    try {
        obj = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    if (!obj.is_object()) throw ParseError("expected a JSON object", line_no);

    InteractionRecord rec;
    rec.user_id = id_field(obj, "user", line_no);
    rec.item_id = id_field(obj, "item", line_no);

    if (!obj.contains("rating") || !obj["rating"].is_number()) {
        throw ParseError("missing numeric 'rating'", line_no);
    }
    const double rating = obj["rating"].get<double>();
    if (rating != static_cast<double>(static_cast<int>(rating))) {
        throw ValidationError("line " + std::to_string(line_no) + ": rating must be an integer");
    }
    rec.rating = static_cast<int>(rating);

    if (!obj.contains("explanation") || !obj["explanation"].is_string()) {
        throw ParseError("missing string 'explanation'", line_no);
    }
    rec.explanation = obj["explanation"].get<std::string>();

    const char* feature_key = obj.contains("feature") ? "feature" : (obj.contains("features") ? "features" : nullptr);
    if (feature_key) {
        const json& f = obj[feature_key];
        if (f.is_string()) {
            if (!f.get<std::string>().empty()) rec.features.push_back(lowercase(f.get<std::string>()));
        } else if (f.is_array()) {
            for (const auto& e : f) {
                if (!e.is_string()) throw ParseError("features must be strings", line_no);
                rec.features.push_back(lowercase(e.get<std::string>()));
            }
        } else if (!f.is_null()) {
            throw ParseError("'feature' must be a string or list", line_no);
        }
    }

    try {
        validate(rec);
    } catch (const ValidationError& e) {
        throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    }
    return rec;
}

std::vector<InteractionRecord> ingest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open record file: " + path.string());
    std::vector<InteractionRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
        records.push_back(parse_record(line, line_no));
    }
    return records;
}

std::string to_json_line(const InteractionRecord& record) {
    json obj = {{"user", record.user_id},
                {"item", record.item_id},
                {"rating", record.rating},
                {"explanation", record.explanation},
                {"feature", record.features}};
    return obj.dump();
}

void write_records(const std::filesystem::path& path, const std::vector<InteractionRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write record file: " + path.string());
    for (const auto& r : records) out << to_json_line(r) << '\n';
}

}  // namespace cier::corpus
