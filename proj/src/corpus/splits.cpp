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

#include "cier/corpus/splits.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "cier/common.hpp"

namespace cier::corpus {

std::vector<DatasetSplit> make_splits(std::size_t n_records, std::uint64_t seed, int repeats) {
    if (n_records < 10) {
        throw ValidationError("need at least 10 records to split 8:1:1, got " + std::to_string(n_records));
    }
    if (repeats < 1) throw ValidationError("repeats must be positive");

    const auto n_train = static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(n_records)));
    const std::size_t n_valid = (n_records - n_train) / 2;

    std::vector<DatasetSplit> splits;
    splits.reserve(static_cast<std::size_t>(repeats));
    Rng rng(seed);
    for (int r = 0; r < repeats; ++r) {
        std::vector<std::size_t> order(n_records);
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng.shuffle(order);

        DatasetSplit s;
        s.repeat_id = r;
        s.seed = seed;
        s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
        s.valid.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                       order.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid));
        s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid), order.end());
        std::sort(s.train.begin(), s.train.end());
        std::sort(s.valid.begin(), s.valid.end());
        std::sort(s.test.begin(), s.test.end());
        splits.push_back(std::move(s));
    }
    return splits;
}

void save_split(const std::filesystem::path& path, const DatasetSplit& split) {
    nlohmann::json j = {{"seed", split.seed},
                        {"repeat_id", split.repeat_id},
                        {"train", split.train},
                        {"valid", split.valid},
                        {"test", split.test}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write split manifest: " + path.string());
    out << j.dump(1) << '\n';
}

DatasetSplit load_split(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open split manifest: " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
        DatasetSplit s;
        s.seed = j.at("seed").get<std::uint64_t>();
        s.repeat_id = j.at("repeat_id").get<int>();
        s.train = j.at("train").get<std::vector<std::size_t>>();
        s.valid = j.at("valid").get<std::vector<std::size_t>>();
        s.test = j.at("test").get<std::vector<std::size_t>>();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

}  // namespace cier::corpus
