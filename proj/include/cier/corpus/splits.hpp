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

#ifndef CIER_CORPUS_SPLITS_HPP_
#define CIER_CORPUS_SPLITS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace cier::corpus {

/// Disjoint train/valid/test index lists for one random 8:1:1 partition.
struct DatasetSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> valid;
    std::vector<std::size_t> test;
    int repeat_id = 0;
    std::uint64_t seed = 0;

    bool operator==(const DatasetSplit&) const = default;
};

/// `repeats` independent shuffles of [0, n_records) cut 8:1:1. The train part
/// has round(0.8 n) entries; the remainder is halved (test takes the odd one).
/// Index lists are sorted. Throws ValidationError when n_records < 10.
std::vector<DatasetSplit> make_splits(std::size_t n_records, std::uint64_t seed, int repeats = 5);

void save_split(const std::filesystem::path& path, const DatasetSplit& split);
DatasetSplit load_split(const std::filesystem::path& path);

}  // namespace cier::corpus

#endif  // CIER_CORPUS_SPLITS_HPP_
