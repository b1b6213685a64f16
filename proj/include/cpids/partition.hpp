#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cpids/fuse.hpp"
#include "cpids/types.hpp"

namespace cpids {

// Event-aware train/test split: whole event sequences are reserved for test so
// no event's rows straddle the boundary.
struct SplitSpec {
    std::map<EventLabel, std::vector<int>> test_events; // per non-Normal class
    double normal_cutoff_ts = 0.0;                      // Normal rows with ts <= cutoff train
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
};

struct SplitOptions {
    std::size_t test_events_per_class = 2;
    double normal_train_fraction = 0.8;
    LabelPolicy policy;
};

SplitSpec split(const FeatureTable& table, const std::vector<EventSpan>& spans,
                const SplitOptions& opts = {});

// Same split decided directly from the per-second axis, before features exist.
// Needed so vocabularies and the cycle model can be fitted on training seconds.
SplitSpec split_axis(const std::vector<double>& ts, const std::vector<EventSpan>& spans,
                     const SplitOptions& opts = {});

// Round-robin deal after a seeded per-class shuffle; folds are disjoint,
// cover all rows, and are class-proportional within one row.
std::vector<std::vector<std::size_t>> stratified_shuffled_folds(const std::vector<EventLabel>& labels,
                                                                const std::vector<std::size_t>& rows,
                                                                std::size_t k, std::uint64_t seed);

std::string serialize_split(const SplitSpec& spec);
SplitSpec deserialize_split(const std::string& text);

} // namespace cpids
