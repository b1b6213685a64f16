#pragma once

#include <string>
#include <vector>

#include "cpids/types.hpp"

namespace cpids {

// Process-cycle model learned from tank-1 pressure of the training records.
// Boundaries are upward crossings of a hysteresis band around the midpoint of
// the training min/max; d is the median inter-boundary interval.
struct CycleModel {
    double d = 0.0;               // usual cycle duration, seconds
    double threshold_low = 0.0;   // arm below this
    double threshold_high = 0.0;  // boundary when crossing above this, armed
    std::vector<double> boundary_times; // cycle starts seen at fit time
    bool wrap = false; // default clamps progress at d when the process stalls
};

struct CycleProgress {
    double p = 0.0;
    double p_sin = 0.0;
    double p_cos = 1.0;
};

// Per-second physical feature vector: the 40 raw values passed through
// unchanged plus the cycle-progress triple.
struct PhysWindowFeatures {
    double window_ts = 0.0;
    std::vector<double> values; // kNumPhysRaw + 3
};

std::vector<std::string> phys_column_names();

CycleModel fit_cycle(const std::vector<PhysicalRecord>& training_records);

// Boundary detection on arbitrary records using fitted thresholds.
std::vector<double> detect_boundaries(const std::vector<PhysicalRecord>& records, const CycleModel& model);

// Same d and thresholds, boundaries re-detected on the given records so
// progress follows the data being featurized. Falls back to the fitted
// boundaries when the records contain no crossing at all.
CycleModel reanchor(const CycleModel& model, const std::vector<PhysicalRecord>& records);

CycleProgress progress(double t, const CycleModel& model);

std::vector<PhysWindowFeatures> extract_phys(const std::vector<PhysicalRecord>& records,
                                             const CycleModel& model);

std::string serialize_cycle(const CycleModel& model);
CycleModel deserialize_cycle(const std::string& text);

} // namespace cpids
