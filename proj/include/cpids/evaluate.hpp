#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cpids/fuse.hpp"
#include "cpids/types.hpp"

namespace cpids {

// Rows are true classes, columns predicted classes, in canonical class order.
struct ConfusionMatrix {
    std::array<std::array<std::int64_t, kNumClasses>, kNumClasses> counts{};

    std::int64_t total() const;
    std::int64_t tp(std::size_t c) const;
    std::int64_t fp(std::size_t c) const;
    std::int64_t fn(std::size_t c) const;
};

ConfusionMatrix confusion(const std::vector<EventLabel>& truth, const std::vector<EventLabel>& pred);

struct F1Result {
    std::array<double, kNumClasses> per_class{};
    double macro = 0.0;
    // classes with TP = FP = FN = 0, whose F1 was defined as 0
    std::vector<EventLabel> zero_support_warnings;
};

F1Result f1_scores(const ConfusionMatrix& cm);

struct EventDelay {
    int event_id = -1;
    EventLabel label = EventLabel::Normal;
    double t_start = 0.0;
    double t_end = 0.0;
    bool detected = false;
    double t_det = 0.0; // valid when detected
    double delay = 0.0; // t_det - t_start, or duration when undetected
};

struct DelayReport {
    std::vector<EventDelay> events;
    // mean delay over detected events; absent when a class has no detected event
    std::map<EventLabel, double> tau;
    // undetected events counted with delay = event duration
    std::map<EventLabel, double> tau_pessimistic;
    std::optional<double> mean_tau;             // unweighted mean of defined tau_i
    std::optional<double> mean_tau_pessimistic;
    std::vector<EventDelay> undetected;
};

// First second within [t_start, t_end] predicted as the event's class counts
// as the detection time. Normal spans carry no delay and are skipped.
DelayReport detection_delay(const std::vector<EventSpan>& spans, const std::vector<double>& ts,
                            const std::vector<EventLabel>& pred);

struct ViewModelScore {
    std::string model;
    FeatureView view = FeatureView::Fused;
    F1Result f1;
};

struct ComparisonRow {
    std::string model;
    std::optional<double> network_macro;
    std::optional<double> fused_macro;
    std::optional<double> delta; // fused - network, percentage points / 100
};

struct ComparisonReport {
    std::vector<ComparisonRow> rows;
    std::optional<double> mean_delta;
};

ComparisonReport compare_views(const std::vector<ViewModelScore>& scores);

std::string serialize_confusion(const ConfusionMatrix& cm);
std::string serialize_comparison(const ComparisonReport& report);

// Plot-ready per-second table of (ts, true, raw, filtered) restricted to
// [t_begin, t_end).
std::string export_timeline(const std::vector<double>& ts, const std::vector<EventLabel>& truth,
                            const std::vector<EventLabel>& raw, const std::vector<EventLabel>& filtered,
                            double t_begin, double t_end);

} // namespace cpids
