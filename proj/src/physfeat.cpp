#include "cpids/physfeat.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cpids/errors.hpp"

#include <nlohmann/json.hpp>

namespace cpids {

std::vector<std::string> phys_column_names() {
    std::vector<std::string> names;
    names.reserve(kNumPhysRaw + 3);
    for (int i = 0; i < kNumPressure; ++i) names.push_back("phys.pressure_" + std::to_string(i + 1));
    for (int i = 0; i < kNumPumps; ++i) names.push_back("phys.pump_" + std::to_string(i + 1));
    for (int i = 0; i < kNumFlows; ++i) names.push_back("phys.flow_" + std::to_string(i + 1));
    for (int i = 0; i < kNumValves; ++i) names.push_back("phys.valve_" + std::to_string(i + 1));
    names.push_back("phys.cycle_progress");
    names.push_back("phys.cycle_progress_sin");
    names.push_back("phys.cycle_progress_cos");
    return names;
}

static std::vector<double> crossings(const std::vector<PhysicalRecord>& records, double low, double high) {
    std::vector<double> out;
    bool armed = false;
    for (const auto& r : records) {
        const double v = r.pressure[0];
        if (!armed && v <= low) armed = true;
        else if (armed && v >= high) {
            out.push_back(r.ts);
            armed = false;
        }
    }
    return out;
}

CycleModel fit_cycle(const std::vector<PhysicalRecord>& training_records) {
    if (training_records.size() < 3) raise(errc::insufficient_cycles, "too few training records");

    double lo = training_records.front().pressure[0];
    double hi = lo;
    for (const auto& r : training_records) {
        lo = std::min(lo, r.pressure[0]);
        hi = std::max(hi, r.pressure[0]);
    }
    const double range = hi - lo;
    if (range <= 0.0) raise(errc::insufficient_cycles, "tank-1 pressure is constant");

    CycleModel model;
    const double mid = 0.5 * (lo + hi);
    model.threshold_low = mid - 0.05 * range; // 10% hysteresis band
    model.threshold_high = mid + 0.05 * range;
    model.boundary_times = crossings(training_records, model.threshold_low, model.threshold_high);

    if (model.boundary_times.size() < 3)
        raise(errc::insufficient_cycles, "fewer than two complete cycles in training data");

    std::vector<double> intervals;
    intervals.reserve(model.boundary_times.size() - 1);
    for (std::size_t i = 1; i < model.boundary_times.size(); ++i)
        intervals.push_back(model.boundary_times[i] - model.boundary_times[i - 1]);
    std::sort(intervals.begin(), intervals.end());
    const std::size_t n = intervals.size();
    model.d = (n % 2 == 1) ? intervals[n / 2] : 0.5 * (intervals[n / 2 - 1] + intervals[n / 2]);
    return model;
}

std::vector<double> detect_boundaries(const std::vector<PhysicalRecord>& records, const CycleModel& model) {
    return crossings(records, model.threshold_low, model.threshold_high);
}

CycleModel reanchor(const CycleModel& model, const std::vector<PhysicalRecord>& records) {
    CycleModel out = model;
    auto detected = detect_boundaries(records, model);
    if (!detected.empty()) out.boundary_times = std::move(detected);
    return out;
}

CycleProgress progress(double t, const CycleModel& model) {
    const auto& b = model.boundary_times;
    double elapsed;
    if (b.empty()) {
        elapsed = model.d; // no anchor at all: treat the cycle phase as unknown
    } else if (t < b.front()) {
        // before the first observed boundary, extend the cycle backwards
        const double k = std::ceil((b.front() - t) / model.d);
        elapsed = t - (b.front() - k * model.d);
        if (elapsed >= model.d) elapsed -= model.d;
    } else {
        auto it = std::upper_bound(b.begin(), b.end(), t);
        elapsed = t - *(it - 1);
    }

    CycleProgress out;
    if (model.wrap) {
        out.p = std::fmod(elapsed, model.d);
        if (out.p < 0.0) out.p += model.d;
    } else {
        out.p = std::min(elapsed, model.d);
    }
    const double angle = 2.0 * std::numbers::pi * out.p / model.d;
    out.p_sin = std::sin(angle);
    out.p_cos = std::cos(angle);
    return out;
}

std::vector<PhysWindowFeatures> extract_phys(const std::vector<PhysicalRecord>& records,
                                             const CycleModel& model) {
    const CycleModel anchored = reanchor(model, records);
    std::vector<PhysWindowFeatures> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        PhysWindowFeatures f;
        f.window_ts = r.ts;
        f.values.reserve(kNumPhysRaw + 3);
        for (double v : r.pressure) f.values.push_back(v);
        for (int v : r.pump_state) f.values.push_back(static_cast<double>(v));
        for (double v : r.flow) f.values.push_back(v);
        for (int v : r.valve_state) f.values.push_back(static_cast<double>(v));
        const CycleProgress cp = progress(r.ts, anchored);
        f.values.push_back(cp.p);
        f.values.push_back(cp.p_sin);
        f.values.push_back(cp.p_cos);
        out.push_back(std::move(f));
    }
    return out;
}

std::string serialize_cycle(const CycleModel& model) {
    nlohmann::json j;
    j["format"] = "cpids.cycle";
    j["version"] = 1;
    j["d"] = model.d;
    j["threshold_low"] = model.threshold_low;
    j["threshold_high"] = model.threshold_high;
    j["boundary_times"] = model.boundary_times;
    j["wrap"] = model.wrap;
    return j.dump(2) + "\n";
}

CycleModel deserialize_cycle(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    if (j.value("format", "") != "cpids.cycle" || j.value("version", 0) != 1)
        raise(errc::bundle_version_mismatch, "unsupported cycle model format");
    CycleModel m;
    m.d = j.at("d").get<double>();
    m.threshold_low = j.at("threshold_low").get<double>();
    m.threshold_high = j.at("threshold_high").get<double>();
    m.boundary_times = j.at("boundary_times").get<std::vector<double>>();
    m.wrap = j.at("wrap").get<bool>();
    return m;
}

} // namespace cpids
