#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "cpids/errors.hpp"
#include "cpids/physfeat.hpp"
#include "cpids/rng.hpp"

using namespace cpids;

namespace {

// triangular wave in [lo, hi] with the given period, starting at lo
double tri(double t, double period, double lo, double hi) {
    const double phase = t / period - std::floor(t / period);
    const double up = phase < 0.5 ? 2.0 * phase : 2.0 * (1.0 - phase);
    return lo + (hi - lo) * up;
}

std::vector<PhysicalRecord> tank_trace(double seconds, double period, double lo = 1.0,
                                       double hi = 3.0) {
    std::vector<PhysicalRecord> out;
    for (double t = 0.0; t < seconds; t += 1.0) {
        PhysicalRecord r;
        r.ts = t;
        r.pressure[0] = tri(t, period, lo, hi);
        for (int i = 1; i < kNumPressure; ++i) r.pressure[i] = 0.5 * i;
        out.push_back(r);
    }
    return out;
}

} // namespace

TEST_CASE("cycle duration is recovered from a triangular tank-1 wave") {
    // the generator knows the true period: 300 s
    auto records = tank_trace(1200.0, 300.0);
    auto model = fit_cycle(records);
    CHECK(model.d >= 299.0);
    CHECK(model.d <= 301.0);
    CHECK(model.boundary_times.size() >= 2);
    for (std::size_t i = 1; i < model.boundary_times.size(); ++i)
        CHECK(model.boundary_times[i] > model.boundary_times[i - 1]);
    CHECK(model.threshold_high > model.threshold_low);
}

TEST_CASE("constant pressure cannot define a cycle") {
    std::vector<PhysicalRecord> flat;
    for (double t = 0.0; t < 600.0; t += 1.0) {
        PhysicalRecord r;
        r.ts = t;
        r.pressure[0] = 2.0;
        flat.push_back(r);
    }
    try {
        fit_cycle(flat);
        FAIL("expected insufficient_cycles");
    } catch (const Error& e) {
        CHECK(e.code() == errc::insufficient_cycles);
    }

    // a single cycle is not enough either
    auto one = tank_trace(280.0, 300.0);
    CHECK_THROWS_AS(fit_cycle(one), Error);
}

TEST_CASE("median inter-boundary interval: periods 298 and 302 give d = 300") {
    // two full cycles with slightly different durations; the median of the
    // observed intervals {298, 302} is their midpoint 300
    std::vector<PhysicalRecord> records;
    double t = 0.0;
    for (double period : {298.0, 302.0, 298.0, 302.0}) {
        for (double u = 0.0; u < period; u += 1.0) {
            PhysicalRecord r;
            r.ts = t;
            r.pressure[0] = tri(u, period, 1.0, 3.0);
            records.push_back(r);
            t += 1.0;
        }
    }
    auto model = fit_cycle(records);
    CHECK(model.d >= 299.0);
    CHECK(model.d <= 301.0);
}

TEST_CASE("progress encodes the canonical angles") {
    CycleModel model;
    model.d = 300.0;
    model.boundary_times = {1000.0};

    auto at_start = progress(1000.0, model);
    CHECK(at_start.p == 0.0);
    CHECK(std::abs(at_start.p_sin - 0.0) < 1e-9);
    CHECK(std::abs(at_start.p_cos - 1.0) < 1e-9);

    auto quarter = progress(1075.0, model); // p = d/4
    CHECK(quarter.p == 75.0);
    CHECK(std::abs(quarter.p_sin - 1.0) < 1e-9);
    CHECK(std::abs(quarter.p_cos - 0.0) < 1e-9);
}

TEST_CASE("cycle wrap has no discontinuity at the boundary") {
    CycleModel model;
    model.d = 300.0;
    model.boundary_times = {0.0, 300.0};

    // late in one cycle vs early in the next: angular distance 0.10 * 2pi
    auto late = progress(285.0, model);  // p = 0.95 d
    auto early = progress(315.0, model); // p = 0.05 d
    const double a1 = std::atan2(late.p_sin, late.p_cos);
    const double a2 = std::atan2(early.p_sin, early.p_cos);
    double diff = std::abs(a2 - a1);
    if (diff > std::numbers::pi) diff = 2.0 * std::numbers::pi - diff;
    CHECK(std::abs(diff - 0.10 * 2.0 * std::numbers::pi) < 1e-9);

    // the plain progress value itself jumps (0.95 d -> 0.05 d); the encoding
    // is what removes the discontinuity
    CHECK(late.p == 285.0);
    CHECK(early.p == 15.0);
}

TEST_CASE("progress clamps at d when the process stalls, or wraps when configured") {
    CycleModel model;
    model.d = 100.0;
    model.boundary_times = {0.0};
    model.wrap = false;
    auto stalled = progress(250.0, model);
    CHECK(stalled.p == 100.0);
    // clamped angle equals the boundary angle
    CHECK(std::abs(stalled.p_sin - 0.0) < 1e-9);
    CHECK(std::abs(stalled.p_cos - 1.0) < 1e-9);

    model.wrap = true;
    auto wrapped = progress(250.0, model);
    CHECK(wrapped.p == 50.0);
    CHECK(std::abs(wrapped.p_sin - 0.0) < 1e-9);
    CHECK(std::abs(wrapped.p_cos + 1.0) < 1e-9);
}

TEST_CASE("sin^2 + cos^2 = 1 for ten thousand random progress values") {
    CycleModel model;
    model.d = 300.0;
    model.boundary_times = {0.0};
    Rng rng(31);
    for (int i = 0; i < 10000; ++i) {
        const double t = rng.next_real() * 900.0;
        auto pr = progress(t, model);
        CHECK(std::abs(pr.p_sin * pr.p_sin + pr.p_cos * pr.p_cos - 1.0) < 1e-9);
        CHECK(pr.p >= 0.0);
        CHECK(pr.p <= model.d);
    }
}

TEST_CASE("phase is recoverable from the encoded pair within one cycle") {
    CycleModel model;
    model.d = 300.0;
    model.boundary_times = {0.0};
    Rng rng(32);
    for (int i = 0; i < 2000; ++i) {
        const double p_true = rng.next_real() * 299.0;
        auto pr = progress(p_true, model);
        double angle = std::atan2(pr.p_sin, pr.p_cos);
        if (angle < 0.0) angle += 2.0 * std::numbers::pi;
        const double p_back = angle / (2.0 * std::numbers::pi) * model.d;
        CHECK(std::abs(p_back - p_true) < 1e-6 * model.d);
    }
}

TEST_CASE("extract_phys passes raw values through and appends the progress triple") {
    auto records = tank_trace(700.0, 300.0);
    records[5].pump_state[0] = 1;
    records[5].flow[2] = 2.25;
    records[5].valve_state[3] = 1;
    auto model = fit_cycle(records);
    auto feats = extract_phys(records, model);
    REQUIRE(feats.size() == records.size());

    const auto names = phys_column_names();
    REQUIRE(names.size() == static_cast<std::size_t>(kNumPhysRaw) + 3);
    REQUIRE(feats[5].values.size() == names.size());

    CHECK(feats[5].values[0] == records[5].pressure[0]);                 // pressure_1
    CHECK(feats[5].values[kNumPressure] == 1.0);                         // pump_1
    CHECK(feats[5].values[kNumPressure + kNumPumps + 2] == 2.25);        // flow_3
    CHECK(feats[5].values[kNumPressure + kNumPumps + kNumFlows + 3] == 1.0); // valve_4

    for (const auto& f : feats) {
        const double s = f.values[kNumPhysRaw + 1];
        const double c = f.values[kNumPhysRaw + 2];
        CHECK(std::abs(s * s + c * c - 1.0) < 1e-9);
        CHECK(f.values[kNumPhysRaw] >= 0.0);
        CHECK(f.values[kNumPhysRaw] <= model.d);
    }
}

TEST_CASE("reanchor keeps fitted thresholds but follows the new data's boundaries") {
    auto train = tank_trace(900.0, 300.0);
    auto model = fit_cycle(train);

    // fresh capture shifted by half a period: boundaries move, d stays
    std::vector<PhysicalRecord> shifted;
    for (double t = 0.0; t < 900.0; t += 1.0) {
        PhysicalRecord r;
        r.ts = t;
        r.pressure[0] = tri(t + 150.0, 300.0, 1.0, 3.0);
        shifted.push_back(r);
    }
    auto re = reanchor(model, shifted);
    CHECK(re.d == model.d);
    CHECK(re.threshold_low == model.threshold_low);
    CHECK(re.threshold_high == model.threshold_high);
    CHECK(!re.boundary_times.empty());
    // every re-detected boundary lies inside the new capture's time range
    for (double b : re.boundary_times) {
        CHECK(b >= 0.0);
        CHECK(b < 900.0);
    }

    // a flat capture has no crossings; the fitted boundaries survive as fallback
    std::vector<PhysicalRecord> flat;
    for (double t = 0.0; t < 100.0; t += 1.0) {
        PhysicalRecord r;
        r.ts = t;
        r.pressure[0] = 2.0;
        flat.push_back(r);
    }
    auto fallback = reanchor(model, flat);
    CHECK(fallback.boundary_times == model.boundary_times);
}

TEST_CASE("cycle model serialization round-trips") {
    auto records = tank_trace(1200.0, 300.0);
    auto model = fit_cycle(records);
    auto text = serialize_cycle(model);
    auto back = deserialize_cycle(text);
    CHECK(back.d == model.d);
    CHECK(back.threshold_low == model.threshold_low);
    CHECK(back.threshold_high == model.threshold_high);
    CHECK(back.boundary_times == model.boundary_times);
    CHECK(back.wrap == model.wrap);
    CHECK(serialize_cycle(back) == text);

    // unsupported bundle versions fail closed
    CHECK_THROWS_AS(deserialize_cycle("{\"format\":\"cpids.cycle\",\"version\":99}"), Error);
}
