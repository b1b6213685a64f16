#pragma once

#include <cstdint>
#include <vector>

#include "cpids/types.hpp"

namespace cpids {

// Desk-scale generator: a cyclic tank process with MODBUS-like polling
// traffic and injected DoS, MiTM, scanning and physical-fault events.
struct SynthConfig {
    double duration = 1200.0;     // seconds of simulated operation
    double cycle_period = 300.0;  // tank fill/empty cycle
    std::size_t events_per_class = 4;
    double head = 90.0;           // quiet lead-in before the first event
    double attack_duration = 30.0;
    double scan_duration = 12.0;
    double min_gap = 30.0;        // idle time between events (plus jitter)
    std::size_t base_exchanges = 12; // request/response pairs per second
    std::size_t dos_rate = 250;      // flood packets per second
    std::size_t scan_rate = 40;      // sweep packets per second
    std::uint64_t seed = 7;
};

struct SynthData {
    std::vector<PacketRecord> packets;
    std::vector<PhysicalRecord> physical;
    std::vector<EventSpan> spans;
};

SynthData generate_synth(const SynthConfig& config);

} // namespace cpids
