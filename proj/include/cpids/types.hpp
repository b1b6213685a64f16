#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cpids {

// Closed five-class event set. The order is the canonical class order used by
// confusion matrices, reports and tie-breaking everywhere.
enum class EventLabel : int {
    Normal = 0,
    DoS = 1,
    MiTM = 2,
    PhysicalFault = 3,
    Scanning = 4,
};

inline constexpr int kNumClasses = 5;

const char* label_name(EventLabel l);
std::optional<EventLabel> parse_label(const std::string& token);
EventLabel require_label(const std::string& token); // throws UnknownLabel

// One raw network packet (pre-extracted MODBUS/TCP columns). Missing cells stay
// missing: NaN occurrences are themselves counted downstream, so no sentinel
// values are substituted at ingest.
struct PacketRecord {
    double ts = 0.0;
    std::optional<std::string> ip_src;
    std::optional<std::string> ip_dst;
    std::optional<std::string> mac_src;
    std::optional<std::string> mac_dst;
    std::optional<int> port_src;
    std::optional<int> port_dst;
    std::optional<std::string> protocol;
    std::optional<std::string> tcp_flags;
    std::optional<std::int64_t> payload_size;
    std::optional<int> modbus_fn;
    std::optional<double> modbus_resp;
    std::int64_t n_pkts_src = 0; // packets of the same device, last two seconds
    std::int64_t n_pkts_dst = 0;
};

inline constexpr int kNumPressure = 8;
inline constexpr int kNumPumps = 6;
inline constexpr int kNumFlows = 4;
inline constexpr int kNumValves = 22;
inline constexpr int kNumPhysRaw = kNumPressure + kNumPumps + kNumFlows + kNumValves;

// One per-second snapshot of the physical process.
struct PhysicalRecord {
    double ts = 0.0;
    std::array<double, kNumPressure> pressure{};
    std::array<int, kNumPumps> pump_state{};
    std::array<double, kNumFlows> flow{};
    std::array<int, kNumValves> valve_state{};
};

// Labeled half-open time interval [t_start, t_end); the unit of leakage-safe
// train/test partitioning.
struct EventSpan {
    EventLabel label = EventLabel::Normal;
    double t_start = 0.0;
    double t_end = 0.0;
    int event_id = -1;
};

struct LabelPolicy {
    // On overlapping spans of different classes, attack labels win over
    // PhysicalFault (the rarer, costlier signal).
    bool attack_wins = true;
};

} // namespace cpids
