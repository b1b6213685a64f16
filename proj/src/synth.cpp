#include "cpids/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "cpids/errors.hpp"
#include "cpids/ingest.hpp"
#include "cpids/rng.hpp"

namespace cpids {
namespace {

constexpr const char* kHmiIp = "10.0.0.10";
constexpr const char* kHmiMac = "aa:bb:cc:00:00:10";
constexpr const char* kDosIp = "10.0.0.66";
constexpr const char* kDosMac = "66:66:66:66:66:66";
constexpr const char* kScanIp = "10.0.0.77";
constexpr const char* kScanMac = "77:77:77:77:77:77";
constexpr const char* kMitmMac = "de:ad:be:ef:00:66";

const char* plc_ip(std::size_t k) {
    static const char* ips[3] = {"10.0.0.21", "10.0.0.22", "10.0.0.23"};
    return ips[k % 3];
}

const char* plc_mac(std::size_t k) {
    static const char* macs[3] = {"aa:bb:cc:00:00:21", "aa:bb:cc:00:00:22", "aa:bb:cc:00:00:23"};
    return macs[k % 3];
}

// Triangular wave in [0, 1], rising over the first half period.
double tri(double t, double period) {
    double phase = t / period - std::floor(t / period);
    return phase < 0.5 ? 2.0 * phase : 2.0 - 2.0 * phase;
}

// Readings reported over the wire are quantized to half units so the polling
// vocabulary stays small and is fully covered by the training window.
double quantize_reading(double v) { return std::round(v * 2.0) / 2.0; }

std::vector<EventSpan> place_events(const SynthConfig& config, Rng& rng) {
    if (config.events_per_class < 3)
        raise(errc::invalid_config, "synthetic timeline needs at least 3 events per class");
    const EventLabel order[4] = {EventLabel::DoS, EventLabel::MiTM, EventLabel::PhysicalFault,
                                 EventLabel::Scanning};
    std::vector<EventSpan> spans;
    double cursor = config.head;
    int event_id = 0;
    for (std::size_t round = 0; round < config.events_per_class; ++round) {
        for (EventLabel label : order) {
            const double jitter = static_cast<double>(rng.next_index(11));
            const double start = cursor + jitter;
            const double dur =
                label == EventLabel::Scanning ? config.scan_duration : config.attack_duration;
            EventSpan s;
            s.label = label;
            s.t_start = start;
            s.t_end = start + dur;
            s.event_id = event_id++;
            spans.push_back(s);
            cursor = s.t_end + config.min_gap;
        }
    }
    if (!spans.empty() && spans.back().t_end + config.min_gap > config.duration)
        raise(errc::invalid_config, "synthetic timeline does not fit inside the configured duration");
    return spans;
}

std::vector<PhysicalRecord> make_physical(const SynthConfig& config,
                                          const std::vector<EventSpan>& spans, Rng& rng) {
    std::vector<PhysicalRecord> out;
    const auto n = static_cast<std::size_t>(config.duration);
    out.reserve(n);
    for (std::size_t sec = 0; sec < n; ++sec) {
        const double t = static_cast<double>(sec);
        const EventLabel label = label_of(t, spans);
        const bool fault = label == EventLabel::PhysicalFault;
        PhysicalRecord r;
        r.ts = t;
        r.pressure[0] = 1.0 + 2.0 * tri(t, config.cycle_period) + 0.005 * rng.next_gauss();
        for (std::size_t k = 1; k < r.pressure.size(); ++k) {
            const double base = 0.5 + 0.3 * static_cast<double>(k);
            const double amp = 0.5 + 0.1 * static_cast<double>(k);
            r.pressure[k] = base + amp * tri(t + 15.0 * static_cast<double>(k), config.cycle_period) +
                            0.005 * rng.next_gauss();
        }
        const bool rising = std::fmod(t, config.cycle_period) < config.cycle_period / 2.0;
        r.pump_state[0] = rising ? 1 : 0;
        r.pump_state[1] = rising ? 0 : 1;
        r.pump_state[2] = rising ? 1 : 0;
        r.pump_state[3] = (static_cast<std::int64_t>(t) / 45) % 2 ? 1 : 0;
        r.pump_state[4] = (static_cast<std::int64_t>(t) / 70) % 2 ? 1 : 0;
        r.pump_state[5] = 1; // standby pump, never exercised
        for (std::size_t k = 0; k < r.flow.size(); ++k) {
            const double base = 0.8 + 0.2 * static_cast<double>(k);
            const double period = 37.0 + 11.0 * static_cast<double>(k);
            r.flow[k] = base + 0.3 * std::sin(2.0 * std::numbers::pi * t / period) +
                        0.01 * rng.next_gauss();
        }
        for (std::size_t k = 0; k < 18; ++k) {
            const std::int64_t period = 30 + 7 * static_cast<std::int64_t>(k);
            r.valve_state[k] = (static_cast<std::int64_t>(t) / period) % 2 ? 1 : 0;
        }
        // spare manifold valves held in their commissioning position
        r.valve_state[18] = 0;
        r.valve_state[19] = 1;
        r.valve_state[20] = 0;
        r.valve_state[21] = 1;
        if (fault) {
            // dead sensor and the loop it meters; neither register is polled
            // over the wire, so the fault only shows in the historian feed
            r.pressure[5] = 0.0;
            r.flow[1] = 0.0;
        }
        out.push_back(r);
    }
    return out;
}

PacketRecord base_packet(double ts) {
    PacketRecord p;
    p.ts = ts;
    return p;
}

std::vector<PacketRecord> make_packets(const SynthConfig& config, const std::vector<EventSpan>& spans,
                                       const std::vector<PhysicalRecord>& physical, Rng& rng) {
    std::vector<PacketRecord> packets;
    const auto n = static_cast<std::size_t>(config.duration);
    const double pair_slots = 2.0 * static_cast<double>(config.base_exchanges) + 1.0;
    std::size_t scan_port_cursor = 0;
    int last_scan_event = -1;

    for (std::size_t sec = 0; sec < n; ++sec) {
        const double t = static_cast<double>(sec);
        const EventLabel label = label_of(t, spans);

        // Supervisory polling runs around the clock.
        for (std::size_t j = 0; j < config.base_exchanges; ++j) {
            const std::size_t k = j % 3;
            const int eph = 49152 + static_cast<int>(j % 4);
            const int fn = j % 2 ? 16 : 3;
            const double t_req = t + (2.0 * static_cast<double>(j) + 0.25) / pair_slots;
            const double t_rsp = t + (2.0 * static_cast<double>(j) + 1.25) / pair_slots;

            PacketRecord req = base_packet(t_req);
            req.ip_src = kHmiIp;
            req.ip_dst = plc_ip(k);
            req.mac_src = kHmiMac;
            req.mac_dst = plc_mac(k);
            req.port_src = eph;
            req.port_dst = 502;
            req.protocol = "modbus";
            req.tcp_flags = "PA";
            req.payload_size = 12;
            req.modbus_fn = fn;
            packets.push_back(req);

            PacketRecord rsp = base_packet(t_rsp);
            rsp.ip_src = plc_ip(k);
            rsp.ip_dst = kHmiIp;
            rsp.mac_src = plc_mac(k);
            rsp.mac_dst = kHmiMac;
            rsp.port_src = 502;
            rsp.port_dst = eph;
            rsp.protocol = "modbus";
            rsp.tcp_flags = "PA";
            rsp.payload_size = 13;
            rsp.modbus_fn = fn;
            rsp.modbus_resp = quantize_reading(physical[sec].pressure[k]);
            if (label == EventLabel::MiTM && k == 0) {
                // interposed station answers for PLC 1 with doctored readings
                rsp.mac_src = kMitmMac;
                rsp.modbus_resp = 9.5;
            }
            packets.push_back(rsp);
        }

        if (label == EventLabel::DoS) {
            for (std::size_t i = 0; i < config.dos_rate; ++i) {
                PacketRecord p = base_packet(t + (static_cast<double>(i) + 0.5) /
                                                     (static_cast<double>(config.dos_rate) + 1.0));
                p.ip_src = kDosIp;
                p.ip_dst = plc_ip(0);
                p.mac_src = kDosMac;
                p.mac_dst = plc_mac(0);
                p.port_src = 40000;
                p.port_dst = 502;
                p.protocol = "tcp";
                p.tcp_flags = "S";
                p.payload_size = 0;
                packets.push_back(p);
            }
        } else if (label == EventLabel::Scanning) {
            const int ev = event_of(t, spans);
            if (ev != last_scan_event) {
                last_scan_event = ev;
                scan_port_cursor = 0;
            }
            for (std::size_t i = 0; i < config.scan_rate; ++i) {
                PacketRecord p = base_packet(t + (static_cast<double>(i) + 0.5) /
                                                     (static_cast<double>(config.scan_rate) + 1.0));
                p.ip_src = kScanIp;
                p.ip_dst = plc_ip(i % 3);
                p.mac_src = kScanMac;
                p.mac_dst = plc_mac(i % 3);
                p.port_src = 55555;
                p.port_dst = static_cast<int>(1 + scan_port_cursor++ % 65000);
                p.protocol = "tcp";
                p.tcp_flags = "S";
                p.payload_size = 0;
                packets.push_back(p);
            }
        }
    }
    (void)rng;

    std::stable_sort(packets.begin(), packets.end(),
                     [](const PacketRecord& a, const PacketRecord& b) { return a.ts < b.ts; });

    // Rolling per-address activity counters over the trailing two seconds.
    auto fill_counts = [&](auto field_of, auto count_of) {
        std::map<std::string, std::vector<std::size_t>> by_addr;
        for (std::size_t i = 0; i < packets.size(); ++i) {
            auto addr = field_of(packets[i]);
            if (addr) by_addr[*addr].push_back(i);
        }
        for (auto& [addr, idxs] : by_addr) {
            std::size_t lo = 0;
            for (std::size_t q = 0; q < idxs.size(); ++q) {
                const double now = packets[idxs[q]].ts;
                while (packets[idxs[lo]].ts < now - 2.0) ++lo;
                count_of(packets[idxs[q]]) = static_cast<std::int64_t>(q - lo + 1);
            }
        }
    };
    fill_counts([](const PacketRecord& p) { return p.ip_src; },
                [](PacketRecord& p) -> std::int64_t& { return p.n_pkts_src; });
    fill_counts([](const PacketRecord& p) { return p.ip_dst; },
                [](PacketRecord& p) -> std::int64_t& { return p.n_pkts_dst; });
    return packets;
}

} // namespace

SynthData generate_synth(const SynthConfig& config) {
    if (config.duration <= config.head)
        raise(errc::invalid_config, "synthetic duration must exceed the lead-in");
    if (config.cycle_period <= 2.0)
        raise(errc::invalid_config, "cycle period too short");
    Rng root(config.seed);
    Rng placement = root.fork(0);
    Rng phys_rng = root.fork(1);
    Rng net_rng = root.fork(2);

    SynthData data;
    data.spans = place_events(config, placement);
    data.physical = make_physical(config, data.spans, phys_rng);
    data.packets = make_packets(config, data.spans, data.physical, net_rng);
    return data;
}

} // namespace cpids
