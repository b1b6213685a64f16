#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cpids/types.hpp"

namespace cpids {

// Raw network columns that feed the per-second statistics.
enum class NetCol : int {
    ip_src = 0,
    ip_dst,
    mac_src,
    mac_dst,
    port_src,
    port_dst,
    protocol,
    tcp_flags,
    payload_size,
    modbus_fn,
    modbus_resp,
    n_pkts_src,
    n_pkts_dst,
};

const char* netcol_name(NetCol c);

// Columns eligible for occurrence statistics (everything but the packet
// counters), for per-instance enumeration (also excludes ports), and for the
// class-specific distinct counts (excludes addresses).
const std::vector<NetCol>& stat_columns();     // 11
const std::vector<NetCol>& instance_columns(); // 9
const std::vector<NetCol>& class_columns();    // 9

// Canonical text of a packet's cell, nullopt when missing.
std::optional<std::string> instance_of(const PacketRecord& p, NetCol col);

// Instance sets observed in Normal-labeled training packets, plus the valid
// (MAC, IP) pairings per direction. Immutable after fit.
struct NormalVocabulary {
    std::map<NetCol, std::set<std::string>> values;
    std::set<std::pair<std::string, std::string>> mac_ip_src;
    std::set<std::pair<std::string, std::string>> mac_ip_dst;
};

// Instance sets per event class observed in training packets of that class.
struct ClassVocabulary {
    std::map<EventLabel, std::map<NetCol, std::set<std::string>>> values;
};

// Stable feature-name layout frozen at fit time. Unseen instances at inference
// contribute to abnormal counts only, never new columns.
struct NetFeatureLayout {
    std::vector<std::string> names;
    std::vector<std::pair<NetCol, std::string>> instance_slots; // order of per-instance columns
    std::vector<EventLabel> class_order;                        // classes present in training
    std::size_t size() const { return names.size(); }
};

struct NetWindowFeatures {
    std::int64_t window_ts = 0;
    std::vector<double> values;
};

struct Vocabularies {
    NormalVocabulary normal;
    ClassVocabulary per_class;
    NetFeatureLayout layout;
};

// Learns both vocabularies from packets in training seconds; packets inherit
// the label of their [t, t+1) window.
Vocabularies fit_vocabularies(const std::vector<PacketRecord>& packets,
                              const std::vector<EventSpan>& spans,
                              const std::set<std::int64_t>& train_seconds,
                              const LabelPolicy& policy = {});

NetFeatureLayout build_layout(const NormalVocabulary& normal, const ClassVocabulary& per_class);

// One feature vector for the packets of window [t, t+1). An empty window
// yields zero counts, zero flags and means of 0.
NetWindowFeatures extract_window(const std::vector<const PacketRecord*>& window_packets,
                                 std::int64_t window_ts, const Vocabularies& vocab);

// Exactly one vector per second of [t_begin, t_end), including empty seconds.
std::vector<NetWindowFeatures> extract_all(const std::vector<PacketRecord>& packets,
                                           const Vocabularies& vocab, std::int64_t t_begin,
                                           std::int64_t t_end);

std::string serialize_vocabularies(const Vocabularies& vocab);
Vocabularies deserialize_vocabularies(const std::string& text);

} // namespace cpids
