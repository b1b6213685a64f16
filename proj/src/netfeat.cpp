#include "cpids/netfeat.hpp"

#include <algorithm>
#include <cmath>

#include "cpids/csv.hpp"
#include "cpids/errors.hpp"
#include "cpids/ingest.hpp"

#include <nlohmann/json.hpp>

namespace cpids {

const char* netcol_name(NetCol c) {
    switch (c) {
        case NetCol::ip_src: return "ip_src";
        case NetCol::ip_dst: return "ip_dst";
        case NetCol::mac_src: return "mac_src";
        case NetCol::mac_dst: return "mac_dst";
        case NetCol::port_src: return "port_src";
        case NetCol::port_dst: return "port_dst";
        case NetCol::protocol: return "protocol";
        case NetCol::tcp_flags: return "tcp_flags";
        case NetCol::payload_size: return "payload_size";
        case NetCol::modbus_fn: return "modbus_fn";
        case NetCol::modbus_resp: return "modbus_resp";
        case NetCol::n_pkts_src: return "n_pkts_src";
        case NetCol::n_pkts_dst: return "n_pkts_dst";
    }
    return "?";
}

const std::vector<NetCol>& stat_columns() {
    static const std::vector<NetCol> cols = {
        NetCol::ip_src,   NetCol::ip_dst,    NetCol::mac_src,      NetCol::mac_dst,
        NetCol::port_src, NetCol::port_dst,  NetCol::protocol,     NetCol::tcp_flags,
        NetCol::payload_size, NetCol::modbus_fn, NetCol::modbus_resp};
    return cols;
}

const std::vector<NetCol>& instance_columns() {
    static const std::vector<NetCol> cols = {
        NetCol::ip_src,  NetCol::ip_dst,       NetCol::mac_src,   NetCol::mac_dst, NetCol::protocol,
        NetCol::tcp_flags, NetCol::payload_size, NetCol::modbus_fn, NetCol::modbus_resp};
    return cols;
}

const std::vector<NetCol>& class_columns() {
    static const std::vector<NetCol> cols = {
        NetCol::port_src,     NetCol::port_dst,  NetCol::protocol,    NetCol::tcp_flags,
        NetCol::payload_size, NetCol::modbus_fn, NetCol::modbus_resp, NetCol::n_pkts_src,
        NetCol::n_pkts_dst};
    return cols;
}

std::optional<std::string> instance_of(const PacketRecord& p, NetCol col) {
    switch (col) {
        case NetCol::ip_src: return p.ip_src;
        case NetCol::ip_dst: return p.ip_dst;
        case NetCol::mac_src: return p.mac_src;
        case NetCol::mac_dst: return p.mac_dst;
        case NetCol::port_src:
            return p.port_src ? std::optional<std::string>(csv::format_int(*p.port_src)) : std::nullopt;
        case NetCol::port_dst:
            return p.port_dst ? std::optional<std::string>(csv::format_int(*p.port_dst)) : std::nullopt;
        case NetCol::protocol: return p.protocol;
        case NetCol::tcp_flags: return p.tcp_flags;
        case NetCol::payload_size:
            return p.payload_size ? std::optional<std::string>(csv::format_int(*p.payload_size))
                                  : std::nullopt;
        case NetCol::modbus_fn:
            return p.modbus_fn ? std::optional<std::string>(csv::format_int(*p.modbus_fn)) : std::nullopt;
        case NetCol::modbus_resp:
            return p.modbus_resp ? std::optional<std::string>(csv::format_double(*p.modbus_resp))
                                 : std::nullopt;
        case NetCol::n_pkts_src: return csv::format_int(p.n_pkts_src);
        case NetCol::n_pkts_dst: return csv::format_int(p.n_pkts_dst);
    }
    return std::nullopt;
}

static std::int64_t window_of(double ts) { return static_cast<std::int64_t>(std::floor(ts)); }

// Column names must survive a CSV header.
static std::string sanitize(const std::string& v) {
    std::string out = v;
    for (char& c : out)
        if (c == ',' || c == '\n' || c == '\r') c = '_';
    return out;
}

Vocabularies fit_vocabularies(const std::vector<PacketRecord>& packets,
                              const std::vector<EventSpan>& spans,
                              const std::set<std::int64_t>& train_seconds, const LabelPolicy& policy) {
    Vocabularies vocab;
    bool any_normal = false;

    for (const auto& p : packets) {
        const std::int64_t sec = window_of(p.ts);
        if (!train_seconds.contains(sec)) continue;
        const EventLabel label = label_of(static_cast<double>(sec), spans, policy);

        auto& class_values = vocab.per_class.values[label];
        for (NetCol col : class_columns()) {
            if (auto v = instance_of(p, col)) class_values[col].insert(*v);
        }

        if (label != EventLabel::Normal) continue;
        any_normal = true;
        for (NetCol col : stat_columns()) {
            if (auto v = instance_of(p, col)) vocab.normal.values[col].insert(*v);
        }
        if (p.mac_src && p.ip_src) vocab.normal.mac_ip_src.insert({*p.mac_src, *p.ip_src});
        if (p.mac_dst && p.ip_dst) vocab.normal.mac_ip_dst.insert({*p.mac_dst, *p.ip_dst});
    }

    if (!any_normal)
        raise(errc::no_normal_traffic, "no Normal-labeled packets in the training seconds");

    vocab.layout = build_layout(vocab.normal, vocab.per_class);
    return vocab;
}

NetFeatureLayout build_layout(const NormalVocabulary& normal, const ClassVocabulary& per_class) {
    NetFeatureLayout layout;
    auto add = [&](const std::string& n) { layout.names.push_back(n); };

    add("net.transfer_count");
    add("net.mac_ip_mismatch.src");
    add("net.mac_ip_mismatch.dst");
    for (NetCol c : stat_columns()) add(std::string("net.abnormal_flag.") + netcol_name(c));
    for (NetCol c : stat_columns()) add(std::string("net.abnormal_count.") + netcol_name(c));
    for (NetCol c : stat_columns()) add(std::string("net.normal_count.") + netcol_name(c));
    for (NetCol c : instance_columns()) {
        auto it = normal.values.find(c);
        if (it == normal.values.end()) continue;
        for (const auto& v : it->second) {
            layout.instance_slots.emplace_back(c, v);
            add(std::string("net.instance_count.") + netcol_name(c) + "." + sanitize(v));
        }
    }
    for (NetCol c : stat_columns()) add(std::string("net.distinct_count.") + netcol_name(c));
    for (NetCol c : stat_columns()) add(std::string("net.nan_count.") + netcol_name(c));
    add("net.mean.payload_size");
    add("net.mean.n_pkts_src");
    add("net.mean.n_pkts_dst");
    for (const auto& [label, cols] : per_class.values) layout.class_order.push_back(label);
    for (NetCol c : class_columns())
        for (EventLabel l : layout.class_order)
            add(std::string("net.class_distinct_count.") + netcol_name(c) + "." + label_name(l));
    return layout;
}

NetWindowFeatures extract_window(const std::vector<const PacketRecord*>& window_packets,
                                 std::int64_t window_ts, const Vocabularies& vocab) {
    const auto& layout = vocab.layout;
    NetWindowFeatures out;
    out.window_ts = window_ts;
    out.values.assign(layout.size(), 0.0);

    std::size_t idx = 0;
    out.values[idx++] = static_cast<double>(window_packets.size());

    // MAC/IP mismatch: a present pair not seen during normal training traffic
    double mismatch_src = 0.0, mismatch_dst = 0.0;
    for (const auto* p : window_packets) {
        if (p->mac_src && p->ip_src && !vocab.normal.mac_ip_src.contains({*p->mac_src, *p->ip_src}))
            mismatch_src = 1.0;
        if (p->mac_dst && p->ip_dst && !vocab.normal.mac_ip_dst.contains({*p->mac_dst, *p->ip_dst}))
            mismatch_dst = 1.0;
    }
    out.values[idx++] = mismatch_src;
    out.values[idx++] = mismatch_dst;

    const auto& stats = stat_columns();
    const std::size_t n_stat = stats.size();
    std::vector<double> abnormal(n_stat, 0.0), normal_cnt(n_stat, 0.0), nan_cnt(n_stat, 0.0);
    std::vector<std::set<std::string>> distinct(n_stat);
    for (std::size_t c = 0; c < n_stat; ++c) {
        const NetCol col = stats[c];
        auto vit = vocab.normal.values.find(col);
        const std::set<std::string>* known = vit == vocab.normal.values.end() ? nullptr : &vit->second;
        for (const auto* p : window_packets) {
            auto v = instance_of(*p, col);
            if (!v) {
                nan_cnt[c] += 1.0;
                continue;
            }
            distinct[c].insert(*v);
            if (known && known->contains(*v))
                normal_cnt[c] += 1.0;
            else
                abnormal[c] += 1.0;
        }
    }
    for (std::size_t c = 0; c < n_stat; ++c) out.values[idx++] = abnormal[c] > 0.0 ? 1.0 : 0.0;
    for (std::size_t c = 0; c < n_stat; ++c) out.values[idx++] = abnormal[c];
    for (std::size_t c = 0; c < n_stat; ++c) out.values[idx++] = normal_cnt[c];

    for (const auto& [col, value] : layout.instance_slots) {
        double count = 0.0;
        for (const auto* p : window_packets) {
            auto v = instance_of(*p, col);
            if (v && *v == value) count += 1.0;
        }
        out.values[idx++] = count;
    }

    for (std::size_t c = 0; c < n_stat; ++c) out.values[idx++] = static_cast<double>(distinct[c].size());
    for (std::size_t c = 0; c < n_stat; ++c) out.values[idx++] = nan_cnt[c];

    // means over present cells; 0 when the window is empty or all-missing
    double payload_sum = 0.0, payload_n = 0.0, nps_sum = 0.0, npd_sum = 0.0;
    for (const auto* p : window_packets) {
        if (p->payload_size) {
            payload_sum += static_cast<double>(*p->payload_size);
            payload_n += 1.0;
        }
        nps_sum += static_cast<double>(p->n_pkts_src);
        npd_sum += static_cast<double>(p->n_pkts_dst);
    }
    const double n_pkts = static_cast<double>(window_packets.size());
    out.values[idx++] = payload_n > 0.0 ? payload_sum / payload_n : 0.0;
    out.values[idx++] = n_pkts > 0.0 ? nps_sum / n_pkts : 0.0;
    out.values[idx++] = n_pkts > 0.0 ? npd_sum / n_pkts : 0.0;

    for (NetCol col : class_columns()) {
        for (EventLabel label : layout.class_order) {
            double count = 0.0;
            auto lit = vocab.per_class.values.find(label);
            const std::set<std::string>* klass = nullptr;
            if (lit != vocab.per_class.values.end()) {
                auto cit = lit->second.find(col);
                if (cit != lit->second.end()) klass = &cit->second;
            }
            if (klass) {
                std::set<std::string> seen;
                for (const auto* p : window_packets) {
                    auto v = instance_of(*p, col);
                    if (v && klass->contains(*v)) seen.insert(*v);
                }
                count = static_cast<double>(seen.size());
            }
            out.values[idx++] = count;
        }
    }
    return out;
}

std::vector<NetWindowFeatures> extract_all(const std::vector<PacketRecord>& packets,
                                           const Vocabularies& vocab, std::int64_t t_begin,
                                           std::int64_t t_end) {
    std::map<std::int64_t, std::vector<const PacketRecord*>> by_second;
    for (const auto& p : packets) {
        const std::int64_t sec = window_of(p.ts);
        if (sec >= t_begin && sec < t_end) by_second[sec].push_back(&p);
    }
    static const std::vector<const PacketRecord*> kEmpty;
    std::vector<NetWindowFeatures> out;
    out.reserve(static_cast<std::size_t>(t_end - t_begin));
    for (std::int64_t t = t_begin; t < t_end; ++t) {
        auto it = by_second.find(t);
        out.push_back(extract_window(it == by_second.end() ? kEmpty : it->second, t, vocab));
    }
    return out;
}

std::string serialize_vocabularies(const Vocabularies& vocab) {
    nlohmann::json j;
    j["format"] = "cpids.vocab";
    j["version"] = 1;
    nlohmann::json normal;
    for (const auto& [col, values] : vocab.normal.values)
        normal[netcol_name(col)] = std::vector<std::string>(values.begin(), values.end());
    j["normal"] = normal;
    auto pairs_json = [](const std::set<std::pair<std::string, std::string>>& pairs) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& [mac, ip] : pairs) arr.push_back({mac, ip});
        return arr;
    };
    j["mac_ip_src"] = pairs_json(vocab.normal.mac_ip_src);
    j["mac_ip_dst"] = pairs_json(vocab.normal.mac_ip_dst);
    nlohmann::json per_class;
    for (const auto& [label, cols] : vocab.per_class.values) {
        nlohmann::json colmap;
        for (const auto& [col, values] : cols)
            colmap[netcol_name(col)] = std::vector<std::string>(values.begin(), values.end());
        per_class[label_name(label)] = colmap;
    }
    j["per_class"] = per_class;
    return j.dump(2) + "\n";
}

static NetCol netcol_from_name(const std::string& name) {
    for (int i = 0; i <= static_cast<int>(NetCol::n_pkts_dst); ++i) {
        NetCol c = static_cast<NetCol>(i);
        if (name == netcol_name(c)) return c;
    }
    raise(errc::bundle_version_mismatch, "unknown raw network column '" + name + "'");
}

Vocabularies deserialize_vocabularies(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    if (j.value("format", "") != "cpids.vocab" || j.value("version", 0) != 1)
        raise(errc::bundle_version_mismatch, "unsupported vocabulary format");
    Vocabularies vocab;
    for (const auto& [name, arr] : j.at("normal").items()) {
        auto& dst = vocab.normal.values[netcol_from_name(name)];
        for (const auto& v : arr) dst.insert(v.get<std::string>());
    }
    for (const auto& pair : j.at("mac_ip_src"))
        vocab.normal.mac_ip_src.insert({pair[0].get<std::string>(), pair[1].get<std::string>()});
    for (const auto& pair : j.at("mac_ip_dst"))
        vocab.normal.mac_ip_dst.insert({pair[0].get<std::string>(), pair[1].get<std::string>()});
    for (const auto& [lname, cols] : j.at("per_class").items()) {
        auto label = parse_label(lname);
        if (!label) raise(errc::bundle_version_mismatch, "unknown label '" + lname + "'");
        auto& dst = vocab.per_class.values[*label];
        for (const auto& [cname, arr] : cols.items()) {
            auto& set = dst[netcol_from_name(cname)];
            for (const auto& v : arr) set.insert(v.get<std::string>());
        }
    }
    vocab.layout = build_layout(vocab.normal, vocab.per_class);
    return vocab;
}

} // namespace cpids
