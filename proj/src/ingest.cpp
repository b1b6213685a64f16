#include "cpids/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "cpids/csv.hpp"
#include "cpids/errors.hpp"

namespace cpids {

const char* label_name(EventLabel l) {
    switch (l) {
        case EventLabel::Normal: return "normal";
        case EventLabel::DoS: return "dos";
        case EventLabel::MiTM: return "mitm";
        case EventLabel::PhysicalFault: return "physical_fault";
        case EventLabel::Scanning: return "scanning";
    }
    return "?";
}

std::optional<EventLabel> parse_label(const std::string& token) {
    std::string low;
    low.reserve(token.size());
    for (char c : token) {
        unsigned char u = static_cast<unsigned char>(c);
        if (u == ' ' || u == '-') {
            low.push_back('_');
        } else {
            low.push_back(static_cast<char>(std::tolower(u)));
        }
    }
    if (low == "normal") return EventLabel::Normal;
    if (low == "dos" || low == "denial_of_service") return EventLabel::DoS;
    if (low == "mitm" || low == "man_in_the_middle") return EventLabel::MiTM;
    if (low == "scanning" || low == "scan" || low == "port_scan") return EventLabel::Scanning;
    // every physical leak/breakdown variant collapses into one fault class
    if (low == "physical_fault" || low == "fault" || low == "physical" || low == "leak" ||
        low == "water_leak" || low == "breakdown" || low == "pump_breakdown" ||
        low == "sensor_breakdown" || low == "pump_fault" || low == "sensor_fault")
        return EventLabel::PhysicalFault;
    return std::nullopt;
}

EventLabel require_label(const std::string& token) {
    const auto label = parse_label(token);
    if (!label) raise(errc::unknown_label, "unknown event label '" + token + "'");
    return *label;
}

namespace {

struct Columns {
    const csv::Table& table;
    const IngestOptions& opts;
    const char* file_kind;

    std::size_t require(const std::string& logical) const {
        const std::string& actual = opts.schema.resolve(logical);
        auto idx = table.column(actual);
        if (!idx)
            raise(errc::missing_column,
                  std::string(file_kind) + " file lacks column '" + actual + "' (field " + logical + ")");
        return *idx;
    }
};

[[noreturn]] void bad_row(std::size_t line, const std::string& what) {
    raise(errc::malformed_row, "line " + std::to_string(line) + ": " + what);
}

double need_double(const std::vector<std::string>& row, std::size_t col, std::size_t line,
                   const std::string& field) {
    bool bad = false;
    auto v = csv::parse_double(row[col], bad);
    if (bad || !v) bad_row(line, field + " is not a number: '" + row[col] + "'");
    if (!std::isfinite(*v)) bad_row(line, field + " is not finite");
    return *v;
}

std::optional<std::string> opt_text(const std::vector<std::string>& row, std::size_t col) {
    if (csv::is_missing(row[col])) return std::nullopt;
    return row[col];
}

std::optional<int> opt_port(const std::vector<std::string>& row, std::size_t col, std::size_t line,
                            const std::string& field) {
    bool bad = false;
    auto v = csv::parse_int(row[col], bad);
    if (bad) bad_row(line, field + " is not an integer: '" + row[col] + "'");
    if (!v) return std::nullopt;
    if (*v < 0 || *v > 65535) bad_row(line, field + " out of range 0-65535");
    return static_cast<int>(*v);
}

void check_width(const std::vector<std::string>& row, std::size_t want, std::size_t line) {
    if (row.size() != want)
        bad_row(line, "expected " + std::to_string(want) + " cells, got " + std::to_string(row.size()));
}

} // namespace

std::vector<PacketRecord> load_packets(const std::string& path, const IngestOptions& opts) {
    csv::Table t = csv::read_file(path, opts.delimiter);
    if (t.rows.empty()) raise(errc::empty_file, path + " has a header but no rows");
    Columns cols{t, opts, "packet"};

    const std::size_t c_ts = cols.require("ts");
    const std::size_t c_ip_src = cols.require("ip_src");
    const std::size_t c_ip_dst = cols.require("ip_dst");
    const std::size_t c_mac_src = cols.require("mac_src");
    const std::size_t c_mac_dst = cols.require("mac_dst");
    const std::size_t c_port_src = cols.require("port_src");
    const std::size_t c_port_dst = cols.require("port_dst");
    const std::size_t c_proto = cols.require("protocol");
    const std::size_t c_flags = cols.require("tcp_flags");
    const std::size_t c_payload = cols.require("payload_size");
    const std::size_t c_mfn = cols.require("modbus_fn");
    const std::size_t c_mresp = cols.require("modbus_resp");
    const std::size_t c_nps = cols.require("n_pkts_src");
    const std::size_t c_npd = cols.require("n_pkts_dst");

    std::vector<PacketRecord> out;
    out.reserve(t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        const std::size_t line = t.line_numbers[r];
        check_width(row, t.header.size(), line);
        PacketRecord p;
        p.ts = need_double(row, c_ts, line, "ts");
        p.ip_src = opt_text(row, c_ip_src);
        p.ip_dst = opt_text(row, c_ip_dst);
        p.mac_src = opt_text(row, c_mac_src);
        p.mac_dst = opt_text(row, c_mac_dst);
        p.port_src = opt_port(row, c_port_src, line, "port_src");
        p.port_dst = opt_port(row, c_port_dst, line, "port_dst");
        p.protocol = opt_text(row, c_proto);
        p.tcp_flags = opt_text(row, c_flags);
        {
            bool bad = false;
            auto v = csv::parse_int(row[c_payload], bad);
            if (bad) bad_row(line, "payload_size is not an integer: '" + row[c_payload] + "'");
            if (v && *v < 0) bad_row(line, "payload_size is negative");
            p.payload_size = v;
        }
        {
            bool bad = false;
            auto v = csv::parse_int(row[c_mfn], bad);
            if (bad) bad_row(line, "modbus_fn is not an integer: '" + row[c_mfn] + "'");
            p.modbus_fn = v ? std::optional<int>(static_cast<int>(*v)) : std::nullopt;
        }
        {
            bool bad = false;
            auto v = csv::parse_double(row[c_mresp], bad);
            if (bad) bad_row(line, "modbus_resp is not a number: '" + row[c_mresp] + "'");
            p.modbus_resp = v;
        }
        for (auto [col, field, dst] : {std::tuple{c_nps, "n_pkts_src", &p.n_pkts_src},
                                       std::tuple{c_npd, "n_pkts_dst", &p.n_pkts_dst}}) {
            bool bad = false;
            auto v = csv::parse_int(row[col], bad);
            if (bad || !v) bad_row(line, std::string(field) + " is not an integer: '" + row[col] + "'");
            if (*v < 0) bad_row(line, std::string(field) + " is negative");
            *dst = *v;
        }
        out.push_back(std::move(p));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const PacketRecord& a, const PacketRecord& b) { return a.ts < b.ts; });
    return out;
}

std::vector<PhysicalRecord> load_physical(const std::string& path, const IngestOptions& opts) {
    csv::Table t = csv::read_file(path, opts.delimiter);
    if (t.rows.empty()) raise(errc::empty_file, path + " has a header but no rows");
    Columns cols{t, opts, "physical"};

    const std::size_t c_ts = cols.require("ts");
    std::array<std::size_t, kNumPressure> c_pressure{};
    std::array<std::size_t, kNumPumps> c_pump{};
    std::array<std::size_t, kNumFlows> c_flow{};
    std::array<std::size_t, kNumValves> c_valve{};
    for (int i = 0; i < kNumPressure; ++i) c_pressure[i] = cols.require("pressure_" + std::to_string(i + 1));
    for (int i = 0; i < kNumPumps; ++i) c_pump[i] = cols.require("pump_" + std::to_string(i + 1));
    for (int i = 0; i < kNumFlows; ++i) c_flow[i] = cols.require("flow_" + std::to_string(i + 1));
    for (int i = 0; i < kNumValves; ++i) c_valve[i] = cols.require("valve_" + std::to_string(i + 1));

    auto need_binary = [&](const std::vector<std::string>& row, std::size_t col, std::size_t line,
                           const std::string& field) -> int {
        double v = need_double(row, col, line, field);
        if (v != 0.0 && v != 1.0) bad_row(line, field + " must be 0 or 1, got '" + row[col] + "'");
        return static_cast<int>(v);
    };

    std::vector<PhysicalRecord> out;
    out.reserve(t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        const std::size_t line = t.line_numbers[r];
        check_width(row, t.header.size(), line);
        PhysicalRecord rec;
        rec.ts = need_double(row, c_ts, line, "ts");
        for (int i = 0; i < kNumPressure; ++i)
            rec.pressure[i] = need_double(row, c_pressure[i], line, "pressure_" + std::to_string(i + 1));
        for (int i = 0; i < kNumPumps; ++i)
            rec.pump_state[i] = need_binary(row, c_pump[i], line, "pump_" + std::to_string(i + 1));
        for (int i = 0; i < kNumFlows; ++i)
            rec.flow[i] = need_double(row, c_flow[i], line, "flow_" + std::to_string(i + 1));
        for (int i = 0; i < kNumValves; ++i)
            rec.valve_state[i] = need_binary(row, c_valve[i], line, "valve_" + std::to_string(i + 1));
        out.push_back(rec);
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const PhysicalRecord& a, const PhysicalRecord& b) { return a.ts < b.ts; });
    for (std::size_t i = 1; i < out.size(); ++i) {
        const double gap = out[i].ts - out[i - 1].ts;
        if (gap <= 0.0)
            raise(errc::cadence_violation, "timestamps not strictly increasing at ts=" +
                                               csv::format_double(out[i].ts));
        if (gap > opts.max_cadence_gap)
            raise(errc::cadence_violation,
                  "gap of " + csv::format_double(gap) + " s after ts=" + csv::format_double(out[i - 1].ts) +
                      " exceeds limit " + csv::format_double(opts.max_cadence_gap));
    }
    return out;
}

std::vector<EventSpan> load_labels(const std::string& path, const IngestOptions& opts) {
    csv::Table t = csv::read_file(path, opts.delimiter);
    Columns cols{t, opts, "label"};
    const std::size_t c_label = cols.require("label");
    const std::size_t c_start = cols.require("t_start");
    const std::size_t c_end = cols.require("t_end");

    std::vector<EventSpan> spans;
    spans.reserve(t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        const std::size_t line = t.line_numbers[r];
        check_width(row, t.header.size(), line);
        auto lbl = parse_label(row[c_label]);
        if (!lbl) raise(errc::unknown_label, "line " + std::to_string(line) + ": '" + row[c_label] + "'");
        EventSpan s;
        s.label = *lbl;
        s.t_start = need_double(row, c_start, line, "t_start");
        s.t_end = need_double(row, c_end, line, "t_end");
        if (!(s.t_start < s.t_end)) bad_row(line, "t_start must be < t_end");
        spans.push_back(s);
    }
    std::stable_sort(spans.begin(), spans.end(),
                     [](const EventSpan& a, const EventSpan& b) { return a.t_start < b.t_start; });
    for (std::size_t i = 0; i < spans.size(); ++i) spans[i].event_id = static_cast<int>(i);

    // same-class spans must not overlap ([start, end) intervals)
    for (std::size_t i = 0; i < spans.size(); ++i) {
        for (std::size_t j = i + 1; j < spans.size(); ++j) {
            if (spans[j].t_start >= spans[i].t_end) break; // sorted by t_start
            if (spans[j].label == spans[i].label)
                raise(errc::overlap_same_class,
                      std::string(label_name(spans[i].label)) + " spans [" +
                          csv::format_double(spans[i].t_start) + "," + csv::format_double(spans[i].t_end) +
                          ") and [" + csv::format_double(spans[j].t_start) + "," +
                          csv::format_double(spans[j].t_end) + ") overlap");
        }
    }
    return spans;
}

namespace {

bool is_attack(EventLabel l) {
    return l == EventLabel::DoS || l == EventLabel::MiTM || l == EventLabel::Scanning;
}

// Covering spans compete: attack beats fault under the default policy, then
// earlier start, then lower class index. Deterministic and total.
const EventSpan* winning_span(double t, const std::vector<EventSpan>& spans, const LabelPolicy& policy) {
    const EventSpan* best = nullptr;
    for (const auto& s : spans) {
        if (s.label == EventLabel::Normal) continue;
        if (!(t >= s.t_start && t < s.t_end)) continue;
        if (!best) {
            best = &s;
            continue;
        }
        if (policy.attack_wins && is_attack(s.label) != is_attack(best->label)) {
            if (is_attack(s.label)) best = &s;
            continue;
        }
        if (s.t_start != best->t_start) {
            if (s.t_start < best->t_start) best = &s;
            continue;
        }
        if (static_cast<int>(s.label) < static_cast<int>(best->label)) best = &s;
    }
    return best;
}

} // namespace

EventLabel label_of(double t, const std::vector<EventSpan>& spans, const LabelPolicy& policy) {
    const EventSpan* s = winning_span(t, spans, policy);
    return s ? s->label : EventLabel::Normal;
}

int event_of(double t, const std::vector<EventSpan>& spans, const LabelPolicy& policy) {
    const EventSpan* s = winning_span(t, spans, policy);
    return s ? s->event_id : -1;
}

namespace {

std::string cell(const std::optional<std::string>& v) { return v ? *v : ""; }
std::string cell(const std::optional<int>& v) { return v ? csv::format_int(*v) : ""; }
std::string cell(const std::optional<std::int64_t>& v) { return v ? csv::format_int(*v) : ""; }
std::string cell(const std::optional<double>& v) { return v ? csv::format_double(*v) : ""; }

} // namespace

std::string serialize_packets(const std::vector<PacketRecord>& packets) {
    std::ostringstream out;
    out << "ts,ip_src,ip_dst,mac_src,mac_dst,port_src,port_dst,protocol,tcp_flags,"
           "payload_size,modbus_fn,modbus_resp,n_pkts_src,n_pkts_dst\n";
    for (const auto& p : packets) {
        out << csv::format_double(p.ts) << ',' << cell(p.ip_src) << ',' << cell(p.ip_dst) << ','
            << cell(p.mac_src) << ',' << cell(p.mac_dst) << ',' << cell(p.port_src) << ','
            << cell(p.port_dst) << ',' << cell(p.protocol) << ',' << cell(p.tcp_flags) << ','
            << cell(p.payload_size) << ',' << cell(p.modbus_fn) << ',' << cell(p.modbus_resp) << ','
            << csv::format_int(p.n_pkts_src) << ',' << csv::format_int(p.n_pkts_dst) << '\n';
    }
    return out.str();
}

std::string serialize_physical(const std::vector<PhysicalRecord>& records) {
    std::ostringstream out;
    out << "ts";
    for (int i = 0; i < kNumPressure; ++i) out << ",pressure_" << (i + 1);
    for (int i = 0; i < kNumPumps; ++i) out << ",pump_" << (i + 1);
    for (int i = 0; i < kNumFlows; ++i) out << ",flow_" << (i + 1);
    for (int i = 0; i < kNumValves; ++i) out << ",valve_" << (i + 1);
    out << '\n';
    for (const auto& r : records) {
        out << csv::format_double(r.ts);
        for (double v : r.pressure) out << ',' << csv::format_double(v);
        for (int v : r.pump_state) out << ',' << v;
        for (double v : r.flow) out << ',' << csv::format_double(v);
        for (int v : r.valve_state) out << ',' << v;
        out << '\n';
    }
    return out.str();
}

std::string serialize_labels(const std::vector<EventSpan>& spans) {
    std::ostringstream out;
    out << "label,t_start,t_end\n";
    for (const auto& s : spans)
        out << label_name(s.label) << ',' << csv::format_double(s.t_start) << ','
            << csv::format_double(s.t_end) << '\n';
    return out.str();
}

} // namespace cpids
