#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "cpids/csv.hpp"
#include "cpids/errors.hpp"
#include "cpids/ingest.hpp"
#include "cpids/rng.hpp"

using namespace cpids;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("cpids_ingest_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name, const std::string& content) const {
        const auto p = (path / name).string();
        std::ofstream(p) << content;
        return p;
    }
};

const char* kPacketHeader =
    "ts,ip_src,ip_dst,mac_src,mac_dst,port_src,port_dst,protocol,tcp_flags,"
    "payload_size,modbus_fn,modbus_resp,n_pkts_src,n_pkts_dst\n";

std::string physical_header() {
    std::ostringstream out;
    out << "ts";
    for (int i = 1; i <= kNumPressure; ++i) out << ",pressure_" << i;
    for (int i = 1; i <= kNumPumps; ++i) out << ",pump_" << i;
    for (int i = 1; i <= kNumFlows; ++i) out << ",flow_" << i;
    for (int i = 1; i <= kNumValves; ++i) out << ",valve_" << i;
    out << "\n";
    return out.str();
}

std::string physical_row(double ts) {
    std::ostringstream out;
    out << ts;
    for (int i = 0; i < kNumPressure; ++i) out << "," << 1.5 + i;
    for (int i = 0; i < kNumPumps; ++i) out << "," << (i % 2);
    for (int i = 0; i < kNumFlows; ++i) out << "," << 0.25 * i;
    for (int i = 0; i < kNumValves; ++i) out << "," << ((i + 1) % 2);
    out << "\n";
    return out.str();
}

} // namespace

TEST_CASE("packets load with missing cells kept missing and rows sorted by ts") {
    TempDir tmp;
    const auto p = tmp.file("p.csv", std::string(kPacketHeader) +
                                         "2.5,10.0.0.2,10.0.0.1,aa:01,aa:02,502,49152,modbus,PA,12,3,1.5,4,7\n"
                                         "1.25,10.0.0.1,10.0.0.2,aa:02,aa:01,,,,,,,,0,0\n");
    auto packets = load_packets(p);
    REQUIRE(packets.size() == 2);
    CHECK(packets[0].ts == 1.25); // sorted
    CHECK(!packets[0].port_src.has_value());
    CHECK(!packets[0].protocol.has_value());
    CHECK(!packets[0].payload_size.has_value());
    CHECK(!packets[0].modbus_resp.has_value());
    CHECK(packets[1].ip_src.value() == "10.0.0.2");
    CHECK(packets[1].port_dst.value() == 49152);
    CHECK(packets[1].modbus_fn.value() == 3);
    CHECK(packets[1].modbus_resp.value() == 1.5);
    CHECK(packets[1].n_pkts_dst == 7);
}

TEST_CASE("packet serialization round-trips every field") {
    TempDir tmp;
    std::vector<PacketRecord> packets;
    Rng rng(9);
    for (int i = 0; i < 50; ++i) {
        PacketRecord p;
        p.ts = i * 0.125;
        if (rng.next_index(4)) p.ip_src = "10.0.0." + std::to_string(rng.next_index(255));
        if (rng.next_index(4)) p.mac_dst = "aa:bb:0" + std::to_string(rng.next_index(9));
        if (rng.next_index(4)) p.port_src = static_cast<int>(rng.next_index(65536));
        if (rng.next_index(4)) p.protocol = "modbus";
        if (rng.next_index(4)) p.payload_size = static_cast<std::int64_t>(rng.next_index(2000));
        if (rng.next_index(4)) p.modbus_resp = rng.next_real() * 10.0;
        p.n_pkts_src = static_cast<std::int64_t>(rng.next_index(100));
        packets.push_back(p);
    }
    const auto path = tmp.file("rt.csv", serialize_packets(packets));
    auto back = load_packets(path);
    REQUIRE(back.size() == packets.size());
    for (std::size_t i = 0; i < packets.size(); ++i) {
        CHECK(back[i].ts == packets[i].ts);
        CHECK(back[i].ip_src == packets[i].ip_src);
        CHECK(back[i].mac_dst == packets[i].mac_dst);
        CHECK(back[i].port_src == packets[i].port_src);
        CHECK(back[i].protocol == packets[i].protocol);
        CHECK(back[i].payload_size == packets[i].payload_size);
        CHECK(back[i].modbus_resp == packets[i].modbus_resp);
        CHECK(back[i].n_pkts_src == packets[i].n_pkts_src);
    }
}

TEST_CASE("schema mapping binds dataset column names to logical fields") {
    TempDir tmp;
    const auto p = tmp.file("mapped.csv",
                            "Time,SrcIP,ip_dst,mac_src,mac_dst,port_src,port_dst,protocol,tcp_flags,"
                            "payload_size,modbus_fn,modbus_resp,n_pkts_src,n_pkts_dst\n"
                            "1,10.0.0.9,10.0.0.1,aa,bb,1,2,x,y,3,4,5,6,7\n");
    IngestOptions opts;
    opts.schema.columns = {{"ts", "Time"}, {"ip_src", "SrcIP"}};
    auto packets = load_packets(p, opts);
    REQUIRE(packets.size() == 1);
    CHECK(packets[0].ts == 1.0);
    CHECK(packets[0].ip_src.value() == "10.0.0.9");

    // without the mapping the same file lacks the ts column
    CHECK_THROWS_AS(load_packets(p), Error);
    try {
        load_packets(p);
    } catch (const Error& e) {
        CHECK(e.code() == errc::missing_column);
    }
}

TEST_CASE("malformed and empty packet files fail with data errors") {
    TempDir tmp;
    const auto empty = tmp.file("empty.csv", kPacketHeader);
    try {
        load_packets(empty);
        FAIL("expected empty_file");
    } catch (const Error& e) {
        CHECK(e.code() == errc::empty_file);
    }

    const auto garbage = tmp.file("bad.csv", std::string(kPacketHeader) +
                                                 "abc,10.0.0.1,10.0.0.2,aa,bb,1,2,p,f,1,1,1,0,0\n");
    try {
        load_packets(garbage);
        FAIL("expected malformed_row");
    } catch (const Error& e) {
        CHECK(e.code() == errc::malformed_row);
    }

    const auto shortrow = tmp.file("short.csv", std::string(kPacketHeader) + "1,10.0.0.1\n");
    try {
        load_packets(shortrow);
        FAIL("expected malformed_row");
    } catch (const Error& e) {
        CHECK(e.code() == errc::malformed_row);
    }
}

TEST_CASE("physical loader enforces one-second cadence limits") {
    TempDir tmp;
    const auto good = tmp.file("phys.csv", physical_header() + physical_row(0) + physical_row(1) +
                                               physical_row(2));
    auto records = load_physical(good);
    REQUIRE(records.size() == 3);
    CHECK(records[1].pressure[0] == 1.5);
    CHECK(records[1].pump_state[1] == 1);
    CHECK(records[1].flow[2] == 0.5);
    CHECK(records[1].valve_state[0] == 1);

    const auto gap = tmp.file("gap.csv", physical_header() + physical_row(0) + physical_row(5));
    try {
        load_physical(gap);
        FAIL("expected cadence_violation");
    } catch (const Error& e) {
        CHECK(e.code() == errc::cadence_violation);
    }

    // a configured larger tolerance accepts the same gap
    IngestOptions opts;
    opts.max_cadence_gap = 10.0;
    CHECK(load_physical(gap, opts).size() == 2);

    const auto dup = tmp.file("dup.csv", physical_header() + physical_row(1) + physical_row(1));
    try {
        load_physical(dup);
        FAIL("expected cadence_violation");
    } catch (const Error& e) {
        CHECK(e.code() == errc::cadence_violation);
    }
}

TEST_CASE("labels load sorted with chronological event ids") {
    TempDir tmp;
    const auto p = tmp.file("labels.csv",
                            "label,t_start,t_end\n"
                            "mitm,200,230\n"
                            "dos,100,130\n"
                            "scanning,300,312\n");
    auto spans = load_labels(p);
    REQUIRE(spans.size() == 3);
    CHECK(spans[0].label == EventLabel::DoS);
    CHECK(spans[0].event_id == 0);
    CHECK(spans[1].label == EventLabel::MiTM);
    CHECK(spans[1].event_id == 1);
    CHECK(spans[2].label == EventLabel::Scanning);
    CHECK(spans[2].event_id == 2);

    const auto bad = tmp.file("badlabel.csv", "label,t_start,t_end\nwizardry,1,2\n");
    try {
        load_labels(bad);
        FAIL("expected unknown_label");
    } catch (const Error& e) {
        CHECK(e.code() == errc::unknown_label);
    }

    const auto overlap = tmp.file("overlap.csv",
                                  "label,t_start,t_end\n"
                                  "dos,100,130\n"
                                  "dos,120,150\n");
    try {
        load_labels(overlap);
        FAIL("expected overlap_same_class");
    } catch (const Error& e) {
        CHECK(e.code() == errc::overlap_same_class);
    }

    const auto inverted = tmp.file("inv.csv", "label,t_start,t_end\ndos,10,10\n");
    try {
        load_labels(inverted);
        FAIL("expected malformed_row");
    } catch (const Error& e) {
        CHECK(e.code() == errc::malformed_row);
    }
}

TEST_CASE("label parsing accepts dataset spellings and rejects anything else") {
    CHECK(require_label("Normal") == EventLabel::Normal);
    CHECK(require_label("DoS") == EventLabel::DoS);
    CHECK(require_label("man in the middle") == EventLabel::MiTM);
    CHECK(require_label("port-scan") == EventLabel::Scanning);
    CHECK(require_label("pump breakdown") == EventLabel::PhysicalFault);
    CHECK(require_label("water leak") == EventLabel::PhysicalFault);
    CHECK(!parse_label("tuesday").has_value());
    CHECK_THROWS_AS(require_label("tuesday"), Error);
}

TEST_CASE("label_of is total and respects half-open spans") {
    std::vector<EventSpan> spans = {
        {EventLabel::DoS, 100.0, 130.0, 0},
        {EventLabel::PhysicalFault, 200.0, 260.0, 1},
    };
    CHECK(label_of(99.999, spans) == EventLabel::Normal);
    CHECK(label_of(100.0, spans) == EventLabel::DoS);   // start included
    CHECK(label_of(129.999, spans) == EventLabel::DoS);
    CHECK(label_of(130.0, spans) == EventLabel::Normal); // end excluded
    CHECK(label_of(250.0, spans) == EventLabel::PhysicalFault);
    CHECK(event_of(250.0, spans) == 1);
    CHECK(event_of(50.0, spans) == -1);

    // totality: every t yields exactly one label without throwing
    Rng rng(4);
    for (int i = 0; i < 10000; ++i) {
        const double t = rng.next_real() * 400.0 - 50.0;
        const EventLabel l = label_of(t, spans);
        CHECK(static_cast<int>(l) >= 0);
        CHECK(static_cast<int>(l) < kNumClasses);
    }
}

TEST_CASE("overlapping attack and fault spans resolve by policy") {
    std::vector<EventSpan> spans = {
        {EventLabel::PhysicalFault, 100.0, 200.0, 0},
        {EventLabel::MiTM, 150.0, 170.0, 1},
    };
    // default: the attack label dominates the fault while both cover t
    CHECK(label_of(160.0, spans) == EventLabel::MiTM);
    CHECK(event_of(160.0, spans) == 1);
    CHECK(label_of(120.0, spans) == EventLabel::PhysicalFault);
    CHECK(label_of(180.0, spans) == EventLabel::PhysicalFault);

    LabelPolicy neutral;
    neutral.attack_wins = false;
    // without the policy the earlier-starting span wins
    CHECK(label_of(160.0, spans, neutral) == EventLabel::PhysicalFault);
}

TEST_CASE("packet parsing clears the documented throughput floor") {
    TempDir tmp;
    std::ostringstream big;
    big << kPacketHeader;
    const int n = 30000;
    for (int i = 0; i < n; ++i)
        big << i * 0.01 << ",10.0.0.1,10.0.0.2,aa:bb,cc:dd,49152,502,modbus,PA,12,3,1.5,24,24\n";
    const auto p = tmp.file("big.csv", big.str());

    const auto start = std::chrono::steady_clock::now();
    auto packets = load_packets(p);
    const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    REQUIRE(packets.size() == static_cast<std::size_t>(n));
    // the busiest real capture averages ~2633 packets per second of traffic;
    // parsing must keep up with at least that rate
    CHECK(static_cast<double>(n) / elapsed > 2633.0);
}
