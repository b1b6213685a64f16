#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#ifndef CPIDS_BIN
#error "CPIDS_BIN must point at the built executable"
#endif

namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("cpids_cli_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str(const std::string& leaf = "") const {
        return leaf.empty() ? path.string() : (path / leaf).string();
    }
};

int run(const std::string& args) {
    const std::string cmd = std::string(CPIDS_BIN) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -2;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p);
    out << content;
}

const std::string kSynthFlags = "--duration 1200 --cycle-period 120 --events-per-class 3 "
                                "--attack-duration 15 --scan-duration 8 --base-exchanges 6 "
                                "--dos-rate 50 --scan-rate 20 --seed 5";

} // namespace

TEST_CASE("argument errors exit with status one") {
    CHECK(run("") == 1);                       // a subcommand is required
    CHECK(run("frobnicate") == 1);             // unknown subcommand
    CHECK(run("synth") == 1);                  // missing required --out
    CHECK(run("synth --not-a-flag x") == 1);   // unknown flag
    CHECK(run("--help") == 0);
    CHECK(run("experiment --help") == 0);
}

TEST_CASE("configuration errors exit with status two") {
    TempDir dir("cfg");
    // the features directory exists but the view name is nonsense
    CHECK(run("experiment --features " + dir.str() + " --out " + dir.str("out") +
              " --view banana") == 2);
    CHECK(run("experiment --features " + dir.str() + " --out " + dir.str("out") +
              " --family banana") == 2);
    CHECK(run("features --packets p --physical f --labels l --out o --delimiter xy") == 2);
    CHECK(run("features --packets p --physical f --labels l --out o --map nonsense") == 2);
    CHECK(run("fetch-dataset --url https://example.org/file.csv") == 2);
    CHECK(run("fetch-dataset --url ftp://example.org/file.csv") == 2);
}

TEST_CASE("data errors and missing files exit with their documented classes") {
    TempDir dir("data_err");
    // nonexistent input file -> io error (4)
    CHECK(run("features --packets " + dir.str("nope.csv") + " --physical " + dir.str("nope2.csv") +
              " --labels " + dir.str("nope3.csv") + " --out " + dir.str("out")) == 4);

    // unknown label in the spans file -> data error (3)
    write_file(dir.path / "packets.csv",
               "ts,ip_src,ip_dst,mac_src,mac_dst,port_src,port_dst,protocol,tcp_flags,payload_size,"
               "modbus_fn,modbus_resp,n_pkts_src,n_pkts_dst\n"
               "0.5,1.1.1.1,2.2.2.2,aa,bb,10,502,modbus,ack,12,3,1.5,4,4\n");
    write_file(dir.path / "physical.csv", [] {
        std::ostringstream os;
        os << "ts";
        for (int i = 1; i <= 8; ++i) os << ",pressure_" << i;
        for (int i = 1; i <= 6; ++i) os << ",pump_" << i;
        for (int i = 1; i <= 4; ++i) os << ",flow_" << i;
        for (int i = 1; i <= 22; ++i) os << ",valve_" << i;
        os << "\n";
        for (int t = 0; t < 4; ++t) {
            os << t;
            for (int c = 0; c < 40; ++c) os << "," << (t + c % 3);
            os << "\n";
        }
        return os.str();
    }());
    write_file(dir.path / "labels.csv", "t_start,t_end,label\n1,2,alien_invasion\n");
    CHECK(run("features --packets " + dir.str("packets.csv") + " --physical " +
              dir.str("physical.csv") + " --labels " + dir.str("labels.csv") + " --out " +
              dir.str("out")) == 3);

    // a failed run must not leave partial outputs behind
    CHECK(!fs::exists(dir.path / "out"));
}

TEST_CASE("the synth, features, experiment and predict stages chain on disk") {
    TempDir dir("chain");
    REQUIRE(run("synth --out " + dir.str("data") + " " + kSynthFlags) == 0);
    for (const char* leaf : {"packets.csv", "physical.csv", "labels.csv", "run_config.json"})
        CHECK(fs::exists(dir.path / "data" / leaf));

    REQUIRE(run("features --packets " + dir.str("data/packets.csv") + " --physical " +
                dir.str("data/physical.csv") + " --labels " + dir.str("data/labels.csv") +
                " --out " + dir.str("feats")) == 0);
    for (const char* leaf : {"table.csv", "table_meta.json", "vocab.json", "cycle.json", "split.json"})
        CHECK(fs::exists(dir.path / "feats" / leaf));

    REQUIRE(run("experiment --features " + dir.str("feats") + " --out " + dir.str("out") +
                " --family knn") == 0);
    CHECK(fs::exists(dir.path / "out" / "comparison.csv"));
    for (const char* view : {"network", "fused"})
        for (const char* leaf : {"report.json", "pipeline.json", "input_columns.json",
                                 "confusion_raw.csv", "confusion_filtered.csv", "timeline.csv"})
            CHECK(fs::exists(dir.path / "out" / view / "knn" / leaf));

    const std::string comparison = slurp(dir.path / "out" / "comparison.csv");
    CHECK(comparison.rfind("model,network_macro_f1,fused_macro_f1,delta\n", 0) == 0);
    CHECK(comparison.find("knn,") != std::string::npos);

    REQUIRE(run("predict --model " + dir.str("out/fused/knn") + " --features " + dir.str("feats") +
                " --packets " + dir.str("data/packets.csv") + " --physical " +
                dir.str("data/physical.csv") + " --out " + dir.str("pred")) == 0);
    const std::string predictions = slurp(dir.path / "pred" / "predictions.csv");
    CHECK(predictions.rfind("ts,raw,filtered\n", 0) == 0);
    CHECK(std::count(predictions.begin(), predictions.end(), '\n') == 1201);

    // reruns with the same seed are byte-identical
    REQUIRE(run("experiment --features " + dir.str("feats") + " --out " + dir.str("out2") +
                " --family knn") == 0);
    CHECK(slurp(dir.path / "out2" / "comparison.csv") == comparison);
    CHECK(slurp(dir.path / "out2" / "fused" / "knn" / "report.json") ==
          slurp(dir.path / "out" / "fused" / "knn" / "report.json"));

    // a different seed changes at least the recorded configuration
    REQUIRE(run("experiment --features " + dir.str("feats") + " --out " + dir.str("out3") +
                " --family knn --seed 2") == 0);
    const std::string report3 = slurp(dir.path / "out3" / "fused" / "knn" / "report.json");
    CHECK(report3.find("\"seed\"") != std::string::npos);

    // tampering with the stored pipeline bundle fails closed
    std::string bundle = slurp(dir.path / "out" / "fused" / "knn" / "pipeline.json");
    const std::string v1 = "\"version\":1";
    REQUIRE(bundle.find(v1) != std::string::npos);
    bundle.replace(bundle.find(v1), v1.size(), "\"version\":9");
    write_file(dir.path / "out" / "fused" / "knn" / "pipeline.json", bundle);
    CHECK(run("predict --model " + dir.str("out/fused/knn") + " --features " + dir.str("feats") +
              " --packets " + dir.str("data/packets.csv") + " --physical " +
              dir.str("data/physical.csv") + " --out " + dir.str("pred2")) == 4);
}

TEST_CASE("options can come from an ini file") {
    TempDir dir("ini");
    write_file(dir.path / "run.ini", "[synth]\nout=\"" + dir.str("data") + "\"\nduration=1200\n"
                                     "cycle-period=120\nevents-per-class=3\nattack-duration=15\n"
                                     "scan-duration=8\nbase-exchanges=6\ndos-rate=50\n"
                                     "scan-rate=20\nseed=5\n");
    REQUIRE(run("--config " + dir.str("run.ini") + " synth") == 0);
    CHECK(fs::exists(dir.path / "data" / "packets.csv"));

    // command-line flags win over the file
    REQUIRE(run("--config " + dir.str("run.ini") + " synth --out " + dir.str("data2")) == 0);
    CHECK(fs::exists(dir.path / "data2" / "packets.csv"));
}
