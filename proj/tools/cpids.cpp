#include "cpids/csv.hpp"
#include "cpids/errors.hpp"
#include "cpids/experiment.hpp"

#include <CLI11.hpp>
// httplib drags in resolver headers whose macros clash with Eigen internals;
// it must come after every header that touches Eigen.
#include <httplib.h>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace {

void apply_schema(const std::vector<std::string>& maps, cpids::RunConfig& config) {
    for (const auto& m : maps) {
        const auto pos = m.find('=');
        if (pos == std::string::npos || pos == 0 || pos + 1 >= m.size())
            cpids::raise(cpids::errc::invalid_config, "--map expects logical=actual, got '" + m + "'");
        config.schema[m.substr(0, pos)] = m.substr(pos + 1);
    }
}

std::vector<cpids::FeatureView> parse_views(const std::vector<std::string>& names) {
    std::vector<cpids::FeatureView> views;
    auto push = [&](cpids::FeatureView v) {
        if (std::find(views.begin(), views.end(), v) == views.end()) views.push_back(v);
    };
    for (const auto& n : names) {
        if (n == "both") {
            push(cpids::FeatureView::Network);
            push(cpids::FeatureView::Fused);
        } else {
            push(cpids::parse_view(n));
        }
    }
    if (views.empty()) cpids::raise(cpids::errc::invalid_config, "no feature view selected");
    return views;
}

std::vector<cpids::ClassifierFamily> parse_families(const std::vector<std::string>& names) {
    std::vector<cpids::ClassifierFamily> families;
    for (const auto& n : names) {
        const cpids::ClassifierFamily f = cpids::parse_family(n);
        if (std::find(families.begin(), families.end(), f) == families.end()) families.push_back(f);
    }
    if (families.empty()) cpids::raise(cpids::errc::invalid_config, "no classifier family selected");
    return families;
}

void fetch_dataset(const std::string& url, std::string out) {
    const std::string scheme = "http://";
    if (url.rfind(scheme, 0) != 0) {
        if (url.rfind("https://", 0) == 0)
            cpids::raise(cpids::errc::invalid_config,
                         "only plain http downloads are supported by this build; download the file "
                         "with another tool and point --packets/--physical/--labels at it");
        cpids::raise(cpids::errc::invalid_config, "dataset URL must start with http://");
    }
    const std::string rest = url.substr(scheme.size());
    const auto slash = rest.find('/');
    const std::string hostport = slash == std::string::npos ? rest : rest.substr(0, slash);
    const std::string path = slash == std::string::npos ? "/" : rest.substr(slash);
    std::string host = hostport;
    int port = 80;
    if (const auto colon = hostport.find(':'); colon != std::string::npos) {
        host = hostport.substr(0, colon);
        try {
            port = std::stoi(hostport.substr(colon + 1));
        } catch (const std::exception&) {
            cpids::raise(cpids::errc::invalid_config, "bad port in URL '" + url + "'");
        }
    }
    if (host.empty()) cpids::raise(cpids::errc::invalid_config, "bad host in URL '" + url + "'");

    if (out.empty()) {
        const char* env = std::getenv("CPIDS_DATA_DIR");
        const std::string base = env && *env ? env : "data";
        std::error_code ec;
        std::filesystem::create_directories(base, ec);
        if (ec) cpids::raise(cpids::errc::io_error, "cannot create " + base + ": " + ec.message());
        std::string name = path.substr(path.find_last_of('/') + 1);
        if (name.empty()) name = "dataset.bin";
        out = (std::filesystem::path(base) / name).string();
    }

    httplib::Client client(host, port);
    client.set_follow_location(true);
    client.set_read_timeout(300, 0);
    auto res = client.Get(path);
    if (!res)
        cpids::raise(cpids::errc::io_error, "download failed: " + httplib::to_string(res.error()));
    if (res->status != 200)
        cpids::raise(cpids::errc::io_error, "download failed: HTTP " + std::to_string(res->status));
    cpids::csv::write_text_atomic(out, res->body);
    std::cout << out << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"cyber-physical intrusion detection toolkit"};
    app.set_config("--config", "", "read options from an INI file (command-line flags win)");
    app.require_subcommand(1);

    cpids::RunConfig config;
    std::vector<std::string> maps;
    std::vector<std::string> view_names{"both"};
    std::vector<std::string> family_names{"rf", "knn", "svm", "ann"};
    std::string delimiter = ",";
    bool no_filter = false;
    std::string url, fetch_out;

    auto* synth = app.add_subcommand("synth", "generate a desk-scale synthetic dataset");
    synth->add_option("--out", config.out_dir, "output directory")->required();
    synth->add_option("--seed", config.synth.seed, "generator seed");
    synth->add_option("--duration", config.synth.duration, "seconds of simulated operation");
    synth->add_option("--cycle-period", config.synth.cycle_period, "tank cycle period [s]");
    synth->add_option("--events-per-class", config.synth.events_per_class,
                      "injected events per attack class (min 3)");
    synth->add_option("--attack-duration", config.synth.attack_duration, "attack event length [s]");
    synth->add_option("--scan-duration", config.synth.scan_duration, "scan event length [s]");
    synth->add_option("--base-exchanges", config.synth.base_exchanges,
                      "polling request/response pairs per second");
    synth->add_option("--dos-rate", config.synth.dos_rate, "flood packets per second");
    synth->add_option("--scan-rate", config.synth.scan_rate, "sweep packets per second");

    auto* features = app.add_subcommand("features", "extract the fused per-second feature table");
    features->add_option("--packets", config.packets_path, "packet CSV")->required();
    features->add_option("--physical", config.physical_path, "physical-readings CSV")->required();
    features->add_option("--labels", config.labels_path, "event-span CSV")->required();
    features->add_option("--out", config.features_dir, "output directory")->required();
    features->add_option("--map", maps, "rename a logical column: logical=actual (repeatable)");
    features->add_option("--delimiter", delimiter, "input field delimiter (one character)");
    features->add_option("--cadence-gap", config.max_cadence_gap,
                         "largest tolerated gap between physical records [s]");
    features->add_option("--test-events", config.test_events_per_class,
                         "events per class reserved for test");
    features->add_option("--train-fraction", config.normal_train_fraction,
                         "fraction of Normal seconds kept for training");

    auto* experiment = app.add_subcommand("experiment", "train and evaluate detection pipelines");
    experiment->add_option("--features", config.features_dir, "features directory")->required();
    experiment->add_option("--out", config.out_dir, "output directory")->required();
    experiment->add_option("--view", view_names, "network, fused or both (repeatable)")
        ->delimiter(',');
    experiment->add_option("--family", family_names, "rf, knn, svm, ann (repeatable)")
        ->delimiter(',');
    experiment->add_option("--grid", config.grid_path, "candidate-grid JSON file");
    experiment->add_option("--folds", config.cv_folds, "cross-validation folds");
    experiment->add_option("--seed", config.seed, "experiment seed");
    experiment->add_flag("--no-filter", no_filter, "skip the majority prediction filter");
    experiment->add_option("--filter-window", config.filter_window, "majority filter window length");

    auto* predict = app.add_subcommand("predict", "label new raw data with a trained pipeline");
    predict->add_option("--model", config.model_dir, "model directory from an experiment run")
        ->required();
    predict->add_option("--features", config.features_dir,
                        "features directory holding the fitted vocabularies and cycle model")
        ->required();
    predict->add_option("--packets", config.packets_path, "packet CSV")->required();
    predict->add_option("--physical", config.physical_path, "physical-readings CSV")->required();
    predict->add_option("--out", config.out_dir, "output directory")->required();
    predict->add_option("--map", maps, "rename a logical column: logical=actual (repeatable)");
    predict->add_option("--delimiter", delimiter, "input field delimiter (one character)");
    predict->add_option("--cadence-gap", config.max_cadence_gap,
                        "largest tolerated gap between physical records [s]");

    auto* fetch = app.add_subcommand("fetch-dataset", "download a dataset file over plain http");
    fetch->add_option("--url", url, "http:// source URL")->required();
    fetch->add_option("--out", fetch_out,
                      "destination file (default: $CPIDS_DATA_DIR or ./data, named after the URL)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (delimiter.size() != 1)
            cpids::raise(cpids::errc::invalid_config, "--delimiter must be a single character");
        config.delimiter = delimiter[0];
        apply_schema(maps, config);
        config.filter = !no_filter;
        config.views = parse_views(view_names);
        config.families = parse_families(family_names);

        if (synth->parsed()) {
            cpids::run_synth(config);
        } else if (features->parsed()) {
            cpids::run_features(config);
        } else if (experiment->parsed()) {
            cpids::run_experiment(config);
        } else if (predict->parsed()) {
            cpids::run_predict(config);
        } else if (fetch->parsed()) {
            fetch_dataset(url, fetch_out);
        }
        return 0;
    } catch (const cpids::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cpids::exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}
