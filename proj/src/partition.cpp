#include "cpids/partition.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "cpids/errors.hpp"
#include "cpids/ingest.hpp"
#include "cpids/rng.hpp"

namespace cpids {

namespace {

SplitSpec split_impl(const std::vector<double>& ts, const std::vector<EventLabel>& labels,
                     const std::vector<EventSpan>& spans, const SplitOptions& opts) {
    SplitSpec spec;

    // Event roster per non-Normal class, ordered by start time.
    std::map<EventLabel, std::vector<const EventSpan*>> events;
    for (const auto& s : spans)
        if (s.label != EventLabel::Normal) events[s.label].push_back(&s);
    for (auto& [label, list] : events) {
        std::sort(list.begin(), list.end(), [](const EventSpan* a, const EventSpan* b) {
            if (a->t_start != b->t_start) return a->t_start < b->t_start;
            return a->event_id < b->event_id;
        });
        if (list.size() < opts.test_events_per_class + 1)
            raise(errc::too_few_events, std::string(label_name(label)) + " has only " +
                                            std::to_string(list.size()) + " events; need at least " +
                                            std::to_string(opts.test_events_per_class + 1) +
                                            " so one stays in training");
        auto& ids = spec.test_events[label];
        for (std::size_t i = list.size() - opts.test_events_per_class; i < list.size(); ++i)
            ids.push_back(list[i]->event_id);
        std::sort(ids.begin(), ids.end());
    }

    // Temporal cutoff over Normal rows: the first floor(f*n) stay in training.
    std::vector<double> normal_ts;
    for (std::size_t r = 0; r < ts.size(); ++r)
        if (labels[r] == EventLabel::Normal) normal_ts.push_back(ts[r]);
    std::sort(normal_ts.begin(), normal_ts.end());
    const std::size_t n_train =
        static_cast<std::size_t>(std::floor(opts.normal_train_fraction * static_cast<double>(normal_ts.size())));
    spec.normal_cutoff_ts =
        n_train == 0 ? -std::numeric_limits<double>::infinity() : normal_ts[n_train - 1];

    std::set<int> test_ids;
    for (const auto& [label, ids] : spec.test_events) test_ids.insert(ids.begin(), ids.end());

    for (std::size_t r = 0; r < ts.size(); ++r) {
        bool test;
        if (labels[r] == EventLabel::Normal) {
            test = ts[r] > spec.normal_cutoff_ts; // ties at the cutoff go to train
        } else {
            test = test_ids.count(event_of(ts[r], spans, opts.policy)) > 0;
        }
        (test ? spec.test_rows : spec.train_rows).push_back(r);
    }
    return spec;
}

} // namespace

SplitSpec split(const FeatureTable& table, const std::vector<EventSpan>& spans, const SplitOptions& opts) {
    return split_impl(table.ts, table.labels, spans, opts);
}

SplitSpec split_axis(const std::vector<double>& ts, const std::vector<EventSpan>& spans,
                     const SplitOptions& opts) {
    std::vector<EventLabel> labels;
    labels.reserve(ts.size());
    for (double t : ts) labels.push_back(label_of(t, spans, opts.policy));
    return split_impl(ts, labels, spans, opts);
}

std::vector<std::vector<std::size_t>> stratified_shuffled_folds(const std::vector<EventLabel>& labels,
                                                                const std::vector<std::size_t>& rows,
                                                                std::size_t k, std::uint64_t seed) {
    if (k < 2) raise(errc::invalid_config, "fold count must be at least 2");
    std::map<EventLabel, std::vector<std::size_t>> by_class; // canonical class order
    for (std::size_t r : rows) {
        if (r >= labels.size()) raise(errc::length_mismatch, "fold row index out of range: " + std::to_string(r));
        by_class[labels[r]].push_back(r);
    }
    for (const auto& [label, members] : by_class)
        if (members.size() < k)
            raise(errc::class_too_small, std::string(label_name(label)) + " has " +
                                             std::to_string(members.size()) + " rows; cannot form " +
                                             std::to_string(k) + " stratified folds");
    Rng rng(seed);
    std::vector<std::vector<std::size_t>> folds(k);
    for (auto& [label, members] : by_class) {
        rng.shuffle(members);
        for (std::size_t i = 0; i < members.size(); ++i) folds[i % k].push_back(members[i]);
    }
    for (auto& fold : folds) std::sort(fold.begin(), fold.end());
    return folds;
}

std::string serialize_split(const SplitSpec& spec) {
    nlohmann::json j;
    j["format"] = "cpids.split";
    j["version"] = 1;
    nlohmann::json ev = nlohmann::json::object();
    for (const auto& [label, ids] : spec.test_events) ev[label_name(label)] = ids;
    j["test_events"] = std::move(ev);
    j["normal_cutoff_ts"] = spec.normal_cutoff_ts;
    j["train_rows"] = spec.train_rows;
    j["test_rows"] = spec.test_rows;
    return j.dump(2) + "\n";
}

SplitSpec deserialize_split(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object() || j.value("format", "") != "cpids.split")
        raise(errc::bundle_version_mismatch, "not a cpids.split document");
    if (j.value("version", 0) != 1) raise(errc::bundle_version_mismatch, "unsupported cpids.split version");
    SplitSpec spec;
    for (const auto& [key, ids] : j.at("test_events").items())
        spec.test_events[require_label(key)] = ids.get<std::vector<int>>();
    spec.normal_cutoff_ts = j.at("normal_cutoff_ts").get<double>();
    spec.train_rows = j.at("train_rows").get<std::vector<std::size_t>>();
    spec.test_rows = j.at("test_rows").get<std::vector<std::size_t>>();
    return spec;
}

} // namespace cpids
