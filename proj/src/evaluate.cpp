#include "cpids/evaluate.hpp"

#include <algorithm>
#include <sstream>

#include "cpids/csv.hpp"
#include "cpids/errors.hpp"
#include "cpids/ingest.hpp"

namespace cpids {

std::int64_t ConfusionMatrix::total() const {
    std::int64_t t = 0;
    for (const auto& row : counts)
        for (std::int64_t v : row) t += v;
    return t;
}

std::int64_t ConfusionMatrix::tp(std::size_t c) const { return counts[c][c]; }

std::int64_t ConfusionMatrix::fp(std::size_t c) const {
    std::int64_t t = 0;
    for (std::size_t r = 0; r < kNumClasses; ++r)
        if (r != c) t += counts[r][c];
    return t;
}

std::int64_t ConfusionMatrix::fn(std::size_t c) const {
    std::int64_t t = 0;
    for (std::size_t p = 0; p < kNumClasses; ++p)
        if (p != c) t += counts[c][p];
    return t;
}

ConfusionMatrix confusion(const std::vector<EventLabel>& truth, const std::vector<EventLabel>& pred) {
    if (truth.size() != pred.size())
        raise(errc::length_mismatch, "confusion: " + std::to_string(truth.size()) + " true labels vs " +
                                         std::to_string(pred.size()) + " predictions");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < truth.size(); ++i)
        ++cm.counts[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(pred[i])];
    return cm;
}

F1Result f1_scores(const ConfusionMatrix& cm) {
    F1Result out;
    double sum = 0.0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        const double tp = static_cast<double>(cm.tp(c));
        const double fp = static_cast<double>(cm.fp(c));
        const double fn = static_cast<double>(cm.fn(c));
        const double denom = tp + 0.5 * (fp + fn);
        if (denom == 0.0) {
            out.per_class[c] = 0.0;
            out.zero_support_warnings.push_back(static_cast<EventLabel>(c));
        } else {
            out.per_class[c] = tp / denom;
        }
        sum += out.per_class[c];
    }
    out.macro = sum / static_cast<double>(kNumClasses);
    return out;
}

DelayReport detection_delay(const std::vector<EventSpan>& spans, const std::vector<double>& ts,
                            const std::vector<EventLabel>& pred) {
    if (ts.size() != pred.size())
        raise(errc::length_mismatch, "detection_delay: " + std::to_string(ts.size()) + " timestamps vs " +
                                         std::to_string(pred.size()) + " predictions");
    DelayReport report;
    std::map<EventLabel, std::vector<double>> detected_delays;
    std::map<EventLabel, std::vector<double>> all_delays;

    for (const auto& span : spans) {
        if (span.label == EventLabel::Normal) continue;
        EventDelay d;
        d.event_id = span.event_id;
        d.label = span.label;
        d.t_start = span.t_start;
        d.t_end = span.t_end;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            if (ts[i] < span.t_start || ts[i] > span.t_end) continue;
            if (pred[i] != span.label) continue;
            d.detected = true;
            d.t_det = ts[i];
            d.delay = ts[i] - span.t_start;
            break;
        }
        if (d.detected) {
            detected_delays[d.label].push_back(d.delay);
            all_delays[d.label].push_back(d.delay);
        } else {
            d.delay = span.t_end - span.t_start;
            all_delays[d.label].push_back(d.delay);
            report.undetected.push_back(d);
        }
        report.events.push_back(d);
    }

    auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    for (const auto& [label, delays] : detected_delays) report.tau[label] = mean(delays);
    for (const auto& [label, delays] : all_delays) report.tau_pessimistic[label] = mean(delays);
    if (!report.tau.empty()) {
        double s = 0.0;
        for (const auto& [label, t] : report.tau) s += t;
        report.mean_tau = s / static_cast<double>(report.tau.size());
    }
    if (!report.tau_pessimistic.empty()) {
        double s = 0.0;
        for (const auto& [label, t] : report.tau_pessimistic) s += t;
        report.mean_tau_pessimistic = s / static_cast<double>(report.tau_pessimistic.size());
    }
    return report;
}

ComparisonReport compare_views(const std::vector<ViewModelScore>& scores) {
    ComparisonReport report;
    std::vector<std::string> order;
    for (const auto& s : scores)
        if (std::find(order.begin(), order.end(), s.model) == order.end()) order.push_back(s.model);
    double delta_sum = 0.0;
    std::size_t delta_count = 0;
    for (const auto& model : order) {
        ComparisonRow row;
        row.model = model;
        for (const auto& s : scores) {
            if (s.model != model) continue;
            if (s.view == FeatureView::Network) row.network_macro = s.f1.macro;
            if (s.view == FeatureView::Fused) row.fused_macro = s.f1.macro;
        }
        if (row.network_macro && row.fused_macro) {
            row.delta = *row.fused_macro - *row.network_macro;
            delta_sum += *row.delta;
            ++delta_count;
        }
        report.rows.push_back(std::move(row));
    }
    if (delta_count > 0) report.mean_delta = delta_sum / static_cast<double>(delta_count);
    return report;
}

std::string serialize_confusion(const ConfusionMatrix& cm) {
    std::ostringstream os;
    os << "true\\pred";
    for (std::size_t c = 0; c < kNumClasses; ++c) os << ',' << label_name(static_cast<EventLabel>(c));
    os << '\n';
    for (std::size_t r = 0; r < kNumClasses; ++r) {
        os << label_name(static_cast<EventLabel>(r));
        for (std::size_t c = 0; c < kNumClasses; ++c) os << ',' << cm.counts[r][c];
        os << '\n';
    }
    return os.str();
}

std::string serialize_comparison(const ComparisonReport& report) {
    std::ostringstream os;
    os << "model,network_macro_f1,fused_macro_f1,delta\n";
    for (const auto& row : report.rows) {
        os << row.model << ',';
        if (row.network_macro) os << csv::format_double(*row.network_macro);
        os << ',';
        if (row.fused_macro) os << csv::format_double(*row.fused_macro);
        os << ',';
        if (row.delta) os << csv::format_double(*row.delta);
        os << '\n';
    }
    if (report.mean_delta) os << "mean,,," << csv::format_double(*report.mean_delta) << '\n';
    return os.str();
}

std::string export_timeline(const std::vector<double>& ts, const std::vector<EventLabel>& truth,
                            const std::vector<EventLabel>& raw, const std::vector<EventLabel>& filtered,
                            double t_begin, double t_end) {
    if (truth.size() != ts.size() || raw.size() != ts.size() || filtered.size() != ts.size())
        raise(errc::length_mismatch, "timeline export inputs must share one time axis");
    std::ostringstream os;
    os << "ts,true,raw,filtered\n";
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (ts[i] < t_begin || ts[i] >= t_end) continue;
        os << csv::format_double(ts[i]) << ',' << label_name(truth[i]) << ',' << label_name(raw[i]) << ','
           << label_name(filtered[i]) << '\n';
    }
    return os.str();
}

} // namespace cpids
