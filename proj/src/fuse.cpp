#include "cpids/fuse.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <set>
#include <sstream>
#include <unordered_map>

#include "cpids/csv.hpp"
#include "cpids/errors.hpp"
#include "cpids/ingest.hpp"

namespace cpids {

FeatureView parse_view(const std::string& name) {
    if (name == "network") return FeatureView::Network;
    if (name == "physical") return FeatureView::Physical;
    if (name == "fused") return FeatureView::Fused;
    raise(errc::unknown_view, "unknown feature view '" + name + "' (expected network, physical or fused)");
}

const char* view_name(FeatureView v) {
    switch (v) {
    case FeatureView::Network: return "network";
    case FeatureView::Physical: return "physical";
    case FeatureView::Fused: return "fused";
    }
    return "?";
}

FeatureTable fuse(const std::vector<NetWindowFeatures>& net, const NetFeatureLayout& net_layout,
                  const std::vector<PhysWindowFeatures>& phys, const std::vector<EventSpan>& spans,
                  const LabelPolicy& policy) {
    if (net.size() != phys.size())
        raise(errc::timestamp_mismatch, "network and physical windows disagree: " +
                                            std::to_string(net.size()) + " vs " + std::to_string(phys.size()) +
                                            " seconds");
    const auto phys_names = phys_column_names();
    FeatureTable out;
    out.column_names.reserve(net_layout.names.size() + phys_names.size());
    for (const auto& n : net_layout.names) {
        out.column_names.push_back(n);
        out.groups.push_back(ColumnGroup::Network);
    }
    for (const auto& n : phys_names) {
        out.column_names.push_back(n);
        out.groups.push_back(ColumnGroup::Physical);
    }
    const std::size_t n_rows = net.size();
    const std::size_t n_net = net_layout.names.size();
    const std::size_t n_phys = phys_names.size();
    out.values.resize(static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(n_net + n_phys));
    out.ts.reserve(n_rows);
    out.labels.reserve(n_rows);
    for (std::size_t i = 0; i < n_rows; ++i) {
        const double t_net = static_cast<double>(net[i].window_ts);
        const double t_phys = phys[i].window_ts;
        if (t_net != t_phys)
            raise(errc::timestamp_mismatch, "second " + std::to_string(i) + ": network window at " +
                                                csv::format_double(t_net) + " but physical window at " +
                                                csv::format_double(t_phys));
        if (net[i].values.size() != n_net)
            raise(errc::length_mismatch, "network feature vector width mismatch at second " + std::to_string(i));
        if (phys[i].values.size() != n_phys)
            raise(errc::length_mismatch, "physical feature vector width mismatch at second " + std::to_string(i));
        out.ts.push_back(t_net);
        out.labels.push_back(label_of(t_net, spans, policy));
        for (std::size_t c = 0; c < n_net; ++c)
            out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = net[i].values[c];
        for (std::size_t c = 0; c < n_phys; ++c)
            out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(n_net + c)) = phys[i].values[c];
    }
    return out;
}

namespace {

bool column_constant(const FeatureTable& table, const std::vector<std::size_t>& rows, std::size_t col) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t r : rows) {
        const double v = table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col));
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double scale = std::max({1.0, std::fabs(lo), std::fabs(hi)});
    return (hi - lo) <= 1e-12 * scale;
}

FeatureTable keep_columns(const FeatureTable& table, const std::vector<std::size_t>& cols) {
    FeatureTable out;
    out.ts = table.ts;
    out.labels = table.labels;
    out.column_names.reserve(cols.size());
    out.groups.reserve(cols.size());
    out.values.resize(table.values.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
        out.column_names.push_back(table.column_names[cols[j]]);
        out.groups.push_back(table.groups[cols[j]]);
        out.values.col(static_cast<Eigen::Index>(j)) = table.values.col(static_cast<Eigen::Index>(cols[j]));
    }
    return out;
}

} // namespace

std::pair<FeatureTable, PruneLog> prune_constant(const FeatureTable& table,
                                                 const std::vector<std::size_t>& train_rows) {
    if (train_rows.empty()) raise(errc::length_mismatch, "cannot prune columns with an empty training row set");
    for (std::size_t r : train_rows)
        if (r >= table.rows()) raise(errc::length_mismatch, "training row index out of range: " + std::to_string(r));
    std::set<std::size_t> train_set(train_rows.begin(), train_rows.end());
    std::vector<std::size_t> other_rows;
    for (std::size_t r = 0; r < table.rows(); ++r)
        if (!train_set.count(r)) other_rows.push_back(r);

    std::vector<std::size_t> all_rows(table.rows());
    for (std::size_t r = 0; r < table.rows(); ++r) all_rows[r] = r;

    PruneLog log;
    std::vector<std::size_t> kept;
    for (std::size_t c = 0; c < table.cols(); ++c) {
        if (!column_constant(table, train_rows, c)) {
            kept.push_back(c);
            continue;
        }
        log.removed.push_back(table.column_names[c]);
        // a held-out row deviating from the training constant means the
        // column carries information the pruning discards
        if (!other_rows.empty() && !column_constant(table, all_rows, c))
            log.test_varying_warnings.push_back(table.column_names[c]);
    }
    if (kept.empty())
        raise(errc::all_constant, "every feature column is constant on the training rows");
    return {keep_columns(table, kept), log};
}

FeatureTable select_view(const FeatureTable& table, FeatureView view) {
    if (view == FeatureView::Fused) return table;
    const ColumnGroup want = view == FeatureView::Network ? ColumnGroup::Network : ColumnGroup::Physical;
    std::vector<std::size_t> cols;
    for (std::size_t c = 0; c < table.cols(); ++c)
        if (table.groups[c] == want) cols.push_back(c);
    return keep_columns(table, cols);
}

FeatureTable project_columns(const FeatureTable& table, const std::vector<std::string>& names) {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t c = 0; c < table.cols(); ++c) index.emplace(table.column_names[c], c);
    std::vector<std::size_t> cols;
    cols.reserve(names.size());
    for (const auto& name : names) {
        auto it = index.find(name);
        if (it == index.end()) raise(errc::missing_column, "feature column not present in table: " + name);
        cols.push_back(it->second);
    }
    return keep_columns(table, cols);
}

std::string serialize_table_csv(const FeatureTable& table) {
    std::ostringstream os;
    os << "ts,label";
    for (const auto& n : table.column_names) os << ',' << n;
    os << '\n';
    for (std::size_t r = 0; r < table.rows(); ++r) {
        os << csv::format_double(table.ts[r]) << ',' << label_name(table.labels[r]);
        for (std::size_t c = 0; c < table.cols(); ++c)
            os << ',' << csv::format_double(table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
        os << '\n';
    }
    return os.str();
}

std::string serialize_table_meta(const FeatureTable& table, const PruneLog& log) {
    nlohmann::json j;
    j["format"] = "cpids.table";
    j["version"] = 1;
    nlohmann::json cols = nlohmann::json::array();
    for (std::size_t c = 0; c < table.cols(); ++c) {
        cols.push_back({{"name", table.column_names[c]},
                        {"group", table.groups[c] == ColumnGroup::Network ? "network" : "physical"}});
    }
    j["columns"] = std::move(cols);
    j["pruned"] = log.removed;
    j["pruned_test_varying"] = log.test_varying_warnings;
    j["rows"] = table.rows();
    return j.dump(2) + "\n";
}

FeatureTable deserialize_table(const std::string& csv_text, const std::string& meta_text) {
    nlohmann::json j = nlohmann::json::parse(meta_text, nullptr, false);
    if (j.is_discarded() || !j.is_object() || j.value("format", "") != "cpids.table")
        raise(errc::bundle_version_mismatch, "feature table metadata is not a cpids.table document");
    if (j.value("version", 0) != 1)
        raise(errc::bundle_version_mismatch, "unsupported cpids.table version");
    std::istringstream is(csv_text);
    csv::Table t = csv::read_stream(is, ',');
    if (t.header.size() < 2 || t.header[0] != "ts" || t.header[1] != "label")
        raise(errc::missing_column, "feature table must start with ts and label columns");
    auto num = [](const std::string& cell, const std::string& field, std::size_t line) -> double {
        bool bad = false;
        auto v = csv::parse_double(cell, bad);
        if (bad || !v)
            raise(errc::malformed_row,
                  "line " + std::to_string(line) + ": " + field + " is not a number: '" + cell + "'");
        return *v;
    };
    FeatureTable out;
    const std::size_t n_cols = t.header.size() - 2;
    const auto& meta_cols = j.at("columns");
    if (meta_cols.size() != n_cols)
        raise(errc::length_mismatch, "feature table metadata lists " + std::to_string(meta_cols.size()) +
                                         " columns but the table has " + std::to_string(n_cols));
    for (std::size_t c = 0; c < n_cols; ++c) {
        const auto& mc = meta_cols[c];
        const std::string name = mc.at("name").get<std::string>();
        if (name != t.header[c + 2])
            raise(errc::length_mismatch, "feature table column order differs from metadata at '" + name + "'");
        out.column_names.push_back(name);
        out.groups.push_back(mc.at("group").get<std::string>() == "physical" ? ColumnGroup::Physical
                                                                             : ColumnGroup::Network);
    }
    out.values.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(n_cols));
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        if (row.size() != t.header.size())
            raise(errc::malformed_row, "feature table row " + std::to_string(r + 2) + " has wrong width");
        out.ts.push_back(num(row[0], "ts", t.line_numbers[r]));
        out.labels.push_back(require_label(row[1]));
        for (std::size_t c = 0; c < n_cols; ++c)
            out.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                num(row[c + 2], t.header[c + 2], t.line_numbers[r]);
    }
    return out;
}

} // namespace cpids
