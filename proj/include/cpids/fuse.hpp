#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "cpids/netfeat.hpp"
#include "cpids/physfeat.hpp"
#include "cpids/types.hpp"

namespace cpids {

enum class ColumnGroup { Network, Physical };

enum class FeatureView { Network, Physical, Fused };

FeatureView parse_view(const std::string& name); // throws UnknownView
const char* view_name(FeatureView v);

// Per-second fused feature matrix with timestamps, labels and named columns.
struct FeatureTable {
    std::vector<double> ts;
    std::vector<EventLabel> labels;
    Eigen::MatrixXd values; // rows x columns
    std::vector<std::string> column_names;
    std::vector<ColumnGroup> groups;

    std::size_t rows() const { return ts.size(); }
    std::size_t cols() const { return column_names.size(); }
};

struct PruneLog {
    std::vector<std::string> removed;
    // columns constant on training rows that vary on the held-out rows; they
    // are still removed (constancy is judged on training data only)
    std::vector<std::string> test_varying_warnings;
};

// Row-wise concatenation keyed on window_ts; label attached per second.
FeatureTable fuse(const std::vector<NetWindowFeatures>& net, const NetFeatureLayout& net_layout,
                  const std::vector<PhysWindowFeatures>& phys, const std::vector<EventSpan>& spans,
                  const LabelPolicy& policy = {});

// Removes columns constant across the given training rows.
std::pair<FeatureTable, PruneLog> prune_constant(const FeatureTable& table,
                                                 const std::vector<std::size_t>& train_rows);

FeatureTable select_view(const FeatureTable& table, FeatureView view);

// Reorders/restricts the table to exactly the named columns, in the given
// order. Throws MissingColumn when a requested name is absent.
FeatureTable project_columns(const FeatureTable& table, const std::vector<std::string>& names);

std::string serialize_table_csv(const FeatureTable& table);
std::string serialize_table_meta(const FeatureTable& table, const PruneLog& log);
FeatureTable deserialize_table(const std::string& csv_text, const std::string& meta_text);

} // namespace cpids
