#pragma once

#include <map>
#include <string>
#include <vector>

#include "cpids/types.hpp"

namespace cpids {

// Maps logical field names (ts, ip_src, pressure_3, ...) to the actual column
// names of a dataset file. Unmapped fields bind to their logical name, so the
// synthetic generator's files need no mapping at all.
struct SchemaMap {
    std::map<std::string, std::string> columns;

    const std::string& resolve(const std::string& logical) const {
        auto it = columns.find(logical);
        return it == columns.end() ? logical : it->second;
    }
};

struct IngestOptions {
    SchemaMap schema;
    char delimiter = ',';
    double max_cadence_gap = 1.5; // seconds; larger physical-record gaps fail
};

std::vector<PacketRecord> load_packets(const std::string& path, const IngestOptions& opts = {});
std::vector<PhysicalRecord> load_physical(const std::string& path, const IngestOptions& opts = {});
std::vector<EventSpan> load_labels(const std::string& path, const IngestOptions& opts = {});

// Covering-span label; Normal when no span covers t. Spans are half-open
// [t_start, t_end). With the default policy an attack label wins over an
// overlapping PhysicalFault span.
EventLabel label_of(double t, const std::vector<EventSpan>& spans, const LabelPolicy& policy = {});

// Id of the span whose label label_of(t) resolves to, -1 for Normal time.
int event_of(double t, const std::vector<EventSpan>& spans, const LabelPolicy& policy = {});

std::string serialize_packets(const std::vector<PacketRecord>& packets);
std::string serialize_physical(const std::vector<PhysicalRecord>& records);
std::string serialize_labels(const std::vector<EventSpan>& spans);

} // namespace cpids
