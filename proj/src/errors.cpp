#include "cpids/errors.hpp"

namespace cpids {

const char* errc_name(errc c) {
    switch (c) {
        case errc::missing_column: return "MissingColumn";
        case errc::malformed_row: return "MalformedRow";
        case errc::empty_file: return "EmptyFile";
        case errc::cadence_violation: return "CadenceViolation";
        case errc::overlap_same_class: return "OverlapSameClass";
        case errc::unknown_label: return "UnknownLabel";
        case errc::no_normal_traffic: return "NoNormalTraffic";
        case errc::insufficient_cycles: return "InsufficientCycles";
        case errc::timestamp_mismatch: return "TimestampMismatch";
        case errc::all_constant: return "AllConstant";
        case errc::unknown_view: return "UnknownView";
        case errc::too_few_events: return "TooFewEvents";
        case errc::class_too_small: return "ClassTooSmall";
        case errc::degenerate_column: return "DegenerateColumn";
        case errc::too_few_minority: return "TooFewMinority";
        case errc::single_class: return "SingleClass";
        case errc::dimension_mismatch: return "DimensionMismatch";
        case errc::empty_grid: return "EmptyGrid";
        case errc::invalid_config: return "InvalidConfig";
        case errc::leakage_detected: return "LeakageDetected";
        case errc::length_mismatch: return "LengthMismatch";
        case errc::io_error: return "IoError";
        case errc::bundle_version_mismatch: return "BundleVersionMismatch";
    }
    return "Error";
}

int exit_code_for(errc c) {
    switch (c) {
        case errc::invalid_config:
        case errc::empty_grid:
        case errc::unknown_view:
            return 2;
        case errc::missing_column:
        case errc::malformed_row:
        case errc::empty_file:
        case errc::cadence_violation:
        case errc::overlap_same_class:
        case errc::unknown_label:
        case errc::no_normal_traffic:
        case errc::insufficient_cycles:
        case errc::timestamp_mismatch:
        case errc::all_constant:
        case errc::too_few_events:
        case errc::class_too_small:
        case errc::degenerate_column:
        case errc::too_few_minority:
        case errc::single_class:
        case errc::length_mismatch:
            return 3;
        case errc::dimension_mismatch:
        case errc::leakage_detected:
        case errc::io_error:
        case errc::bundle_version_mismatch:
            return 4;
    }
    return 4;
}

} // namespace cpids
