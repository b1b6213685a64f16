#pragma once

#include <stdexcept>
#include <string>

namespace cpids {

// Failure classes map onto CLI exit codes: config/validation errors exit 2,
// data errors exit 3, runtime errors exit 4.
enum class errc {
    // ingest
    missing_column,
    malformed_row,
    empty_file,
    cadence_violation,
    overlap_same_class,
    unknown_label,
    // netfeat
    no_normal_traffic,
    // physfeat
    insufficient_cycles,
    // fuse
    timestamp_mismatch,
    all_constant,
    unknown_view,
    // partition
    too_few_events,
    class_too_small,
    // transform
    degenerate_column,
    too_few_minority,
    // classify
    single_class,
    dimension_mismatch,
    // pipeline
    empty_grid,
    invalid_config,
    leakage_detected,
    // evaluate
    length_mismatch,
    // cli / io
    io_error,
    bundle_version_mismatch,
};

const char* errc_name(errc c);

// CLI exit code for a failure class: 2 config/validation, 3 data, 4 runtime.
int exit_code_for(errc c);

class Error : public std::runtime_error {
public:
    Error(errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    errc code() const { return code_; }

private:
    errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& what) { throw Error(code, what); }

} // namespace cpids
