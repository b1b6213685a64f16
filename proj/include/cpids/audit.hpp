#pragma once

#include <string>
#include <vector>

namespace cpids {

// One recorded fit call: which component consumed which row timestamps.
// Orchestration code records every fit (vocabularies, cycle model, scaler,
// PCA, resampler, classifier) so leakage checks can assert that no held-out
// timestamp ever reached fitted state.
struct FitEvent {
    std::string component;
    std::vector<double> row_ts;
};

class AuditLog {
public:
    void record_fit(std::string component, std::vector<double> row_ts) {
        events_.push_back({std::move(component), std::move(row_ts)});
    }
    const std::vector<FitEvent>& events() const { return events_; }
    void clear() { events_.clear(); }

private:
    std::vector<FitEvent> events_;
};

} // namespace cpids
