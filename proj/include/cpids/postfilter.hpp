#pragma once

#include <cstddef>
#include <deque>
#include <vector>

#include "cpids/types.hpp"

namespace cpids {

// Moving majority filter over the most recent predictions (current included).
// Scanning predictions bypass the filter entirely: they are emitted as-is and
// never stored in the window.
struct FilterState {
    std::deque<EventLabel> window;
    EventLabel last_output = EventLabel::Normal;
    std::size_t window_len = 6;
};

EventLabel filter_step(FilterState& state, EventLabel raw);

std::vector<EventLabel> filter_sequence(const std::vector<EventLabel>& raw, std::size_t window_len = 6);

} // namespace cpids
