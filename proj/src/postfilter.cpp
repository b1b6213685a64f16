#include "cpids/postfilter.hpp"

#include <array>

namespace cpids {

EventLabel filter_step(FilterState& state, EventLabel raw) {
    if (raw == EventLabel::Scanning) return EventLabel::Scanning;

    state.window.push_back(raw);
    if (state.window.size() > state.window_len) state.window.pop_front();

    std::array<std::size_t, kNumClasses> counts{};
    for (EventLabel l : state.window) ++counts[static_cast<std::size_t>(l)];

    std::size_t best = 0;
    for (std::size_t c = 1; c < kNumClasses; ++c)
        if (counts[c] > counts[best]) best = c;
    bool tie = false;
    for (std::size_t c = 0; c < kNumClasses; ++c)
        if (c != best && counts[c] == counts[best]) tie = true;

    const EventLabel out = tie ? state.last_output : static_cast<EventLabel>(best);
    state.last_output = out;
    return out;
}

std::vector<EventLabel> filter_sequence(const std::vector<EventLabel>& raw, std::size_t window_len) {
    FilterState state;
    state.window_len = window_len;
    std::vector<EventLabel> out;
    out.reserve(raw.size());
    for (EventLabel l : raw) out.push_back(filter_step(state, l));
    return out;
}

} // namespace cpids
