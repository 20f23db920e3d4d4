#include "hpcde/data/event_sequence.hpp"

#include <cmath>
#include <sstream>

namespace hpcde::data {

std::size_t Dataset::total_events() const noexcept {
    std::size_t n = 0;
    for (const auto& s : sequences) {
        n += s.size();
    }
    return n;
}

std::string describe_defect(const EventSequence& seq, std::size_t num_types) {
    if (seq.empty()) {
        return "sequence has no events";
    }
    for (std::size_t j = 0; j < seq.size(); ++j) {
        const auto& e = seq.events[j];
        std::ostringstream os;
        if (!std::isfinite(e.time)) {
            os << "event " << j << " has non-finite time";
            return os.str();
        }
        if (e.type >= num_types) {
            os << "event " << j << " has type " << e.type + 1 << " outside [1, " << num_types
               << "]";
            return os.str();
        }
        if (j > 0 && !(e.time > seq.events[j - 1].time)) {
            os.precision(17);
            os << "event times not strictly increasing at position " << j << " (" << e.time
               << " after " << seq.events[j - 1].time << ")";
            return os.str();
        }
    }
    return {};
}

std::vector<double> inter_arrivals(const EventSequence& seq) {
    std::vector<double> tau;
    if (seq.size() < 2) {
        return tau;
    }
    tau.reserve(seq.size() - 1);
    for (std::size_t j = 1; j < seq.size(); ++j) {
        tau.push_back(seq.events[j].time - seq.events[j - 1].time);
    }
    return tau;
}

}  // namespace hpcde::data
