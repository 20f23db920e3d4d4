#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace hpcde::data {

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A marked event. `type` is zero-based in memory; dataset files use 1..K.
struct Event {
    std::size_t type = 0;
    double time = 0.0;

    bool operator==(const Event&) const = default;
};

struct EventSequence {
    std::vector<Event> events;

    [[nodiscard]] std::size_t size() const noexcept { return events.size(); }
    [[nodiscard]] bool empty() const noexcept { return events.empty(); }
    [[nodiscard]] const Event& operator[](std::size_t i) const { return events[i]; }
    [[nodiscard]] double first_time() const { return events.front().time; }
    [[nodiscard]] double last_time() const { return events.back().time; }

    bool operator==(const EventSequence&) const = default;
};

struct Dataset {
    std::size_t num_types = 0;
    std::vector<EventSequence> sequences;

    [[nodiscard]] std::size_t total_events() const noexcept;
};

/// Empty string when the sequence is well formed (nonempty, strictly increasing
/// finite times, types below num_types); otherwise a description of the first defect.
[[nodiscard]] std::string describe_defect(const EventSequence& seq, std::size_t num_types);

/// Inter-arrival times tau_j = t_j - t_{j-1} for j >= 1 (zero-based), length N - 1.
[[nodiscard]] std::vector<double> inter_arrivals(const EventSequence& seq);

}  // namespace hpcde::data
