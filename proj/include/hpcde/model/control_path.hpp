#pragma once

#include "hpcde/ad/graph.hpp"
#include "hpcde/model/embedding.hpp"

#include <span>
#include <vector>

namespace hpcde::model {

class PathError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Piecewise-linear path through knots (t_j, v_j). Values and slopes live on the
/// graph so gradients reach whatever produced the knots.
class ControlPath {
public:
    /// Generic path; slopes are (v_{j+1} - v_j) / (t_{j+1} - t_j).
    ControlPath(std::vector<double> times, std::vector<ad::Var> values);

    [[nodiscard]] std::size_t num_knots() const noexcept { return times_.size(); }
    [[nodiscard]] std::size_t num_segments() const noexcept { return slopes_.size(); }
    [[nodiscard]] std::size_t channels() const noexcept { return channels_; }
    [[nodiscard]] double knot_time(std::size_t j) const { return times_.at(j); }
    [[nodiscard]] std::span<const double> knot_times() const noexcept { return times_; }
    [[nodiscard]] ad::Var knot_value(std::size_t j) const { return values_.at(j); }
    [[nodiscard]] ad::Var segment_slope(std::size_t s) const { return slopes_.at(s); }
    [[nodiscard]] double start_time() const { return times_.front(); }
    [[nodiscard]] double end_time() const { return times_.back(); }

    /// Segment containing t; interior knots belong to the segment on their right,
    /// the final knot to the last segment.
    [[nodiscard]] std::size_t segment_index(double t) const;
    /// Z(t) by linear interpolation (recorded on the graph).
    [[nodiscard]] ad::Var evaluate(double t) const;
    /// dZ/dt, right-continuous at interior knots.
    [[nodiscard]] ad::Var derivative(double t) const;

private:
    friend ControlPath build_path(std::span<const EmbeddedEvent> embedded);
    ControlPath(std::vector<double> times, std::vector<ad::Var> values,
                std::vector<ad::Var> slopes);
    void check_span(double t) const;

    std::vector<double> times_;
    std::vector<ad::Var> values_;
    std::vector<ad::Var> slopes_;
    std::size_t channels_ = 0;
};

/// Knot j is [z_j ; t_j]; the time channel has slope exactly 1 on every segment.
[[nodiscard]] ControlPath build_path(std::span<const EmbeddedEvent> embedded);

}  // namespace hpcde::model
