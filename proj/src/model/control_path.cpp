#include "hpcde/model/control_path.hpp"

#include <algorithm>
#include <array>
#include <sstream>

namespace hpcde::model {

namespace {

void check_times(const std::vector<double>& times) {
    if (times.empty()) {
        throw PathError("control path needs at least one knot");
    }
    for (std::size_t j = 1; j < times.size(); ++j) {
        if (!(times[j] > times[j - 1])) {
            std::ostringstream os;
            os.precision(17);
            os << "knot times must be strictly increasing: t[" << j << "] = " << times[j]
               << " after " << times[j - 1];
            throw PathError(os.str());
        }
    }
}

}  // namespace

ControlPath::ControlPath(std::vector<double> times, std::vector<ad::Var> values,
                         std::vector<ad::Var> slopes)
    : times_(std::move(times)), values_(std::move(values)), slopes_(std::move(slopes)) {
    channels_ = values_.front().size();
}

ControlPath::ControlPath(std::vector<double> times, std::vector<ad::Var> values)
    : times_(std::move(times)), values_(std::move(values)) {
    check_times(times_);
    if (values_.size() != times_.size()) {
        throw PathError("control path has " + std::to_string(times_.size()) + " knot times but " +
                        std::to_string(values_.size()) + " knot values");
    }
    channels_ = values_.front().size();
    for (const auto& v : values_) {
        if (v.size() != channels_) {
            throw PathError("knot values must all have " + std::to_string(channels_) +
                            " channels");
        }
    }
    auto& g = values_.front().graph();
    for (std::size_t j = 0; j + 1 < times_.size(); ++j) {
        const double inv = 1.0 / (times_[j + 1] - times_[j]);
        const std::array terms{std::pair{inv, values_[j + 1]}, std::pair{-inv, values_[j]}};
        slopes_.push_back(g.lincomb(terms));
    }
}

ControlPath build_path(std::span<const EmbeddedEvent> embedded) {
    if (embedded.empty()) {
        throw PathError("control path needs at least one knot");
    }
    std::vector<double> times;
    times.reserve(embedded.size());
    for (const auto& e : embedded) {
        times.push_back(e.time);
    }
    check_times(times);

    auto& g = embedded.front().z.graph();
    std::vector<ad::Var> values;
    values.reserve(embedded.size());
    for (const auto& e : embedded) {
        const std::array parts{e.z, g.constant_scalar(e.time)};
        values.push_back(g.concat(parts));
    }
    std::vector<ad::Var> slopes;
    const ad::Var unit = g.constant_scalar(1.0);
    for (std::size_t j = 0; j + 1 < embedded.size(); ++j) {
        const double inv = 1.0 / (times[j + 1] - times[j]);
        const std::array terms{std::pair{inv, embedded[j + 1].z}, std::pair{-inv, embedded[j].z}};
        const std::array parts{g.lincomb(terms), unit};
        slopes.push_back(g.concat(parts));
    }
    return ControlPath(std::move(times), std::move(values), std::move(slopes));
}

void ControlPath::check_span(double t) const {
    if (t < times_.front() || t > times_.back()) {
        std::ostringstream os;
        os << "t = " << t << " outside the path span [" << times_.front() << ", "
           << times_.back() << "]";
        throw PathError(os.str());
    }
}

std::size_t ControlPath::segment_index(double t) const {
    check_span(t);
    if (slopes_.empty()) {
        throw PathError("a single-knot path has no segments");
    }
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    const auto idx = static_cast<std::size_t>(it - times_.begin());
    return std::min(idx == 0 ? 0 : idx - 1, slopes_.size() - 1);
}

ad::Var ControlPath::evaluate(double t) const {
    check_span(t);
    if (slopes_.empty()) {
        return values_.front();
    }
    const std::size_t s = segment_index(t);
    const double width = times_[s + 1] - times_[s];
    const double w = (t - times_[s]) / width;
    auto& g = values_.front().graph();
    const std::array terms{std::pair{1.0 - w, values_[s]}, std::pair{w, values_[s + 1]}};
    return g.lincomb(terms);
}

ad::Var ControlPath::derivative(double t) const { return slopes_[segment_index(t)]; }

}  // namespace hpcde::model
