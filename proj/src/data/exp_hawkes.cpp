#include "hpcde/data/exp_hawkes.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <sstream>

namespace hpcde::data {

ExpHawkesParams ExpHawkesParams::self_exciting(std::vector<double> mu, double self_alpha,
                                               double decay, double horizon) {
    const std::size_t k = mu.size();
    ExpHawkesParams p;
    p.mu = std::move(mu);
    p.alpha.assign(k, std::vector<double>(k, 0.0));
    p.decay.assign(k, std::vector<double>(k, decay));
    for (std::size_t i = 0; i < k; ++i) {
        p.alpha[i][i] = self_alpha;
    }
    p.horizon = horizon;
    return p;
}

namespace {

void check_square(const Matrix& m, std::size_t k, const char* name) {
    if (m.size() != k) {
        throw DataError(std::string(name) + " must have " + std::to_string(k) + " rows, got " +
                        std::to_string(m.size()));
    }
    for (const auto& row : m) {
        if (row.size() != k) {
            throw DataError(std::string(name) + " must be " + std::to_string(k) + "x" +
                            std::to_string(k));
        }
    }
}

}  // namespace

double branching_ratio(const ExpHawkesParams& params) {
    const auto k = static_cast<Eigen::Index>(params.num_types());
    Eigen::MatrixXd g(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) {
            g(i, j) = params.alpha[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] /
                      params.decay[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
    }
    Eigen::EigenSolver<Eigen::MatrixXd> solver(g, /*computeEigenvectors=*/false);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

void validate_params(const ExpHawkesParams& params) {
    const std::size_t k = params.num_types();
    if (k == 0) {
        throw DataError("mu must contain at least one base intensity");
    }
    check_square(params.alpha, k, "alpha");
    check_square(params.decay, k, "decay");
    for (double m : params.mu) {
        if (!std::isfinite(m) || m < 0.0) {
            throw DataError("base intensities must be finite and nonnegative");
        }
    }
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            if (!std::isfinite(params.alpha[i][j]) || params.alpha[i][j] < 0.0) {
                throw DataError("alpha entries must be finite and nonnegative");
            }
            if (!std::isfinite(params.decay[i][j]) || params.decay[i][j] <= 0.0) {
                throw DataError("decay entries must be finite and positive");
            }
        }
    }
    if (!std::isfinite(params.horizon) || params.horizon <= 0.0) {
        throw DataError("horizon must be positive");
    }
    const double rho = branching_ratio(params);
    if (!(rho < 1.0)) {
        std::ostringstream os;
        os << "non-stationary parameters: spectral radius of alpha/beta is " << rho
           << " (must be < 1)";
        throw DataError(os.str());
    }
}

std::vector<EventSequence> generate_hawkes(const ExpHawkesParams& params,
                                           std::size_t n_sequences, std::uint64_t seed) {
    validate_params(params);
    const std::size_t k = params.num_types();
    std::vector<EventSequence> out(n_sequences);

    // excitation[a][b]: sum over past type-b events of exp(-decay[a][b] * (t - t_j))
    std::vector<double> excitation(k * k);
    std::vector<double> lam(k);

    for (std::size_t i = 0; i < n_sequences; ++i) {
        std::seed_seq sseq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                           static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i >> 32)};
        std::mt19937_64 rng(sseq);
        std::uniform_real_distribution<double> unif(0.0, 1.0);

        std::fill(excitation.begin(), excitation.end(), 0.0);
        double t = 0.0;
        auto& events = out[i].events;

        auto total_intensity = [&]() {
            double total = 0.0;
            for (std::size_t a = 0; a < k; ++a) {
                double l = params.mu[a];
                for (std::size_t b = 0; b < k; ++b) {
                    l += params.alpha[a][b] * excitation[a * k + b];
                }
                lam[a] = l;
                total += l;
            }
            return total;
        };

        while (true) {
            // Kernels are nonincreasing between events, so the current intensity bounds the future.
            const double bound = total_intensity();
            if (!(bound > 0.0)) {
                break;
            }
            const double wait = -std::log1p(-unif(rng)) / bound;
            const double candidate = t + wait;
            if (candidate > params.horizon) {
                break;
            }
            for (std::size_t a = 0; a < k; ++a) {
                for (std::size_t b = 0; b < k; ++b) {
                    excitation[a * k + b] *= std::exp(-params.decay[a][b] * wait);
                }
            }
            t = candidate;
            const double total = total_intensity();
            const double u = unif(rng) * bound;
            if (u > total) {
                continue;
            }
            std::size_t type = k - 1;
            double acc = 0.0;
            for (std::size_t a = 0; a < k; ++a) {
                acc += lam[a];
                if (u <= acc) {
                    type = a;
                    break;
                }
            }
            events.push_back({type, t});
            for (std::size_t a = 0; a < k; ++a) {
                excitation[a * k + type] += 1.0;
            }
        }
    }
    return out;
}

std::vector<double> exp_hawkes_intensity(const EventSequence& seq, const ExpHawkesParams& params,
                                         double t) {
    std::vector<double> lam(params.mu);
    for (const auto& e : seq.events) {
        if (!(e.time < t)) {
            break;
        }
        for (std::size_t a = 0; a < lam.size(); ++a) {
            lam[a] += params.alpha[a][e.type] * std::exp(-params.decay[a][e.type] * (t - e.time));
        }
    }
    return lam;
}

double exp_hawkes_compensator(const EventSequence& seq, const ExpHawkesParams& params,
                              double from, double to) {
    double total = 0.0;
    for (double m : params.mu) {
        total += m * (to - from);
    }
    for (const auto& e : seq.events) {
        if (!(e.time < to)) {
            break;
        }
        const double start = std::max(from, e.time);
        for (std::size_t a = 0; a < params.num_types(); ++a) {
            const double b = params.decay[a][e.type];
            total += params.alpha[a][e.type] / b *
                     (std::exp(-b * (start - e.time)) - std::exp(-b * (to - e.time)));
        }
    }
    return total;
}

double exact_exp_hawkes_loglik(const EventSequence& seq, const ExpHawkesParams& params) {
    double ll = 0.0;
    for (const auto& e : seq.events) {
        if (e.time < 0.0 || e.time > params.horizon) {
            throw DataError("event at t=" + std::to_string(e.time) + " outside horizon [0, " +
                            std::to_string(params.horizon) + "]");
        }
        ll += std::log(exp_hawkes_intensity(seq, params, e.time)[e.type]);
    }
    return ll - exp_hawkes_compensator(seq, params, 0.0, params.horizon);
}

double exp_hawkes_event_span_loglik(const EventSequence& seq, const ExpHawkesParams& params) {
    if (seq.empty()) {
        return 0.0;
    }
    double ll = 0.0;
    for (const auto& e : seq.events) {
        double total = 0.0;
        for (double l : exp_hawkes_intensity(seq, params, e.time)) {
            total += l;
        }
        ll += std::log(total);
    }
    return ll - exp_hawkes_compensator(seq, params, seq.first_time(), seq.last_time());
}

nlohmann::json params_to_json(const ExpHawkesParams& params) {
    return {{"mu", params.mu},
            {"alpha", params.alpha},
            {"beta", params.decay},
            {"horizon", params.horizon}};
}

ExpHawkesParams params_from_json(const nlohmann::json& doc) {
    ExpHawkesParams p;
    try {
        p.mu = doc.at("mu").get<std::vector<double>>();
        p.alpha = doc.at("alpha").get<Matrix>();
        p.decay = doc.at("beta").get<Matrix>();
        p.horizon = doc.at("horizon").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed Hawkes parameters: ") + e.what());
    }
    validate_params(p);
    return p;
}

}  // namespace hpcde::data
