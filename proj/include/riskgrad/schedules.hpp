#pragma once

// Step-size and truncation schedules shared by the estimators and the
// stochastic iterations.

#include <cmath>
#include <vector>

#include "riskgrad/errors.hpp"

namespace riskgrad {

// gamma_m = gamma0 * (1 + m + offset)^(-exponent).
// With this form, sum gamma = inf and sum gamma^2 < inf iff the exponent
// lies in (0.5, 1]; validate() enforces that range plus gamma_max < 1.
struct StepSchedule {
    double gamma0 = 0.5;
    double exponent = 0.8;
    double offset = 10.0;

    double gamma(long m) const { return gamma0 * std::pow(1.0 + m + offset, -exponent); }
    double gamma_max() const { return gamma(0); }

    void validate() const {
        if (!(gamma0 > 0.0)) throw ConfigError("step.gamma0: must be positive");
        if (!(exponent > 0.5) || !(exponent <= 1.0))
            throw ConfigError("step.exponent: must lie in (0.5, 1]");
        if (offset < 0.0) throw ConfigError("step.offset: must be nonnegative");
        if (!(gamma_max() < 1.0))
            throw ConfigError("step.gamma0: gamma_max = gamma0*(1+offset)^-a must be < 1");
    }

    // Increasing-truncation runs additionally need sum gamma^(2(1-beta)) < inf.
    bool compatible_with(double beta) const { return 2.0 * exponent * (1.0 - beta) > 1.0; }
};

// Truncation level sequence M_m: a fixed constant, the power rule
// gamma_m^(-beta), or a ladder selecting the largest rung below gamma_m^(-beta).
struct TruncationSchedule {
    enum class Kind { Fixed, Power, Ladder };

    Kind kind = Kind::Fixed;
    double fixed_m = 16.0;
    double beta = 0.2;
    std::vector<double> rungs;  // strictly increasing, all > 1

    static TruncationSchedule fixed(double m) {
        TruncationSchedule t;
        t.kind = Kind::Fixed;
        t.fixed_m = m;
        t.validate();
        return t;
    }
    static TruncationSchedule power(double beta) {
        TruncationSchedule t;
        t.kind = Kind::Power;
        t.beta = beta;
        t.validate();
        return t;
    }
    static TruncationSchedule ladder(std::vector<double> rungs, double beta) {
        TruncationSchedule t;
        t.kind = Kind::Ladder;
        t.rungs = std::move(rungs);
        t.beta = beta;
        t.validate();
        return t;
    }

    void validate() const {
        switch (kind) {
            case Kind::Fixed:
                if (!(fixed_m > 1.0)) throw ConfigError("truncation.M: must be > 1");
                break;
            case Kind::Power:
                if (!(beta > 0.0) || !(beta < 0.5))
                    throw ConfigError("truncation.beta: must lie in (0, 0.5)");
                break;
            case Kind::Ladder: {
                if (!(beta > 0.0) || !(beta < 0.5))
                    throw ConfigError("truncation.beta: must lie in (0, 0.5)");
                if (rungs.empty()) throw ConfigError("truncation.rungs: must be nonempty");
                double prev = 1.0;
                for (double r : rungs) {
                    if (!(r > prev))
                        throw ConfigError(
                            "truncation.rungs: must be strictly increasing and > 1");
                    prev = r;
                }
                break;
            }
        }
    }

    // Truncation level for step size gamma_m. The ladder falls back to its
    // first rung while gamma^(-beta) is still below every rung; the early
    // values only matter transiently.
    double value(double gamma_m) const {
        switch (kind) {
            case Kind::Fixed:
                return fixed_m;
            case Kind::Power:
                return std::pow(gamma_m, -beta);
            case Kind::Ladder: {
                const double cap = std::pow(gamma_m, -beta);
                double best = rungs.front();
                for (double r : rungs) {
                    if (r <= cap) best = r;
                    else break;
                }
                return best;
            }
        }
        return fixed_m;
    }

    bool increasing() const { return kind != Kind::Fixed; }
};

inline std::vector<double> schedule_values(const TruncationSchedule& trunc,
                                           const StepSchedule& step, long m_begin,
                                           long m_end) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(m_end - m_begin));
    for (long m = m_begin; m < m_end; ++m) out.push_back(trunc.value(step.gamma(m)));
    return out;
}

}  // namespace riskgrad
