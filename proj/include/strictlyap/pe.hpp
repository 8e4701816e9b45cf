#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "strictlyap/errors.hpp"

namespace strictlyap {

/**
 * Discrete excitation signal p on the integers >= -l with window length l and
 * lower window bound delta: sum_{i=k-l}^{k} p(i) >= delta for k >= 0.
 *
 * Values below index -l are a DomainError; callers supply p on the negative
 * indices the window sums touch.
 */
class DiscretePESignal {
public:
    DiscretePESignal(std::function<double(long)> p, int l, double delta, double p_bar);

    static DiscretePESignal from_table(std::vector<double> samples, long start_index, int l,
                                       double delta, bool periodic = false);
    static DiscretePESignal from_json(const nlohmann::json& j);

    double operator()(long k) const;

    int window() const { return l_; }
    double delta() const { return delta_; }
    double upper_bound() const { return p_bar_; }

    DiscretePESignal with_parameters(int l, double delta) const;

private:
    std::function<double(long)> p_;
    int l_ = 0;
    double delta_ = 0.0;
    double p_bar_ = 0.0;
};

/// Continuous excitation signal q on [-tau, inf) with window integrals >= eps.
class ContinuousPESignal {
public:
    ContinuousPESignal(std::function<double(double)> q, double tau, double eps, double q_bar);

    static ContinuousPESignal sin2(double tau = 3.14159265358979323846, double eps = 1.5707963267948966);
    static ContinuousPESignal from_table(std::vector<double> times, std::vector<double> values,
                                         double tau, double eps, bool periodic = false);
    static ContinuousPESignal from_json(const nlohmann::json& j);

    double operator()(double t) const;

    double tau() const { return tau_; }
    double eps() const { return eps_; }
    double upper_bound() const { return q_bar_; }

private:
    std::function<double(double)> q_;
    double tau_;
    double eps_;
    double q_bar_;
};

struct PEVerdict {
    bool pass = true;
    std::optional<long> first_violation;  // k (discrete) or grid index (continuous)
    std::optional<double> violation_time;
    double worst_window = 0.0;            // smallest window sum / integral found

    explicit operator bool() const { return pass; }
};

PEVerdict verify_discrete_pe(const DiscretePESignal& p, int l, double delta, long horizon);
PEVerdict verify_continuous_pe(const ContinuousPESignal& q, double tau, double eps, double horizon,
                               double step);

/// sum_{j=k-l}^{k} p(j)
double window_sum(const DiscretePESignal& p, int l, long k);

/// S(k) = sum_{s=k-l}^{k} sum_{j=s}^{k} p(j), evaluated with triangular weights.
double sum_S(const DiscretePESignal& p, int l, long k);

/// int_{t-tau}^{t} q, composite Simpson with step <= h.
double window_integral(const ContinuousPESignal& q, double tau, double t, double step);

/// R(t) = int_{t-tau}^{t} int_z^t q(nu) dnu dz by nested Simpson.
double int_R(const ContinuousPESignal& q, double tau, double t, double step);

PEVerdict check_window_bounds(const DiscretePESignal& p, long horizon);
PEVerdict check_window_bounds(const ContinuousPESignal& q, double horizon, double step);

/**
 * R(t) and R'(t) = tau q(t) - int_{t-tau}^t q tabulated on [t_min, t_max] and
 * evaluated by cubic Hermite interpolation. Outside the table both are
 * computed directly.
 */
class WindowIntegralCache {
public:
    WindowIntegralCache(const ContinuousPESignal& q, double t_min, double t_max, double step = 0.0);

    double R(double t) const;
    double dR(double t) const;

    double step() const { return step_; }

private:
    ContinuousPESignal q_;
    double t_min_;
    double step_;
    std::vector<double> r_;
    std::vector<double> dr_;
};

}  // namespace strictlyap
