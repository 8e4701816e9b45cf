#include "strictlyap/pe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

namespace strictlyap {

namespace {

long positive_mod(long a, long m) { return ((a % m) + m) % m; }

template <typename F>
double simpson(const F& f, double a, double b, int panels) {
    if (b <= a) return 0.0;
    if (panels < 2) panels = 2;
    if (panels % 2 != 0) ++panels;
    const double h = (b - a) / panels;
    double acc = f(a) + f(b);
    for (int i = 1; i < panels; ++i) acc += (i % 2 == 1 ? 4.0 : 2.0) * f(a + i * h);
    return acc * h / 3.0;
}

int panels_for(double length, double step) {
    int n = static_cast<int>(std::ceil(length / step - 1e-9));
    if (n < 2) n = 2;
    if (n % 2 != 0) ++n;
    return n;
}

void require_fine_step(double tau, double step) {
    if (!(step > 0.0) || step > tau / 64.0 * (1.0 + 1e-12)) {
        throw ConfigError("quadrature step must satisfy 0 < h <= tau/64");
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// DiscretePESignal

DiscretePESignal::DiscretePESignal(std::function<double(long)> p, int l, double delta, double p_bar)
    : p_(std::move(p)), l_(l), delta_(delta), p_bar_(p_bar) {
    if (l_ < 0) throw ParameterError("discrete PE: window length l must be >= 0");
    if (!(delta_ >= 0.0)) throw ParameterError("discrete PE: delta must be >= 0");
    if (!(p_bar_ >= 0.0) || !std::isfinite(p_bar_)) throw ParameterError("discrete PE: bad upper bound");
}

DiscretePESignal DiscretePESignal::from_table(std::vector<double> samples, long start_index, int l,
                                              double delta, bool periodic) {
    if (samples.empty()) throw ConfigError("discrete PE: empty sample table");
    double p_bar = 0.0;
    for (double v : samples) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw ParameterError("discrete PE: samples must be finite and >= 0");
        p_bar = std::max(p_bar, v);
    }
    auto table = std::make_shared<const std::vector<double>>(std::move(samples));
    const long n = static_cast<long>(table->size());
    auto fn = [table, start_index, n, periodic](long k) {
        long i = k - start_index;
        if (periodic) {
            i = positive_mod(i, n);
        } else if (i < 0 || i >= n) {
            throw DomainError("discrete PE: index " + std::to_string(k) + " outside sample table");
        }
        return (*table)[static_cast<std::size_t>(i)];
    };
    return DiscretePESignal(fn, l, delta, p_bar);
}

DiscretePESignal DiscretePESignal::from_json(const nlohmann::json& j) {
    try {
        if (j.at("type").get<std::string>() != "discrete") throw ConfigError("discrete PE: type must be 'discrete'");
        const int l = j.at("l").get<int>();
        const double delta = j.at("delta").get<double>();
        const auto samples = j.at("samples").get<std::vector<double>>();
        const long start = j.contains("start_index") ? j.at("start_index").get<long>() : -static_cast<long>(l);
        const bool periodic = j.contains("periodic") && j.at("periodic").get<bool>();
        return from_table(samples, start, l, delta, periodic);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("discrete PE json: ") + e.what());
    }
}

double DiscretePESignal::operator()(long k) const {
    if (k < -static_cast<long>(l_)) {
        throw DomainError("discrete PE: p queried at " + std::to_string(k) + " below -l");
    }
    return p_(k);
}

DiscretePESignal DiscretePESignal::with_parameters(int l, double delta) const {
    return DiscretePESignal(p_, l, delta, p_bar_);
}

// ---------------------------------------------------------------------------
// ContinuousPESignal

ContinuousPESignal::ContinuousPESignal(std::function<double(double)> q, double tau, double eps, double q_bar)
    : q_(std::move(q)), tau_(tau), eps_(eps), q_bar_(q_bar) {
    if (!(tau_ > 0.0)) throw ParameterError("continuous PE: tau must be > 0");
    if (!(eps_ > 0.0)) throw ParameterError("continuous PE: eps must be > 0");
    if (!(q_bar_ >= 0.0) || !std::isfinite(q_bar_)) throw ParameterError("continuous PE: bad upper bound");
}

ContinuousPESignal ContinuousPESignal::sin2(double tau, double eps) {
    return ContinuousPESignal([](double t) { const double s = std::sin(t); return s * s; }, tau, eps, 1.0);
}

ContinuousPESignal ContinuousPESignal::from_table(std::vector<double> times, std::vector<double> values,
                                                  double tau, double eps, bool periodic) {
    if (times.size() < 2 || times.size() != values.size()) {
        throw ConfigError("continuous PE: table needs >= 2 matching (time, value) pairs");
    }
    double q_bar = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (i > 0 && !(times[i] > times[i - 1])) throw ConfigError("continuous PE: times must increase");
        if (!(values[i] >= 0.0) || !std::isfinite(values[i])) throw ParameterError("continuous PE: values must be >= 0");
        q_bar = std::max(q_bar, values[i]);
    }
    auto ts = std::make_shared<const std::vector<double>>(std::move(times));
    auto vs = std::make_shared<const std::vector<double>>(std::move(values));
    auto fn = [ts, vs, periodic](double t) {
        const double t0 = ts->front();
        const double t1 = ts->back();
        if (periodic) {
            const double period = t1 - t0;
            t = t0 + std::fmod(std::fmod(t - t0, period) + period, period);
        } else if (t < t0 || t > t1) {
            throw DomainError("continuous PE: time " + std::to_string(t) + " outside table");
        }
        auto it = std::upper_bound(ts->begin(), ts->end(), t);
        if (it == ts->end()) return vs->back();
        const std::size_t j = static_cast<std::size_t>(it - ts->begin());
        const std::size_t i = j - 1;
        const double w = (t - (*ts)[i]) / ((*ts)[j] - (*ts)[i]);
        return (*vs)[i] + w * ((*vs)[j] - (*vs)[i]);
    };
    return ContinuousPESignal(fn, tau, eps, q_bar);
}

ContinuousPESignal ContinuousPESignal::from_json(const nlohmann::json& j) {
    try {
        if (j.at("type").get<std::string>() != "continuous") throw ConfigError("continuous PE: type must be 'continuous'");
        const double tau = j.at("tau").get<double>();
        const double eps = j.at("eps").get<double>();
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "sin2") return sin2(tau, eps);
        if (kind == "table") {
            const bool periodic = j.contains("periodic") && j.at("periodic").get<bool>();
            return from_table(j.at("times").get<std::vector<double>>(), j.at("values").get<std::vector<double>>(),
                              tau, eps, periodic);
        }
        throw ConfigError("continuous PE: unknown kind '" + kind + "'");
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("continuous PE json: ") + e.what());
    }
}

// Domain limits are enforced by the underlying signal (tables throw outside
// their range); analytic signals extend past -tau.
double ContinuousPESignal::operator()(double t) const { return q_(t); }

// ---------------------------------------------------------------------------
// Verification and window accumulators

double window_sum(const DiscretePESignal& p, int l, long k) {
    double acc = 0.0;
    for (long j = k - l; j <= k; ++j) acc += p(j);
    return acc;
}

PEVerdict verify_discrete_pe(const DiscretePESignal& p, int l, double delta, long horizon) {
    PEVerdict out;
    out.worst_window = std::numeric_limits<double>::infinity();
    for (long k = 0; k <= horizon; ++k) {
        const double w = window_sum(p, l, k);
        out.worst_window = std::min(out.worst_window, w);
        if (w < delta && out.pass) {
            out.pass = false;
            out.first_violation = k;
        }
    }
    return out;
}

double sum_S(const DiscretePESignal& p, int l, long k) {
    double acc = 0.0;
    const long base = k - l;
    for (long j = base; j <= k; ++j) acc += static_cast<double>(j - base + 1) * p(j);
    return acc;
}

double window_integral(const ContinuousPESignal& q, double tau, double t, double step) {
    return simpson([&q](double s) { return q(s); }, t - tau, t, panels_for(tau, step));
}

PEVerdict verify_continuous_pe(const ContinuousPESignal& q, double tau, double eps, double horizon,
                               double step) {
    require_fine_step(tau, step);
    PEVerdict out;
    out.worst_window = std::numeric_limits<double>::infinity();
    const long n = static_cast<long>(std::floor(horizon / step + 1e-9));
    for (long i = 0; i <= n; ++i) {
        const double t = static_cast<double>(i) * step;
        const double w = window_integral(q, tau, t, step);
        out.worst_window = std::min(out.worst_window, w);
        if (w < eps - 1e-6 && out.pass) {
            out.pass = false;
            out.first_violation = i;
            out.violation_time = t;
        }
    }
    return out;
}

double int_R(const ContinuousPESignal& q, double tau, double t, double step) {
    require_fine_step(tau, step);
    const int n = panels_for(tau, step);
    const double h = tau / n;
    const double a = t - tau;
    // inner(z_j) = int_{z_j}^{t} q, accumulated backward with per-panel Simpson
    std::vector<double> inner(static_cast<std::size_t>(n) + 1, 0.0);
    for (int j = n - 1; j >= 0; --j) {
        const double z0 = a + j * h;
        const double z1 = (j + 1 == n) ? t : a + (j + 1) * h;
        const double mid = 0.5 * (z0 + z1);
        inner[static_cast<std::size_t>(j)] =
            inner[static_cast<std::size_t>(j) + 1] + (z1 - z0) / 6.0 * (q(z0) + 4.0 * q(mid) + q(z1));
    }
    double acc = inner.front() + inner.back();
    for (int j = 1; j < n; ++j) acc += (j % 2 == 1 ? 4.0 : 2.0) * inner[static_cast<std::size_t>(j)];
    return acc * h / 3.0;
}

PEVerdict check_window_bounds(const DiscretePESignal& p, long horizon) {
    const int l = p.window();
    const double bound = p.upper_bound() * (l + 1.0) * (l + 1.0);
    PEVerdict out;
    out.worst_window = -std::numeric_limits<double>::infinity();
    for (long k = 0; k <= horizon; ++k) {
        const double s = sum_S(p, l, k);
        out.worst_window = std::max(out.worst_window, s);
        if (s > bound && out.pass) {
            out.pass = false;
            out.first_violation = k;
        }
    }
    return out;
}

PEVerdict check_window_bounds(const ContinuousPESignal& q, double horizon, double step) {
    const double tau = q.tau();
    const double bound = tau * tau * q.upper_bound() / 2.0 + 1e-8;
    PEVerdict out;
    out.worst_window = -std::numeric_limits<double>::infinity();
    const long n = static_cast<long>(std::floor(horizon / step + 1e-9));
    for (long i = 0; i <= n; ++i) {
        const double t = static_cast<double>(i) * step;
        const double r = int_R(q, tau, t, step);
        out.worst_window = std::max(out.worst_window, r);
        if (r > bound && out.pass) {
            out.pass = false;
            out.first_violation = i;
            out.violation_time = t;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// WindowIntegralCache

WindowIntegralCache::WindowIntegralCache(const ContinuousPESignal& q, double t_min, double t_max, double step)
    : q_(q), t_min_(t_min), step_(step > 0.0 ? step : q.tau() / 256.0) {
    if (!(t_max > t_min)) throw ConfigError("window cache: empty time range");
    const std::size_t n = static_cast<std::size_t>(std::ceil((t_max - t_min) / step_)) + 1;
    r_.resize(n);
    dr_.resize(n);
    const double quad = std::min(step_, q.tau() / 256.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = t_min_ + static_cast<double>(i) * step_;
        r_[i] = int_R(q_, q_.tau(), t, quad);
        dr_[i] = q_.tau() * q_(t) - window_integral(q_, q_.tau(), t, quad);
    }
}

double WindowIntegralCache::R(double t) const {
    const double u = (t - t_min_) / step_;
    if (u < 0.0 || u > static_cast<double>(r_.size() - 1)) {
        return int_R(q_, q_.tau(), t, std::min(step_, q_.tau() / 256.0));
    }
    std::size_t i = static_cast<std::size_t>(u);
    if (i + 1 >= r_.size()) i = r_.size() - 2;
    const double s = u - static_cast<double>(i);
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
    const double h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s);
    const double h11 = s * s * (s - 1);
    return h00 * r_[i] + h10 * step_ * dr_[i] + h01 * r_[i + 1] + h11 * step_ * dr_[i + 1];
}

double WindowIntegralCache::dR(double t) const {
    const double u = (t - t_min_) / step_;
    if (u < 0.0 || u > static_cast<double>(r_.size() - 1)) {
        const double quad = std::min(step_, q_.tau() / 256.0);
        return q_.tau() * q_(t) - window_integral(q_, q_.tau(), t, quad);
    }
    std::size_t i = static_cast<std::size_t>(u);
    if (i + 1 >= r_.size()) i = r_.size() - 2;
    const double s = u - static_cast<double>(i);
    const double d00 = 6 * s * s - 6 * s;
    const double d10 = 3 * s * s - 4 * s + 1;
    const double d01 = -6 * s * s + 6 * s;
    const double d11 = 3 * s * s - 2 * s;
    return (d00 * r_[i] + d01 * r_[i + 1]) / step_ + d10 * dr_[i] + d11 * dr_[i + 1];
}

}  // namespace strictlyap
