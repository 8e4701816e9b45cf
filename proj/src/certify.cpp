#include "strictlyap/certify.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <thread>

namespace strictlyap {

namespace {

std::atomic<unsigned> g_jobs{0};

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFloor = 1e-12;

nlohmann::json number_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

void finalize(InequalityRecord& r) {
    r.pass = r.strict ? (r.worst_margin < r.tolerance) : (r.worst_margin <= r.tolerance);
}

}  // namespace

// ---------------------------------------------------------------------------
// GridSpec

void GridSpec::validate() const {
    if (box_min.empty()) throw ConfigError("grid: state box has no dimensions");
    if (box_min.size() != box_max.size() || box_min.size() != points.size()) {
        throw ConfigError("grid: box_min, box_max and points must have equal length");
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i] <= 0) throw ConfigError("grid: point counts must be positive");
        if (!(box_min[i] <= box_max[i])) throw ConfigError("grid: box_min must be <= box_max");
    }
    if (!(t_min <= t_max)) throw ConfigError("grid: t_min must be <= t_max");
    if (k_min > k_max) throw ConfigError("grid: k_min must be <= k_max");
}

GridSpec GridSpec::from_json(const nlohmann::json& j) {
    static const std::vector<std::string> keys = {"box_min", "box_max", "points", "t_min", "t_max", "t_step",
                                                  "k_min", "k_max", "random_samples", "seed"};
    GridSpec g;
    try {
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (std::find(keys.begin(), keys.end(), it.key()) == keys.end()) {
                throw ConfigError("grid: unknown key '" + it.key() + "'");
            }
        }
        if (j.contains("box_min")) g.box_min = j.at("box_min").get<std::vector<double>>();
        if (j.contains("box_max")) g.box_max = j.at("box_max").get<std::vector<double>>();
        if (j.contains("points")) g.points = j.at("points").get<std::vector<int>>();
        if (j.contains("t_min")) g.t_min = j.at("t_min").get<double>();
        if (j.contains("t_max")) g.t_max = j.at("t_max").get<double>();
        if (j.contains("t_step")) g.t_step = j.at("t_step").get<double>();
        if (j.contains("k_min")) g.k_min = j.at("k_min").get<long>();
        if (j.contains("k_max")) g.k_max = j.at("k_max").get<long>();
        if (j.contains("random_samples")) g.random_samples = j.at("random_samples").get<std::size_t>();
        if (j.contains("seed")) g.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("grid: ") + e.what());
    }
    g.validate();
    return g;
}

nlohmann::json GridSpec::to_json() const {
    return {{"box_min", box_min}, {"box_max", box_max}, {"points", points},   {"t_min", t_min},
            {"t_max", t_max},     {"t_step", t_step},   {"k_min", k_min},     {"k_max", k_max},
            {"random_samples", random_samples},          {"seed", seed}};
}

std::vector<Sample> enumerate_samples(const GridSpec& spec) {
    spec.validate();
    const int n = spec.dim();

    std::vector<std::vector<double>> axes(static_cast<std::size_t>(n));
    for (int d = 0; d < n; ++d) {
        const int m = spec.points[static_cast<std::size_t>(d)];
        const double lo = spec.box_min[static_cast<std::size_t>(d)];
        const double hi = spec.box_max[static_cast<std::size_t>(d)];
        auto& ax = axes[static_cast<std::size_t>(d)];
        if (m == 1) {
            ax.push_back(0.5 * (lo + hi));
        } else {
            for (int i = 0; i < m; ++i) ax.push_back(lo + (hi - lo) * i / (m - 1));
        }
    }
    std::vector<double> times;
    if (spec.t_step > 0.0 && spec.t_max > spec.t_min) {
        const long m = static_cast<long>(std::floor((spec.t_max - spec.t_min) / spec.t_step + 1e-9));
        for (long i = 0; i <= m; ++i) times.push_back(spec.t_min + static_cast<double>(i) * spec.t_step);
    } else {
        times.push_back(spec.t_min);
    }

    std::vector<Sample> out;
    std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
    for (;;) {
        State x(n);
        for (int d = 0; d < n; ++d) x[d] = axes[static_cast<std::size_t>(d)][idx[static_cast<std::size_t>(d)]];
        for (double t : times) {
            for (long k = spec.k_min; k <= spec.k_max; ++k) out.push_back({x, t, k});
        }
        int d = 0;
        while (d < n) {
            auto& i = idx[static_cast<std::size_t>(d)];
            if (++i < axes[static_cast<std::size_t>(d)].size()) break;
            i = 0;
            ++d;
        }
        if (d == n) break;
    }

    std::mt19937_64 rng(spec.seed);
    for (std::size_t r = 0; r < spec.random_samples; ++r) {
        State x(n);
        for (int d = 0; d < n; ++d) {
            std::uniform_real_distribution<double> u(spec.box_min[static_cast<std::size_t>(d)],
                                                     spec.box_max[static_cast<std::size_t>(d)]);
            x[d] = u(rng);
        }
        std::uniform_real_distribution<double> ut(spec.t_min, spec.t_max);
        std::uniform_int_distribution<long> uk(spec.k_min, spec.k_max);
        const double t = spec.t_max > spec.t_min ? ut(rng) : spec.t_min;
        const long k = uk(rng);
        out.push_back({x, t, k});
    }
    return out;
}

std::vector<Sample> filter_samples(const std::vector<Sample>& samples,
                                   const std::function<bool(const Sample&)>& keep) {
    std::vector<Sample> out;
    for (const auto& s : samples) {
        if (keep(s)) out.push_back(s);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Records and reports

nlohmann::json sample_to_json(const Sample& s) {
    nlohmann::json x = nlohmann::json::array();
    for (Eigen::Index i = 0; i < s.x.size(); ++i) x.push_back(s.x[i]);
    return {{"x", x}, {"t", s.t}, {"k", s.k}};
}

nlohmann::json InequalityRecord::to_json() const {
    nlohmann::json j;
    j["name"] = name;
    j["step"] = step;
    j["worst_margin"] = number_or_null(worst_margin);
    j["witness"] = witness ? sample_to_json(*witness) : nlohmann::json(nullptr);
    j["samples_checked"] = samples_checked;
    j["tolerance"] = tolerance;
    j["relative"] = relative;
    j["strict"] = strict;
    j["verdict"] = pass ? "pass" : "fail";
    if (pass) j["note"] = "no violation found";
    return j;
}

void CertificationReport::merge(const CertificationReport& other) {
    records.insert(records.end(), other.records.begin(), other.records.end());
}

bool CertificationReport::pass() const {
    return std::all_of(records.begin(), records.end(), [](const auto& r) { return r.pass; });
}

const InequalityRecord* CertificationReport::find(const std::string& name) const {
    for (const auto& r : records) {
        if (r.name == name) return &r;
    }
    return nullptr;
}

nlohmann::json CertificationReport::to_json() const {
    nlohmann::json j;
    j["records"] = nlohmann::json::array();
    for (const auto& r : records) j["records"].push_back(r.to_json());
    j["verdict"] = pass() ? "pass" : "fail";
    return j;
}

void set_default_jobs(unsigned jobs) { g_jobs = jobs; }

unsigned default_jobs() {
    const unsigned j = g_jobs.load();
    if (j > 0) return j;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

// ---------------------------------------------------------------------------
// Sweeps

InequalityRecord check_inequality(const std::string& name, const std::string& step,
                                  const std::vector<Sample>& samples,
                                  const std::function<double(const Sample&)>& margin, double tolerance,
                                  bool relative) {
    struct Partial {
        double worst = -kInf;
        std::size_t index = 0;
        bool any = false;
    };
    const std::size_t n = samples.size();
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(default_jobs(), n / 64 + 1));
    std::vector<Partial> partial(workers);

    auto run = [&](std::size_t w) {
        const std::size_t lo = n * w / workers;
        const std::size_t hi = n * (w + 1) / workers;
        Partial p;
        for (std::size_t i = lo; i < hi; ++i) {
            double m;
            try {
                m = margin(samples[i]);
            } catch (const std::exception&) {
                m = kInf;
            }
            if (std::isnan(m)) m = kInf;
            if (!p.any || m > p.worst) {
                p.worst = m;
                p.index = i;
                p.any = true;
            }
        }
        partial[w] = p;
    };

    if (workers == 1) {
        run(0);
    } else {
        std::vector<std::thread> threads;
        threads.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(run, w);
        for (auto& t : threads) t.join();
    }

    InequalityRecord r;
    r.name = name;
    r.step = step;
    r.tolerance = tolerance;
    r.relative = relative;
    r.samples_checked = n;
    for (const auto& p : partial) {
        if (p.any && (!r.witness || p.worst > r.worst_margin)) {
            r.worst_margin = p.worst;
            r.witness = samples[p.index];
        }
    }
    finalize(r);
    return r;
}

InequalityRecord check_uppd(const ScalarField& V, const Gain& alpha1, const Gain& alpha2,
                            const std::vector<Sample>& samples, double tolerance) {
    return check_inequality(
        "uppd", "uniform proper positive definite bounds", samples,
        [&](const Sample& s) {
            const double r = s.x.norm();
            const double v = V(s.x, s.t, s.k);
            const double lo = alpha1(r);
            const double hi = alpha2(r);
            const double scale = std::max({1.0, std::abs(v), std::abs(lo), std::abs(hi)});
            return std::max(lo - v, v - hi) / scale;
        },
        tolerance, true);
}

InequalityRecord check_discrete_decay(const ScalarField& U, const DiscreteSystem& sys, const ScalarField& bound,
                                      const std::vector<Sample>& samples, double tolerance) {
    return check_inequality(
        "discrete_decay", "U(F(x,k),k+1) - U(x,k) <= bound", samples,
        [&](const Sample& s) {
            const State xn = step_jump(sys, s.x, s.k);
            return U(xn, s.t, s.k + 1) - U(s.x, s.t, s.k) - bound(s.x, s.t, s.k);
        },
        tolerance);
}

double derivative_along_flow(const ScalarField& V, const ContinuousSystem& sys, const State& x, double t, long k,
                             double fd_scale) {
    const State g = sys.G(x, t);
    if (V.grad_x && V.dt) return V.grad_x(x, t, k).dot(g) + V.dt(x, t, k);
    const double h = fd_scale * (x.norm() + 1.0);
    return (V(x + h * g, t + h, k) - V(x - h * g, t - h, k)) / (2.0 * h);
}

InequalityRecord check_continuous_decay(const ScalarField& V, const ContinuousSystem& sys,
                                        const ScalarField& bound, const std::vector<Sample>& samples,
                                        double tolerance, double fd_scale) {
    return check_inequality(
        "continuous_decay", "DV(x,t) <= bound", samples,
        [&](const Sample& s) {
            return derivative_along_flow(V, sys, s.x, s.t, s.k, fd_scale) - bound(s.x, s.t, s.k);
        },
        tolerance);
}

InequalityRecord check_usb(const DiscreteSystem& sys, const std::vector<Sample>& samples, double tolerance) {
    if (!sys.mu_F) throw ConfigError("check_usb: discrete system has no growth envelope");
    return check_inequality(
        "usb_jump", "|F(x,k)| <= mu_F(|x|)", samples,
        [&](const Sample& s) {
            const double lhs = step_jump(sys, s.x, s.k).norm();
            const double rhs = sys.mu_F(s.x.norm());
            return (lhs - rhs) / std::max(1.0, rhs);
        },
        tolerance, true);
}

InequalityRecord check_usb(const ContinuousSystem& sys, const std::vector<Sample>& samples, double tolerance) {
    if (!sys.mu_G) throw ConfigError("check_usb: continuous system has no growth envelope");
    return check_inequality(
        "usb_flow", "|G(x,t)| <= mu_G(|x|)", samples,
        [&](const Sample& s) {
            const double lhs = sys.G(s.x, s.t).norm();
            const double rhs = sys.mu_G(s.x.norm());
            return (lhs - rhs) / std::max(1.0, rhs);
        },
        tolerance, true);
}

InequalityRecord check_field_derivatives(const ScalarField& V, const ContinuousSystem& sys,
                                         const std::vector<Sample>& samples, double tolerance) {
    if (!V.grad_x || !V.dt) throw ConfigError("check_field_derivatives: field has no analytic derivatives");
    ScalarField fd = V;
    fd.grad_x = nullptr;
    fd.dt = nullptr;
    return check_inequality(
        "fd_consistency", "analytic vs finite-difference derivative", samples,
        [&](const Sample& s) {
            const double a = derivative_along_flow(V, sys, s.x, s.t, s.k);
            const double b = derivative_along_flow(fd, sys, s.x, s.t, s.k);
            return std::abs(a - b) / std::max(1.0, std::abs(a));
        },
        tolerance, true);
}

CertificationReport check_arc_decay(const ScalarField& V, const HybridArc& arc, double jump_rate, double flow_rate,
                                    double tolerance) {
    if (arc.status == ArcStatus::Blowup) throw DomainError("check_arc_decay: arc ended in blow-up");
    const Verdict valid = arc.validate();
    if (!valid) throw DomainError("check_arc_decay: invalid hybrid arc: " + valid.reason);

    InequalityRecord jump, flow, mono;
    jump.name = "arc_jump";
    jump.step = "V after jump <= exp(-r) V before";
    flow.name = "arc_flow_rate";
    flow.step = "-d log V / dt >= flow rate";
    mono.name = "arc_monotone";
    mono.step = "V strictly decreasing along the arc";
    jump.tolerance = flow.tolerance = tolerance;
    mono.tolerance = 0.0;
    mono.strict = true;

    auto record = [](InequalityRecord& r, double m, const Sample& s) {
        ++r.samples_checked;
        if (std::isnan(m)) m = kInf;
        if (!r.witness || m > r.worst_margin) {
            r.worst_margin = m;
            r.witness = s;
        }
    };

    const double decay = std::exp(-jump_rate);
    bool have_prev = false;
    double v_prev = 0.0;
    for (std::size_t si = 0; si < arc.segments.size(); ++si) {
        const auto& seg = arc.segments[si];
        for (std::size_t j = 0; j < seg.t.size(); ++j) {
            const Sample s{seg.x[j], seg.t[j], seg.k};
            const double v = V(s.x, s.t, s.k);
            if (have_prev) {
                if (v_prev > kFloor) record(mono, v - v_prev, s);
                if (j == 0) {
                    record(jump, v - decay * v_prev, s);
                } else if (v_prev > kFloor && v > kFloor) {
                    const double dt = seg.t[j] - seg.t[j - 1];
                    const double rate = -(std::log(v) - std::log(v_prev)) / dt;
                    record(flow, flow_rate - rate, s);
                }
            }
            v_prev = v;
            have_prev = true;
        }
    }
    for (auto* r : {&jump, &flow, &mono}) finalize(*r);

    CertificationReport rep;
    rep.add(jump);
    rep.add(flow);
    rep.add(mono);
    return rep;
}

double fit_exponential_rate(const std::vector<double>& times, const std::vector<double>& values) {
    if (times.size() != values.size() || times.size() < 2) {
        throw DomainError("fit_exponential_rate: need >= 2 matching samples");
    }
    const double n = static_cast<double>(times.size());
    double st = 0.0, sy = 0.0;
    std::vector<double> y(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(values[i] > 0.0)) throw DomainError("fit_exponential_rate: values must be > 0");
        y[i] = std::log(values[i]);
        st += times[i];
        sy += y[i];
    }
    const double tm = st / n;
    const double ym = sy / n;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        num += (times[i] - tm) * (y[i] - ym);
        den += (times[i] - tm) * (times[i] - tm);
    }
    if (!(den > 0.0)) throw DomainError("fit_exponential_rate: times are all equal");
    return -num / den;
}

}  // namespace strictlyap
