#include "strictlyap/systems.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace strictlyap {

namespace {

bool finite(const State& x) { return x.allFinite(); }

State rk4_step(const ContinuousSystem& sys, const State& x, double t, double h) {
    const State k1 = sys.G(x, t);
    const State k2 = sys.G(x + 0.5 * h * k1, t + 0.5 * h);
    const State k3 = sys.G(x + 0.5 * h * k2, t + 0.5 * h);
    const State k4 = sys.G(x + h * k3, t + h);
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Integrates from (x0, t0) toward t1 on the grid t0 + i h, appending every
// accepted point after the first to `path`. Stops early at the first grid
// point where `stop` holds. Returns true if stopped early.
bool flow_until(const ContinuousSystem& sys, const State& x0, double t0, double t1, double h,
                const std::function<bool(const State&)>& stop, SampledPath& path) {
    State x = x0;
    long i = 0;
    double t = t0;
    while (t < t1) {
        double t_next = t0 + static_cast<double>(i + 1) * h;
        if (t_next > t1 || t1 - t_next < 1e-12 * std::max(1.0, std::abs(t1))) t_next = t1;
        State xn = rk4_step(sys, x, t, t_next - t);
        if (!finite(xn)) {
            throw BlowupError("flow produced a non-finite state", t);
        }
        x = std::move(xn);
        t = t_next;
        ++i;
        path.t.push_back(t);
        path.x.push_back(x);
        if (stop && t < t1 && stop(x)) return true;
    }
    return false;
}

}  // namespace

SampledPath integrate_flow(const ContinuousSystem& sys, const State& x0, double t0, double t1, double h) {
    if (!(h > 0.0)) throw ConfigError("integrate_flow: step must be > 0");
    if (!(t1 >= t0)) throw ConfigError("integrate_flow: t1 must be >= t0");
    if (!finite(x0)) throw BlowupError("integrate_flow: non-finite initial state", t0);
    SampledPath path;
    path.t.push_back(t0);
    path.x.push_back(x0);
    flow_until(sys, x0, t0, t1, h, nullptr, path);
    return path;
}

State step_jump(const DiscreteSystem& sys, const State& x, long k) {
    State out = sys.F(x, k);
    if (!finite(out)) throw BlowupError("jump produced a non-finite state at k=" + std::to_string(k), 0.0);
    return out;
}

DiscreteSystem build_frozen_system(const DiscreteSystem& base, const DiscretePESignal& p, long horizon) {
    if (p.upper_bound() > 1.0) throw ParameterError("frozen system: p must take values in [0,1]");
    for (long k = -static_cast<long>(p.window()); k <= horizon; ++k) {
        const double v = p(k);
        if (!(v >= 0.0 && v <= 1.0)) {
            throw ParameterError("frozen system: p(" + std::to_string(k) + ") outside [0,1]");
        }
    }
    DiscreteSystem out;
    out.dim = base.dim;
    auto F = base.F;
    out.F = [F, p](const State& x, long k) -> State {
        const double w = p(k + 1);
        if (!(w >= 0.0 && w <= 1.0)) throw ParameterError("frozen system: p outside [0,1]");
        if (w == 0.0) return x;
        if (w == 1.0) return F(x, k);
        return (1.0 - w) * x + w * F(x, k);
    };
    if (base.mu_F) {
        auto mu = base.mu_F;
        out.mu_F = [mu](double s) { return std::max(s, mu(s)); };
    }
    return out;
}

std::string policy_name(const Policy& policy) {
    return std::visit(
        [](const auto& p) -> std::string {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, JumpPriority>) return "jump-priority";
            else if constexpr (std::is_same_v<T, FlowPriority>) return "flow-priority";
            else return "schedule";
        },
        policy);
}

std::string to_string(ArcStatus s) {
    switch (s) {
        case ArcStatus::Budget: return "budget";
        case ArcStatus::Dead: return "dead";
        case ArcStatus::Blowup: return "blowup";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------

Verdict HybridArc::validate() const {
    Verdict v;
    auto fail = [&](std::size_t i, std::string why) {
        v.pass = false;
        v.witness = i;
        v.reason = std::move(why);
        return v;
    };
    if (segments.empty()) return fail(0, "arc has no segments");
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const auto& s = segments[i];
        if (s.t.empty() || s.t.size() != s.x.size()) return fail(i, "segment path is empty or ragged");
        if (!(s.t_start <= s.t_end)) return fail(i, "segment has t_start > t_end");
        if (s.t.front() != s.t_start || s.t.back() != s.t_end) return fail(i, "path does not span segment");
        for (std::size_t j = 1; j < s.t.size(); ++j) {
            if (!(s.t[j] > s.t[j - 1])) return fail(i, "segment times not increasing");
        }
        if (i > 0) {
            const auto& prev = segments[i - 1];
            if (s.k != prev.k + 1) return fail(i, "jump indices not consecutive");
            if (s.t_start != prev.t_end) return fail(i, "segment does not start where the previous ended");
        }
    }
    return v;
}

std::size_t HybridArc::total_points() const {
    std::size_t n = 0;
    for (const auto& s : segments) n += s.t.size();
    return n;
}

const State& HybridArc::final_state() const { return segments.back().x.back(); }
double HybridArc::final_time() const { return segments.back().t_end; }
long HybridArc::final_jump() const { return segments.back().k; }

// ---------------------------------------------------------------------------

namespace {

class ArcBuilder {
public:
    ArcBuilder(const HybridSystem& sys, const State& x0, double t0, const Budget& budget)
        : sys_(sys), budget_(budget), t_limit_(t0 + budget.flow_time) {
        ArcSegment seg;
        seg.k = 0;
        seg.t_start = seg.t_end = t0;
        seg.t.push_back(t0);
        seg.x.push_back(x0);
        arc_.segments.push_back(std::move(seg));
    }

    const State& x() const { return arc_.segments.back().x.back(); }
    double t() const { return arc_.segments.back().t_end; }
    long k() const { return arc_.segments.back().k; }
    bool flow_exhausted() const { return t() >= t_limit_; }
    bool jumps_exhausted() const { return jumps_ >= budget_.jumps; }

    void jump() {
        const State xn = step_jump(sys_.jump, x(), k());
        ++jumps_;
        ++consecutive_;
        if (consecutive_ > budget_.consecutive_jumps) {
            throw ZenoError("more than " + std::to_string(budget_.consecutive_jumps) +
                            " consecutive jumps at t=" + std::to_string(t()));
        }
        ArcSegment seg;
        seg.k = k() + 1;
        seg.t_start = seg.t_end = t();
        seg.t.push_back(t());
        seg.x.push_back(xn);
        arc_.segments.push_back(std::move(seg));
    }

    // Flows toward min(t_target, flow budget). Returns true if `stop` fired.
    bool flow(double t_target, const std::function<bool(const State&)>& stop) {
        const double t1 = std::min(t_target, t_limit_);
        if (!(t1 > t())) return false;
        auto& seg = arc_.segments.back();
        SampledPath path;
        bool stopped = false;
        stopped = flow_until(sys_.flow, seg.x.back(), seg.t_end, t1, budget_.step, stop, path);
        seg.t.insert(seg.t.end(), path.t.begin(), path.t.end());
        seg.x.insert(seg.x.end(), path.x.begin(), path.x.end());
        seg.t_end = seg.t.back();
        if (!path.t.empty()) consecutive_ = 0;
        return stopped;
    }

    HybridArc finish(ArcStatus status, std::string message = {}) {
        arc_.status = status;
        arc_.message = std::move(message);
        return std::move(arc_);
    }

    HybridArc& arc() { return arc_; }

private:
    const HybridSystem& sys_;
    Budget budget_;
    double t_limit_;
    long jumps_ = 0;
    long consecutive_ = 0;
    HybridArc arc_;
};

}  // namespace

HybridArc simulate_hybrid(const HybridSystem& sys, const State& x0, double t0, const Policy& policy,
                          const Budget& budget) {
    if (!(budget.step > 0.0)) throw ConfigError("simulate_hybrid: step must be > 0");
    if (!(budget.flow_time >= 0.0) || budget.jumps < 0 || budget.consecutive_jumps < 0) {
        throw ConfigError("simulate_hybrid: negative budget");
    }
    if (!finite(x0)) throw BlowupError("simulate_hybrid: non-finite initial state", t0);

    ArcBuilder b(sys, x0, t0, budget);
    const auto in_C = sys.in_C ? sys.in_C : [](const State&) { return false; };
    const auto in_D = sys.in_D ? sys.in_D : [](const State&) { return false; };

    auto leaves_C = [&](const State& x) { return !in_C(x); };
    auto enters_D_or_leaves_C = [&](const State& x) { return in_D(x) || !in_C(x); };

    std::vector<double> schedule;
    std::size_t next_scheduled = 0;
    if (const auto* s = std::get_if<Schedule>(&policy)) {
        schedule = s->jump_times;
        std::sort(schedule.begin(), schedule.end());
    }

    try {
        for (;;) {
            const State& x = b.x();
            const bool c = in_C(x);
            const bool d = in_D(x);

            if (!c && !d) return b.finish(ArcStatus::Dead, "state left C and D");

            // Forced jump: not in C.
            if (!c) {
                if (b.jumps_exhausted()) return b.finish(ArcStatus::Budget);
                b.jump();
                continue;
            }
            if (b.flow_exhausted() && !(d && std::holds_alternative<JumpPriority>(policy))) {
                return b.finish(ArcStatus::Budget);
            }

            if (std::holds_alternative<JumpPriority>(policy)) {
                if (d) {
                    if (b.jumps_exhausted()) return b.finish(ArcStatus::Budget);
                    b.jump();
                    continue;
                }
                b.flow(std::numeric_limits<double>::infinity(), enters_D_or_leaves_C);
            } else if (const auto* fp = std::get_if<FlowPriority>(&policy)) {
                const bool stopped = b.flow(b.t() + fp->T_flow, leaves_C);
                if (stopped || b.flow_exhausted()) continue;
                if (in_D(b.x())) {
                    if (b.jumps_exhausted()) return b.finish(ArcStatus::Budget);
                    b.jump();
                }
            } else {
                while (next_scheduled < schedule.size() && schedule[next_scheduled] < b.t()) ++next_scheduled;
                const double target = next_scheduled < schedule.size() ? schedule[next_scheduled]
                                                                        : std::numeric_limits<double>::infinity();
                if (target <= b.t()) {
                    ++next_scheduled;
                    if (d) {
                        if (b.jumps_exhausted()) return b.finish(ArcStatus::Budget);
                        b.jump();
                    }
                    continue;
                }
                b.flow(target, leaves_C);
            }
        }
    } catch (const BlowupError& e) {
        return b.finish(ArcStatus::Blowup, e.what());
    }
}

std::string arc_to_csv(const HybridArc& arc) {
    std::ostringstream os;
    const int n = arc.segments.empty() ? 0 : static_cast<int>(arc.segments.front().x.front().size());
    os << "t,k";
    for (int i = 1; i <= n; ++i) os << ",x_" << i;
    os << ",segment_id\n";
    char buf[64];
    for (std::size_t s = 0; s < arc.segments.size(); ++s) {
        const auto& seg = arc.segments[s];
        for (std::size_t j = 0; j < seg.t.size(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", seg.t[j]);
            os << buf << ',' << seg.k;
            for (int i = 0; i < n; ++i) {
                std::snprintf(buf, sizeof buf, "%.17g", seg.x[j][i]);
                os << ',' << buf;
            }
            os << ',' << s << '\n';
        }
    }
    return os.str();
}

nlohmann::json arc_sidecar(const HybridArc& arc, const Policy& policy) {
    nlohmann::json j;
    j["status"] = to_string(arc.status);
    j["message"] = arc.message;
    j["policy"] = policy_name(policy);
    j["segments"] = nlohmann::json::array();
    for (const auto& s : arc.segments) {
        j["segments"].push_back({{"k", s.k}, {"t_start", s.t_start}, {"t_end", s.t_end}, {"points", s.t.size()}});
    }
    const Verdict v = arc.validate();
    j["domain_valid"] = v.pass;
    if (!v.pass) j["domain_error"] = v.reason;
    return j;
}

}  // namespace strictlyap
