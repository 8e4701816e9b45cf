#include "strictlyap/strictify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace strictlyap {

namespace {

void require_pe(const DiscretePESignal& p, long horizon) {
    if (!(p.delta() > 0.0)) throw PEError("discrete PE signal has delta = 0");
    const PEVerdict v = verify_discrete_pe(p, p.window(), p.delta(), horizon);
    if (!v) {
        throw PEError("discrete PE check failed at k=" + std::to_string(*v.first_violation) +
                      " (window sum " + std::to_string(v.worst_window) + " < delta)");
    }
}

void require_pe(const ContinuousPESignal& q, double horizon) {
    const PEVerdict v = verify_continuous_pe(q, q.tau(), q.eps(), horizon, q.tau() / 64.0);
    if (!v) {
        throw PEError("continuous PE check failed at t=" + std::to_string(*v.violation_time) +
                      " (window integral " + std::to_string(v.worst_window) + " < eps)");
    }
}

std::shared_ptr<const WindowIntegralCache> make_cache(const ContinuousPESignal& q, double horizon) {
    return std::make_shared<const WindowIntegralCache>(q, -q.tau(), horizon + q.tau(), q.tau() / 256.0);
}

}  // namespace

// ---------------------------------------------------------------------------
// Discrete

DiscreteStrictification strictify_discrete_pe(const PEStrictificationConfig& cfg) {
    if (!cfg.V.eval) throw ConfigError("strictify_discrete_pe: missing V");
    if (!cfg.p) throw ConfigError("strictify_discrete_pe: missing discrete PE signal");
    const DiscretePESignal p = *cfg.p;
    require_pe(p, cfg.pe_horizon);

    DiscreteStrictification out;
    out.l = p.window();
    out.delta = p.delta();
    out.p_bar = p.upper_bound();

    if (cfg.theta.tag == ClassTag::Kinf) {
        const Verdict v = classify(cfg.theta.f, ClassTag::Kinf);
        if (!v) throw ClassError("strictify_discrete_pe: theta tagged Kinf but " + v.reason);
        auto theta = std::make_shared<const GridFunction>(cfg.theta.f);
        out.kappa = [](double s) { return s; };
        out.gamma = [theta](double s) { return (*theta)(s); };
        out.g = out.gamma;
        out.kappa_identity = true;
    } else {
        const Verdict v = classify(cfg.theta.f, ClassTag::PD);
        if (!v) throw ClassError("strictify_discrete_pe: theta is not PD: " + v.reason);
        const ComparisonFunction hat = minorize_pd(cfg.theta, 1.0);
        MuKappaChi t = build_mu_kappa_chi(hat.f);
        auto kappa = std::make_shared<const GridFunction>(t.kappa.f);
        auto chi = std::make_shared<const GridFunction>(t.chi.f);
        out.kappa = [kappa](double s) { return (*kappa)(s); };
        out.gamma = build_gamma(t.kappa, t.chi);
        // gamma(kappa(s)) = chi(s/2) by construction of gamma.
        out.g = [chi](double s) { return (*chi)(0.5 * s); };
        out.kappa_identity = false;
        out.tables = std::move(t);
    }

    const double w = 1.0 / (4.0 * (out.l + 1.0));
    const double decay = out.delta * w;
    const ScalarField V = cfg.V;
    const Gain kappa = out.kappa;
    const Gain g = out.g;
    const int l = out.l;

    out.U.eval = [V, kappa, g, p, l, w](const State& x, double t, long k) {
        const double v = V(x, t, k);
        return kappa(v) + g(v) * sum_S(p, l, k) * w;
    };
    out.U.depends_on_t = V.depends_on_t;
    out.U.depends_on_k = true;

    out.decay_bound.eval = [V, g, decay](const State& x, double t, long k) { return -decay * g(V(x, t, k)); };
    out.decay_bound.depends_on_t = V.depends_on_t;
    out.decay_bound.depends_on_k = V.depends_on_k;

    if (cfg.alpha1 && cfg.alpha2) {
        const Gain a1 = cfg.alpha1;
        const Gain a2 = cfg.alpha2;
        const double c = out.p_bar * (out.l + 1.0) / 4.0;
        out.lower_envelope = [kappa, a1](double s) { return kappa(a1(s)); };
        out.upper_envelope = [kappa, g, a2, c](double s) { return kappa(a2(s)) + c * g(a2(s)); };
    }
    return out;
}

nlohmann::json DiscreteStrictification::to_json() const {
    nlohmann::json j;
    j["construction"] = "discrete_pe";
    j["l"] = l;
    j["delta"] = delta;
    j["p_bar"] = p_bar;
    j["decay_coefficient"] = delta / (4.0 * (l + 1.0));
    j["kappa_identity"] = kappa_identity;
    if (tables) {
        j["mu"] = strictlyap::to_json(tables->mu);
        j["kappa"] = strictlyap::to_json(tables->kappa);
        j["chi"] = strictlyap::to_json(tables->chi);
    }
    return j;
}

// ---------------------------------------------------------------------------
// Continuous

ContinuousStrictification strictify_continuous_pe(const PEStrictificationConfig& cfg) {
    if (!cfg.V.eval) throw ConfigError("strictify_continuous_pe: missing V");
    if (!cfg.q) throw ConfigError("strictify_continuous_pe: missing continuous PE signal");
    const ContinuousPESignal q = *cfg.q;
    require_pe(q, cfg.time_horizon);

    ContinuousStrictification out;
    out.tau = q.tau();
    out.eps = q.eps();
    out.q_bar = q.upper_bound();
    out.advertised_rate = out.eps / out.tau;
    out.provable_rate = out.advertised_rate / (1.0 + out.tau * out.q_bar / 2.0);
    out.cache = make_cache(q, cfg.time_horizon);

    const auto cache = out.cache;
    const ScalarField V = cfg.V;
    const double tau = out.tau;

    out.V_cts.eval = [V, cache, tau](const State& x, double t, long k) {
        return (1.0 + cache->R(t) / tau) * V(x, t, k);
    };
    out.V_cts.depends_on_t = true;
    out.V_cts.depends_on_k = V.depends_on_k;
    if (V.grad_x && V.dt) {
        out.V_cts.grad_x = [V, cache, tau](const State& x, double t, long k) -> State {
            return (1.0 + cache->R(t) / tau) * V.grad_x(x, t, k);
        };
        out.V_cts.dt = [V, cache, tau](const State& x, double t, long k) {
            return cache->dR(t) / tau * V(x, t, k) + (1.0 + cache->R(t) / tau) * V.dt(x, t, k);
        };
    }

    const double rate = out.advertised_rate;
    out.provable_bound.eval = [V, rate](const State& x, double t, long k) { return -rate * V(x, t, k); };
    out.provable_bound.depends_on_t = V.depends_on_t;
    out.provable_bound.depends_on_k = V.depends_on_k;
    return out;
}

nlohmann::json ContinuousStrictification::to_json() const {
    return {{"construction", "continuous_pe"}, {"tau", tau},
            {"eps", eps},                      {"q_bar", q_bar},
            {"advertised_rate", advertised_rate},
            {"provable_rate", provable_rate},
            {"r_cache_step", cache ? cache->step() : 0.0}};
}

// ---------------------------------------------------------------------------
// Rates

DiscretePESignal pe_from_exp(const DiscretePESignal& r, long horizon) {
    if (horizon < 0) throw ConfigError("pe_from_exp: empty horizon");
    const int l = r.window();
    for (long k = -static_cast<long>(l); k <= horizon; ++k) {
        if (!(r(k) >= 0.0)) throw ParameterError("pe_from_exp: rate must be >= 0");
    }
    auto p = [r](long k) { return -std::expm1(-r(k)); };
    double delta = std::numeric_limits<double>::infinity();
    for (long k = 0; k <= horizon; ++k) {
        double acc = 0.0;
        for (long j = k - l; j <= k; ++j) acc += p(j);
        delta = std::min(delta, acc);
    }
    return DiscretePESignal(p, l, delta, -std::expm1(-r.upper_bound()));
}

double exp_rate_for_dis(int l, double delta) {
    if (!(delta > 0.0)) throw ParameterError("exp_rate_for_dis: delta must be > 0");
    if (l < 0) throw ParameterError("exp_rate_for_dis: l must be >= 0");
    if (delta > l) l = static_cast<int>(std::ceil(delta)) + 1;
    const double m = 4.0 * (l + 1.0);
    return std::log(m / (m - delta));
}

// ---------------------------------------------------------------------------
// Hybrid

HybridStrictification strictify_hybrid_pe(const HybridStrictificationConfig& cfg) {
    if (!cfg.V.eval) throw ConfigError("strictify_hybrid_pe: missing V");
    if (cfg.has_jumps && !cfg.p) throw ConfigError("strictify_hybrid_pe: D is nonempty but no jump PE signal");
    if (cfg.has_flow && !cfg.q) throw ConfigError("strictify_hybrid_pe: C is nonempty but no flow PE signal");

    HybridStrictification out;
    const Gain gamma = cfg.gamma ? cfg.gamma : Gain([](double s) { return s; });
    std::optional<DiscretePESignal> p;
    std::shared_ptr<const WindowIntegralCache> cache;
    double tau = 1.0;
    double rate = std::numeric_limits<double>::infinity();

    if (cfg.has_jumps) {
        require_pe(*cfg.p, cfg.pe_horizon);
        p = cfg.p;
        out.l = cfg.p->window();
        out.delta = cfg.p->delta();
        out.jump_rate = exp_rate_for_dis(out.l, out.delta);
        out.upper_factor += cfg.p->upper_bound() * (out.l + 1.0) / 4.0;
        rate = std::min(rate, out.jump_rate);
    }
    if (cfg.has_flow) {
        require_pe(*cfg.q, cfg.time_horizon);
        cache = make_cache(*cfg.q, cfg.time_horizon);
        tau = cfg.q->tau();
        out.flow_rate = cfg.q->eps() / tau;
        out.upper_factor += tau * cfg.q->upper_bound() / 2.0;
        rate = std::min(rate, out.flow_rate);
    }
    out.rate = std::isfinite(rate) ? rate : 0.0;
    out.cache = cache;

    const ScalarField V = cfg.V;
    const int l = out.l;
    const double w = 1.0 / (4.0 * (l + 1.0));
    out.V_sharp.eval = [V, gamma, p, cache, tau, l, w](const State& x, double t, long k) {
        const double v = V(x, t, k);
        double weight = 0.0;
        if (p) weight += sum_S(*p, l, k) * w;
        if (cache) weight += cache->R(t) / tau;
        return 2.0 * v + weight * gamma(v);
    };
    out.V_sharp.depends_on_t = static_cast<bool>(cache) || V.depends_on_t;
    out.V_sharp.depends_on_k = p.has_value() || V.depends_on_k;
    return out;
}

nlohmann::json HybridStrictification::to_json() const {
    return {{"construction", "hybrid_pe"}, {"l", l},
            {"delta", delta},              {"flow_rate", flow_rate},
            {"jump_rate", jump_rate},      {"rate", rate},
            {"upper_factor", upper_factor}};
}

// ---------------------------------------------------------------------------
// Hypotheses

InequalityRecord check_pe_decay_hypothesis(const ScalarField& V, const DiscreteSystem& sys,
                                           const DiscretePESignal& p, const Gain& theta,
                                           const std::vector<Sample>& samples, double tolerance) {
    return check_inequality(
        "pe_decay_hypothesis", "V(F(x,k),k+1) - V(x,k) <= -p(k+1) theta(V)", samples,
        [&](const Sample& s) {
            const double v = V(s.x, s.t, s.k);
            const double vn = V(step_jump(sys, s.x, s.k), s.t, s.k + 1);
            return vn - v + p(s.k + 1) * theta(v);
        },
        tolerance);
}

InequalityRecord check_flow_pe_hypothesis(const ScalarField& V, const ContinuousSystem& sys,
                                          const ContinuousPESignal& q, const std::vector<Sample>& samples,
                                          double tolerance) {
    return check_inequality(
        "flow_pe_hypothesis", "DV(x,t) <= -q(t) V", samples,
        [&](const Sample& s) {
            return derivative_along_flow(V, sys, s.x, s.t, s.k) + q(s.t) * V(s.x, s.t, s.k);
        },
        tolerance);
}

}  // namespace strictlyap
