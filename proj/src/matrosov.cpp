#include "strictlyap/matrosov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace strictlyap {

namespace {

constexpr int kShellPoints = 64;
constexpr int kAlpha3Points = 512;
constexpr double kLambdaReduction = 0.5;

Gain inverse_of(const Gain& f, const Gain& inv) {
    if (inv) return inv;
    return [f](double y) { return y <= 0.0 ? 0.0 : invert_monotone(f, y); };
}

Gain require(const Gain& g, const char* name) {
    if (!g) throw ConfigError(std::string("matrosov: missing ") + name);
    return g;
}

bool has_jumps(MatrosovMode m) { return m != MatrosovMode::Continuous; }
bool has_flow(MatrosovMode m) { return m != MatrosovMode::Discrete; }

// Values s_i * g(s_{i+1}) on the nodes: the interpolant I keeps I(s)/s
// nondecreasing and >= g(s) inside the grid, so k(b) - k(a) >= (b - a) g(b).
GridFunction tabulate_secant(const Gain& g, std::span<const double> nodes) {
    std::vector<double> v(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double next = i + 1 < nodes.size() ? nodes[i + 1] : nodes[i];
        v[i] = nodes[i] * g(next);
    }
    return GridFunction(std::vector<double>(nodes.begin(), nodes.end()), std::move(v), Extension::Linear);
}

template <typename Fn>
auto step_guard(const std::string& step, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const ConfigError&) {
        throw;
    } catch (const PEError&) {
        throw;
    } catch (const ConstructionError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConstructionError(step, e.what());
    }
}

void require_pe(const DiscretePESignal& p, long horizon) {
    if (!(p.delta() > 0.0)) throw PEError("matrosov: discrete PE signal has delta = 0");
    const PEVerdict v = verify_discrete_pe(p, p.window(), p.delta(), horizon);
    if (!v) throw PEError("matrosov: discrete PE check failed at k=" + std::to_string(*v.first_violation));
}

void require_pe(const ContinuousPESignal& q, double horizon) {
    const PEVerdict v = verify_continuous_pe(q, q.tau(), q.eps(), horizon, q.tau() / 64.0);
    if (!v) throw PEError("matrosov: continuous PE check failed at t=" + std::to_string(*v.violation_time));
}

double delta_of(const ScalarField& V, const DiscreteSystem& F, const Sample& s) {
    return V(step_jump(F, s.x, s.k), s.t, s.k + 1) - V(s.x, s.t, s.k);
}

}  // namespace

std::string to_string(MatrosovMode m) {
    switch (m) {
        case MatrosovMode::Discrete: return "discrete";
        case MatrosovMode::Continuous: return "continuous";
        case MatrosovMode::Hybrid: return "hybrid";
    }
    return "unknown";
}

MatrosovMode matrosov_mode_from_string(const std::string& s) {
    if (s == "discrete") return MatrosovMode::Discrete;
    if (s == "continuous") return MatrosovMode::Continuous;
    if (s == "hybrid") return MatrosovMode::Hybrid;
    throw ConfigError("unknown pipeline mode '" + s + "'");
}

// ---------------------------------------------------------------------------
// Assumption

CertificationReport check_assumption(const MatrosovData& d, MatrosovMode mode, const std::vector<Sample>& samples,
                                     double tolerance) {
    CertificationReport rep;
    const Gain phi1 = require(d.phi1, "phi1");
    const Gain phi2 = require(d.phi2, "phi2");

    if (has_jumps(mode)) {
        if (!d.p) throw ConfigError("check_assumption: discrete terms need a PE signal p");
        if (!d.F) throw ConfigError("check_assumption: discrete terms need a jump map F");
        const auto& F = *d.F;
        const auto& p = *d.p;
        const auto pts = mode == MatrosovMode::Hybrid
                             ? filter_samples(samples, [&](const Sample& s) { return d.in_D(s.x); })
                             : samples;
        rep.add(check_inequality(
            "assumption_v1_dis", "V1(F) - V1 <= -N1", pts,
            [&](const Sample& s) { return delta_of(d.V1, F, s) + d.N1(s.x, s.t, s.k); }, tolerance));
        rep.add(check_inequality(
            "assumption_v2_dis", "V2(F) - V2 <= -N2 + phi1(|x|) phi2(N1)", pts,
            [&](const Sample& s) {
                return delta_of(d.V2, F, s) + d.N2(s.x, s.t, s.k) - phi1(s.x.norm()) * phi2(d.N1(s.x, s.t, s.k));
            },
            tolerance));
        rep.add(check_inequality(
            "assumption_excitation_dis", "N1 + N2 >= p(k+1) W", pts,
            [&](const Sample& s) {
                return p(s.k + 1) * d.W(s.x, s.t, s.k) - d.N1(s.x, s.t, s.k) - d.N2(s.x, s.t, s.k);
            },
            tolerance));
    }
    if (has_flow(mode)) {
        if (!d.q) throw ConfigError("check_assumption: continuous terms need a PE signal q");
        if (!d.G) throw ConfigError("check_assumption: continuous terms need a flow map G");
        const auto& G = *d.G;
        const auto& q = *d.q;
        const auto pts = mode == MatrosovMode::Hybrid
                             ? filter_samples(samples, [&](const Sample& s) { return d.in_C(s.x); })
                             : samples;
        rep.add(check_inequality(
            "assumption_v1_cts", "DV1 <= -N1", pts,
            [&](const Sample& s) { return derivative_along_flow(d.V1, G, s.x, s.t, s.k) + d.N1(s.x, s.t, s.k); },
            tolerance));
        rep.add(check_inequality(
            "assumption_v2_cts", "DV2 <= -N2 + phi1(|x|) phi2(N1)", pts,
            [&](const Sample& s) {
                return derivative_along_flow(d.V2, G, s.x, s.t, s.k) + d.N2(s.x, s.t, s.k) -
                       phi1(s.x.norm()) * phi2(d.N1(s.x, s.t, s.k));
            },
            tolerance));
        rep.add(check_inequality(
            "assumption_excitation_cts", "N1 + N2 >= q(t) W", pts,
            [&](const Sample& s) {
                return q(s.t) * d.W(s.x, s.t, s.k) - d.N1(s.x, s.t, s.k) - d.N2(s.x, s.t, s.k);
            },
            tolerance));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Gains

LambdaGain build_lambda(const MatrosovData& d) {
    const Gain w = require(d.w, "radial minorant w");
    const Gain a1 = require(d.alpha1, "alpha1");
    const Gain a2 = require(d.alpha2, "alpha2");
    const Gain a1inv = inverse_of(a1, d.alpha1_inv);
    const Gain a2inv = inverse_of(a2, d.alpha2_inv);

    const auto nodes = default_grid();
    std::vector<double> vals(nodes.size(), 0.0);
    for (std::size_t i = 1; i < nodes.size(); ++i) {
        const double s = nodes[i];
        const double lo = a2inv(s);
        const double hi = a1inv(s);
        if (lo > hi * (1.0 + 1e-9) + 1e-12) {
            throw ConstructionError("shell minimum", "alpha1 <= alpha2 violated at s=" + std::to_string(s));
        }
        if (hi - lo <= 1e-12 * std::max(1.0, hi)) {
            vals[i] = w(hi);
            continue;
        }
        double m = std::numeric_limits<double>::infinity();
        for (int j = 0; j <= kShellPoints; ++j) m = std::min(m, w(lo + (hi - lo) * j / kShellPoints));
        vals[i] = m;
    }
    LambdaGain out;
    out.raw = GridFunction(nodes, vals, Extension::Constant);
    const Verdict v = classify(out.raw, ClassTag::PD);
    if (!v) throw ConstructionError("shell minimum", "lambda is not positive definite: " + v.reason);
    out.hat = step_guard("lambda minorant", [&] { return minorize_pd({out.raw, ClassTag::PD, 0.0}, 0.5); });
    return out;
}

K1Gain build_k1(const LambdaGain& lambda) {
    return step_guard("k1", [&] {
        const auto nodes = default_grid();
        const auto lam = lambda.hat.f;
        const GridFunction theta = GridFunction::sample(
            nodes, [&lam](double r) { return lam(0.5 * r); }, Extension::Constant);
        MuKappaChi t = build_mu_kappa_chi(theta, nodes);
        K1Gain out;
        out.k1 = t.mu;
        for (double v : out.k1.f.values()) {
            if (v < 1.0) throw ConstructionError("k1", "k1 < 1 on the grid");
        }
        auto k1 = std::make_shared<const GridFunction>(out.k1.f);
        auto lh = std::make_shared<const GridFunction>(lam);
        out.Lambda1 = [k1, lh](double s) { return (*k1)(s) * (*lh)(s); };
        out.Lambda1_grid = tabulate(out.Lambda1, out.k1.f.nodes());
        const Verdict v = classify(out.Lambda1_grid, ClassTag::Kinf);
        if (!v) throw ConstructionError("k1", "Lambda1 = k1 lambda is not Kinf: " + v.reason);
        return out;
    });
}

GammaGains build_gains(const MatrosovData& d, const K1Gain& k1, MatrosovMode mode) {
    const Gain a1inv = inverse_of(require(d.alpha1, "alpha1"), d.alpha1_inv);
    const Gain sigma3 = require(d.sigma3, "sigma3");
    const Gain phi1 = require(d.phi1, "phi1");
    const Gain sigma2 = d.sigma2 ? d.sigma2 : Gain([](double) { return 0.0; });
    Gain muF;
    if (has_jumps(mode)) muF = require(d.mu_F, "mu_F");

    GammaGains out;
    const auto& kf = k1.k1.f;
    std::vector<double> slopes(kf.size());
    for (std::size_t i = 0; i < kf.size(); ++i) slopes[i] = kf.slope(std::min(i, kf.size() - 2));
    out.slope_env = increasing_majorant(GridFunction(std::vector<double>(kf.nodes().begin(), kf.nodes().end()),
                                                     slopes, Extension::Constant))
                        .f;

    auto env = std::make_shared<const GridFunction>(out.slope_env);
    auto k1f = std::make_shared<const GridFunction>(kf);
    const Gain gamma_dis = [env, sigma3, muF, a1inv](double v) { return (*env)(v) * sigma3(muF(a1inv(v))) + 1.0; };
    const Gain gamma_cts = [env, sigma3, a1inv](double v) { return (*env)(v) * sigma3(a1inv(v)) + 1.0; };
    switch (mode) {
        case MatrosovMode::Discrete: out.Gamma = gamma_dis; break;
        case MatrosovMode::Continuous: out.Gamma = gamma_cts; break;
        case MatrosovMode::Hybrid:
            out.Gamma = [gamma_dis, gamma_cts](double v) { return std::max(gamma_dis(v), gamma_cts(v)); };
            break;
    }
    out.Lambda2 = [k1f, phi1, a1inv](double v) { return (*k1f)(v) * phi1(a1inv(v)) + 1.0; };
    const Gain Gamma = out.Gamma;
    out.k2 = [Gamma, k1f, sigma2, a1inv](double s) {
        return s * Gamma(s) + (*k1f)(s) * sigma2(a1inv(s)) + s;
    };
    return out;
}

ScalarField assemble_v5(const MatrosovData& d, const K1Gain& k1, const GammaGains& g) {
    auto k1f = std::make_shared<const GridFunction>(k1.k1.f);
    const ScalarField V1 = d.V1;
    const ScalarField V2 = d.V2;
    const Gain k2 = g.k2;
    ScalarField V5;
    V5.eval = [V1, V2, k1f, k2](const State& x, double t, long k) {
        const double v1 = V1(x, t, k);
        return (*k1f)(v1) * (v1 + V2(x, t, k)) + k2(v1);
    };
    V5.depends_on_t = V1.depends_on_t || V2.depends_on_t;
    V5.depends_on_k = V1.depends_on_k || V2.depends_on_k;
    return V5;
}

V6Result strictify_v5(const MatrosovData& d, const ScalarField& V5, const K1Gain& k1, const GammaGains& g,
                      MatrosovMode mode) {
    V6Result out;
    out.lambda_reduction = kLambdaReduction;
    const Gain Lambda1 = k1.Lambda1;
    const ScalarField V1 = d.V1;
    std::optional<DiscretePESignal> p;
    int l = 0;
    double w_dis = 0.0;
    double c_env = 0.0;
    if (has_jumps(mode)) {
        if (!d.p) throw ConfigError("strictify_v5: discrete mode needs p");
        require_pe(*d.p, d.pe_horizon);
        p = d.p;
        l = d.p->window();
        w_dis = 1.0 / (4.0 * (l + 1.0));
        const double decay = d.p->delta() * w_dis;
        out.L_dis = [Lambda1, decay](double s) { return decay * Lambda1(s); };
        c_env += d.p->upper_bound() * (l + 1.0) * (l + 1.0) * w_dis;
    }
    double tau = 1.0;
    const double red = kLambdaReduction;
    if (has_flow(mode)) {
        if (!d.q) throw ConfigError("strictify_v5: continuous mode needs q");
        require_pe(*d.q, d.time_horizon);
        tau = d.q->tau();
        out.cache = std::make_shared<const WindowIntegralCache>(*d.q, -tau, d.time_horizon + tau, tau / 256.0);
        const double rate = red * d.q->eps() / tau;
        out.L_cts = [Lambda1, rate](double s) { return rate * Lambda1(s); };
        c_env += red * tau * d.q->upper_bound() / 2.0;
    }

    const auto cache = out.cache;
    out.V6.eval = [V5, V1, Lambda1, p, l, w_dis, cache, tau, red](const State& x, double t, long k) {
        double weight = 0.0;
        if (p) weight += sum_S(*p, l, k) * w_dis;
        if (cache) weight += red * cache->R(t) / tau;
        return V5(x, t, k) + weight * Lambda1(V1(x, t, k));
    };
    out.V6.depends_on_t = V5.depends_on_t || static_cast<bool>(cache);
    out.V6.depends_on_k = V5.depends_on_k || p.has_value();

    auto k1f = std::make_shared<const GridFunction>(k1.k1.f);
    const Gain a2 = require(d.alpha2, "alpha2");
    const Gain sigma3 = require(d.sigma3, "sigma3");
    const Gain k2 = g.k2;
    out.alpha6 = [k1f, a2, sigma3, k2, Lambda1, c_env](double s) {
        const double u = a2(s);
        return (*k1f)(u) * sigma3(s) + k2(u) + c_env * Lambda1(u);
    };
    return out;
}

K3K4 build_k3_k4(const MatrosovData& d, const K1Gain&, const GammaGains& g, const V6Result& v6,
                 MatrosovMode mode) {
    return step_guard("k3/k4", [&] {
        const Gain phi2 = require(d.phi2, "phi2");
        const Gain phi2inv = inverse_of(phi2, d.phi2_inv);
        const Gain a1inv = inverse_of(require(d.alpha1, "alpha1"), d.alpha1_inv);
        const Gain Lambda2 = g.Lambda2;
        const auto nodes = default_grid();

        std::vector<Gain> Ls;
        if (has_jumps(mode)) Ls.push_back(v6.L_dis);
        if (has_flow(mode)) Ls.push_back(v6.L_cts);

        std::vector<double> hv(nodes.size(), 0.0);
        for (std::size_t i = 1; i < nodes.size(); ++i) {
            const double r = nodes[i];
            const double den = 1.0 + Lambda2(r);
            double h = std::numeric_limits<double>::infinity();
            for (const auto& L : Ls) h = std::min(h, phi2inv(0.5 * L(r) / den) / den);
            if (!(h > 0.0) || !std::isfinite(h)) {
                throw ConstructionError("k3", "h is not positive at r=" + std::to_string(r));
            }
            hv[i] = h;
        }
        K3K4 out;
        out.h = GridFunction(nodes, hv, Extension::Constant);
        out.k3 = lipschitz_pd_minorant(out.h, 1.0);

        const Gain alpha6 = v6.alpha6;
        Gain gk4;
        const Gain k4_cts = [alpha6, a1inv](double s) { return alpha6(a1inv(s)); };
        if (has_jumps(mode)) {
            const Gain muF = require(d.mu_F, "mu_F");
            const Gain k4_dis = [alpha6, muF, a1inv](double s) { return alpha6(muF(a1inv(s))); };
            gk4 = has_flow(mode) ? Gain([k4_dis, k4_cts](double s) { return std::max(k4_dis(s), k4_cts(s)); })
                                 : k4_dis;
        } else {
            gk4 = k4_cts;
        }
        out.k4 = tabulate_secant(gk4, nodes);
        return out;
    });
}

Phi3K5 build_phi3_k5(const MatrosovData& d) {
    const Gain phi2 = require(d.phi2, "phi2");
    const Gain nu1 = require(d.nu1, "nu1");
    const Gain a1inv = inverse_of(require(d.alpha1, "alpha1"), d.alpha1_inv);
    Phi3K5 out;
    out.phi3 = [phi2, nu1, a1inv](double v) { return phi2(nu1(a1inv(v))) + v; };
    out.k5 = tabulate_secant(out.phi3, default_grid());
    return out;
}

Gain make_alpha3(const MatrosovData& d, const ComparisonFunction& k3, const Gain& L) {
    const Gain a1 = require(d.alpha1, "alpha1");
    const Gain a2 = require(d.alpha2, "alpha2");
    auto k3f = std::make_shared<const GridFunction>(k3.f);
    return [a1, a2, k3f, L](double s) {
        if (s <= 0.0) return 0.0;
        const double lo = a1(s);
        const double hi = a2(s);
        if (hi - lo <= 1e-12 * std::max(1.0, hi)) return 0.5 * (*k3f)(lo) * L(lo);
        double m = std::numeric_limits<double>::infinity();
        for (int i = 0; i < kAlpha3Points; ++i) {
            const double u = lo + (hi - lo) * i / (kAlpha3Points - 1);
            m = std::min(m, (*k3f)(u) * L(u));
        }
        return 0.5 * m;
    };
}

ScalarField assemble_v8(const MatrosovData& d, const ScalarField& V6, const ComparisonFunction& k3,
                        const GridFunction& k4, const GridFunction& k5) {
    auto k3f = std::make_shared<const GridFunction>(k3.f);
    auto k4f = std::make_shared<const GridFunction>(k4);
    auto k5f = std::make_shared<const GridFunction>(k5);
    const ScalarField V1 = d.V1;
    ScalarField V8;
    V8.eval = [V1, V6, k3f, k4f, k5f](const State& x, double t, long k) {
        const double v1 = V1(x, t, k);
        return (*k3f)(v1) * V6(x, t, k) + (*k4f)(v1) + (*k5f)(v1);
    };
    V8.depends_on_t = V6.depends_on_t;
    V8.depends_on_k = V6.depends_on_k;
    return V8;
}

// ---------------------------------------------------------------------------
// Pipeline

namespace {

using Diff = std::function<double(const ScalarField&, const Sample&)>;

// Intermediate inequalities for one decay certificate. `diff` is the
// decrement (jumps) or the derivative along the flow.
CertificationReport intermediate_checks(const MatrosovData& d, const MatrosovResult& r, const std::string& suffix,
                                        const Diff& diff, const std::function<double(const Sample&)>& excitation,
                                        const Gain& L, const Gain& alpha3, const std::vector<Sample>& pts,
                                        double tol) {
    CertificationReport rep;
    const Gain Lambda1 = r.k1.Lambda1;
    const Gain Lambda2 = r.gamma.Lambda2;
    const Gain phi2 = d.phi2;
    const Gain phi3 = r.phi3k5.phi3;
    const auto& k3 = r.k3k4.k3.f;
    const ScalarField& V1 = d.V1;
    const ScalarField& N1 = d.N1;
    const ScalarField V6 = r.v6.V6;

    rep.add(check_inequality(
        "v5_decay_" + suffix, "V5 decrease: -e Lambda1(V1) + Lambda2(V1) phi2(N1)", pts,
        [&](const Sample& s) {
            const double v1 = V1(s.x, s.t, s.k);
            return diff(r.V5, s) + excitation(s) * Lambda1(v1) - Lambda2(v1) * phi2(N1(s.x, s.t, s.k));
        },
        tol));
    rep.add(check_inequality(
        "v6_decay_" + suffix, "V6 decrease: -L(V1) + Lambda2(V1) phi2(N1)", pts,
        [&](const Sample& s) {
            const double v1 = V1(s.x, s.t, s.k);
            return diff(V6, s) + L(v1) - Lambda2(v1) * phi2(N1(s.x, s.t, s.k));
        },
        tol));
    rep.add(check_inequality(
        "k3_bound_" + suffix, "phi2(k3 Lambda2) Lambda2 <= L / 2", pts,
        [&](const Sample& s) {
            const double v1 = V1(s.x, s.t, s.k);
            const double l2 = Lambda2(v1);
            return phi2(k3(v1) * l2) * l2 - 0.5 * L(v1);
        },
        1e-7));
    rep.add(check_inequality(
        "phi3_chain_" + suffix, "phi2(N1) <= phi3(V1)", pts,
        [&](const Sample& s) { return phi2(N1(s.x, s.t, s.k)) - phi3(V1(s.x, s.t, s.k)); }, tol));
    rep.add(check_inequality(
        "v7_decay_" + suffix, "V7 decrease: -k3 L / 2 + N1 phi2(N1)", pts,
        [&](const Sample& s) {
            const double v1 = V1(s.x, s.t, s.k);
            const double n1 = N1(s.x, s.t, s.k);
            return diff(r.V7, s) + 0.5 * k3(v1) * L(v1) - n1 * phi2(n1);
        },
        tol));
    rep.add(check_inequality(
        "v8_decay_" + suffix, "V8 decrease: -k3(V1) L(V1) / 2", pts,
        [&](const Sample& s) {
            const double v1 = V1(s.x, s.t, s.k);
            return diff(r.V8, s) + 0.5 * k3(v1) * L(v1);
        },
        tol));
    rep.add(check_inequality(
        "final_decay_" + suffix, "V8 decrease <= -alpha3(|x|)", pts,
        [&](const Sample& s) { return diff(r.V8, s) + alpha3(s.x.norm()); }, tol));
    return rep;
}

}  // namespace

MatrosovResult run_pipeline(const MatrosovData& d, MatrosovMode mode, const std::vector<Sample>& samples,
                            const PipelineOptions& opts) {
    MatrosovResult r;
    r.mode = mode;
    if (opts.check_assumption) r.report.merge(check_assumption(d, mode, samples, opts.tolerance_assumption));

    r.lambda = build_lambda(d);
    r.k1 = build_k1(r.lambda);
    r.gamma = step_guard("Gamma/Lambda2/k2", [&] { return build_gains(d, r.k1, mode); });
    r.V5 = assemble_v5(d, r.k1, r.gamma);
    r.v6 = step_guard("V6", [&] { return strictify_v5(d, r.V5, r.k1, r.gamma, mode); });
    r.k3k4 = build_k3_k4(d, r.k1, r.gamma, r.v6, mode);
    r.phi3k5 = step_guard("phi3/k5", [&] { return build_phi3_k5(d); });

    {
        auto k3f = std::make_shared<const GridFunction>(r.k3k4.k3.f);
        auto k4f = std::make_shared<const GridFunction>(r.k3k4.k4);
        const ScalarField V1 = d.V1;
        const ScalarField V6 = r.v6.V6;
        r.V7.eval = [V1, V6, k3f, k4f](const State& x, double t, long k) {
            const double v1 = V1(x, t, k);
            return (*k3f)(v1) * V6(x, t, k) + (*k4f)(v1);
        };
        r.V7.depends_on_t = V6.depends_on_t;
        r.V7.depends_on_k = V6.depends_on_k;
    }
    r.V8 = assemble_v8(d, r.v6.V6, r.k3k4.k3, r.k3k4.k4, r.phi3k5.k5);

    auto make_sub = [&](const std::string& name, const Gain& L) {
        SubCertificate c;
        c.mode = name;
        c.k3 = r.k3k4.k3.f;
        c.k4 = r.k3k4.k4;
        c.k5 = r.phi3k5.k5;
        c.L = L;
        c.alpha3 = make_alpha3(d, r.k3k4.k3, L);
        const auto tab = tabulate(c.alpha3, default_grid(256, 10.0));
        const Verdict v = classify(tab, ClassTag::PD);
        if (!v) throw ConstructionError("alpha3", "alpha3 is not positive definite: " + v.reason);
        return c;
    };

    if (has_jumps(mode)) {
        SubCertificate c = make_sub("discrete", r.v6.L_dis);
        const auto pts = mode == MatrosovMode::Hybrid
                             ? filter_samples(samples, [&](const Sample& s) { return d.in_D(s.x); })
                             : samples;
        const DiscreteSystem F = *d.F;
        const DiscretePESignal p = *d.p;
        c.report = intermediate_checks(
            d, r, "dis", [F](const ScalarField& V, const Sample& s) { return delta_of(V, F, s); },
            [p](const Sample& s) { return p(s.k + 1); }, c.L, c.alpha3, pts, opts.tolerance_dis);
        r.report.merge(c.report);
        r.certificates.push_back(std::move(c));
    }
    if (has_flow(mode)) {
        SubCertificate c = make_sub("continuous", r.v6.L_cts);
        const auto pts = mode == MatrosovMode::Hybrid
                             ? filter_samples(samples, [&](const Sample& s) { return d.in_C(s.x); })
                             : samples;
        if (!d.G) throw ConfigError("run_pipeline: continuous mode needs G");
        const ContinuousSystem G = *d.G;
        const ContinuousPESignal q = *d.q;
        c.report = intermediate_checks(
            d, r, "cts",
            [G](const ScalarField& V, const Sample& s) { return derivative_along_flow(V, G, s.x, s.t, s.k); },
            [q](const Sample& s) { return q(s.t); }, c.L, c.alpha3, pts, opts.tolerance_cts);
        r.report.merge(c.report);
        r.certificates.push_back(std::move(c));
    }
    return r;
}

std::map<std::string, GridFunction> MatrosovResult::tabulated_gains() const {
    const auto nodes = default_grid();
    std::map<std::string, GridFunction> g;
    g["lambda_shell"] = lambda.raw;
    g["lambda"] = lambda.hat.f;
    g["k1"] = k1.k1.f;
    g["Lambda1"] = k1.Lambda1_grid;
    g["k1_slope_envelope"] = gamma.slope_env;
    g["Gamma"] = tabulate(gamma.Gamma, nodes);
    g["Lambda2"] = tabulate(gamma.Lambda2, nodes);
    g["k2"] = tabulate(gamma.k2, nodes);
    g["alpha6"] = tabulate(v6.alpha6, nodes);
    g["h"] = k3k4.h;
    g["k3"] = k3k4.k3.f;
    g["k4"] = k3k4.k4;
    g["phi3"] = tabulate(phi3k5.phi3, nodes);
    g["k5"] = phi3k5.k5;
    const auto radial = default_grid(256, 10.0);
    for (const auto& c : certificates) g["alpha3_" + c.mode] = tabulate(c.alpha3, radial);
    return g;
}

nlohmann::json MatrosovResult::provenance() const {
    nlohmann::json j;
    j["mode"] = to_string(mode);
    j["lambda_reduction"] = v6.lambda_reduction;
    j["steps"] = nlohmann::json::array({
        {{"step", "shell minimum of W"}, {"gain", "lambda_shell"}},
        {{"step", "unimodal minorant, peak 1/2"}, {"gain", "lambda"}},
        {{"step", "k1 from the PD-to-Kinf construction with Theta(r) = lambda(r/2)"}, {"gain", "k1"}},
        {{"step", "Lambda1 = k1 lambda"}, {"gain", "Lambda1"}},
        {{"step", "Gamma, Lambda2 and k2 = s Gamma + augmentation"}, {"gain", "k2"}},
        {{"step", "V5 = k1(V1)(V1 + V2) + k2(V1)"}, {"gain", nullptr}},
        {{"step", "V6 = V5 + window terms times Lambda1(V1)"}, {"gain", "alpha6"}},
        {{"step", "k3 = 1-Lipschitz minorant of h"}, {"gain", "k3"}},
        {{"step", "k4 = s alpha6(mu_F(alpha1^-1(s)))"}, {"gain", "k4"}},
        {{"step", "phi3 and k5 = s phi3(s)"}, {"gain", "k5"}},
        {{"step", "V8 = k3(V1) V6 + k4(V1) + k5(V1)"}, {"gain", nullptr}},
    });
    j["gains"] = nlohmann::json::object();
    for (const auto& [name, f] : tabulated_gains()) {
        j["gains"][name] = {{"nodes", f.size()}, {"file", "gains/" + name + ".csv"}};
    }
    j["certificates"] = nlohmann::json::array();
    for (const auto& c : certificates) {
        j["certificates"].push_back({{"mode", c.mode}, {"verdict", c.report.pass() ? "pass" : "fail"}});
    }
    j["checks"] = report.to_json();
    return j;
}

// ---------------------------------------------------------------------------
// Instance S*

namespace {

double sq(const State& x) { return x.squaredNorm(); }

DiscretePESignal sstar_p() {
    return DiscretePESignal([](long k) { return static_cast<double>(((k % 2) + 2) % 2); }, 1, 1.0, 1.0);
}

MatrosovData sstar_common() {
    MatrosovData d;
    d.V1.eval = [](const State& x, double, long) { return sq(x); };
    d.V1.grad_x = [](const State& x, double, long) -> State { return 2.0 * x; };
    d.V1.dt = [](const State&, double, long) { return 0.0; };
    d.V2.eval = [](const State&, double, long) { return 0.0; };
    d.N2.eval = [](const State&, double, long) { return 0.0; };
    d.W.eval = [](const State& x, double, long) { return 0.75 * sq(x); };
    d.w = [](double r) { return 0.75 * r * r; };
    d.phi1 = [](double) { return 1.0; };
    d.phi2 = [](double s) { return s; };
    d.phi2_inv = [](double s) { return s; };
    d.alpha1 = d.alpha2 = [](double s) { return s * s; };
    d.alpha1_inv = d.alpha2_inv = [](double s) { return std::sqrt(std::max(0.0, s)); };
    d.mu_F = [](double s) { return s; };
    d.sigma2 = [](double) { return 0.0; };
    d.sigma3 = [](double s) { return s * s; };
    return d;
}

}  // namespace

MatrosovData sstar_discrete(double n1_scale) {
    MatrosovData d = sstar_common();
    const DiscretePESignal p = sstar_p();
    d.p = p;
    DiscreteSystem F;
    F.F = [p](const State& x, long k) -> State { return (1.0 - 0.5 * p(k + 1)) * x; };
    F.mu_F = [](double s) { return s; };
    d.F = F;
    d.N1.eval = [p, n1_scale](const State& x, double, long k) { return n1_scale * 0.75 * p(k + 1) * sq(x); };
    d.N1.depends_on_k = true;
    const double c = 0.75 * std::max(1.0, n1_scale);
    d.nu1 = [c](double s) { return c * s * s; };
    return d;
}

MatrosovData sstar_continuous(double n1_scale) {
    MatrosovData d = sstar_common();
    const ContinuousPESignal q = ContinuousPESignal::sin2();
    d.q = q;
    ContinuousSystem G;
    G.G = [q](const State& x, double t) -> State { return -0.75 * q(t) * x; };
    G.mu_G = [](double s) { return 0.75 * s; };
    d.G = G;
    d.N1.eval = [q, n1_scale](const State& x, double t, long) { return n1_scale * 1.5 * q(t) * sq(x); };
    d.N1.depends_on_t = true;
    const double c = 1.5 * std::max(1.0, n1_scale);
    d.nu1 = [c](double s) { return c * s * s; };
    return d;
}

MatrosovData sstar_hybrid(double n1_scale) {
    MatrosovData d = sstar_common();
    const DiscretePESignal p = sstar_p();
    const ContinuousPESignal q = ContinuousPESignal::sin2();
    d.p = p;
    d.q = q;
    DiscreteSystem F;
    F.F = [p](const State& x, long k) -> State { return -(1.0 - 0.5 * p(k + 1)) * x; };
    F.mu_F = [](double s) { return s; };
    d.F = F;
    ContinuousSystem G;
    G.G = [q](const State& x, double t) -> State { return -0.75 * q(t) * x; };
    G.mu_G = [](double s) { return 0.75 * s; };
    d.G = G;
    d.in_C = [](const State& x) { return x[0] >= 0.0; };
    d.in_D = [](const State& x) { return x[0] <= 0.0; };
    d.N1.eval = [p, q, n1_scale](const State& x, double t, long k) {
        const double base = x[0] <= 0.0 ? 0.75 * p(k + 1) : 1.5 * q(t);
        return n1_scale * base * sq(x);
    };
    d.N1.depends_on_t = d.N1.depends_on_k = true;
    const double c = 1.5 * std::max(1.0, n1_scale);
    d.nu1 = [c](double s) { return c * s * s; };
    return d;
}

}  // namespace strictlyap
