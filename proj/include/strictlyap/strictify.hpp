#pragma once

#include <memory>
#include <optional>

#include <nlohmann/json.hpp>

#include "strictlyap/certify.hpp"
#include "strictlyap/funcspace.hpp"
#include "strictlyap/pe.hpp"
#include "strictlyap/systems.hpp"

namespace strictlyap {

struct PEStrictificationConfig {
    ScalarField V;
    ComparisonFunction theta;  // PD decay gain; tag Kinf selects kappa = id
    std::optional<DiscretePESignal> p;
    std::optional<ContinuousPESignal> q;
    Gain alpha1;  // optional UPPD envelopes of V
    Gain alpha2;
    long pe_horizon = 512;      // window sweep used to verify p
    double time_horizon = 64.0; // verification horizon for q and R cache range
};

struct DiscreteStrictification {
    ScalarField U;
    ScalarField decay_bound;  // -(delta / (4(l+1))) g(V)
    Gain kappa;
    Gain gamma;  // decay gain of kappa(V) in terms of kappa(V)
    Gain g;      // gamma o kappa, the weight multiplying S(k)
    bool kappa_identity = true;
    std::optional<MuKappaChi> tables;
    int l = 0;
    double delta = 0.0;
    double p_bar = 0.0;
    Gain lower_envelope;  // kappa o alpha1
    Gain upper_envelope;  // kappa o alpha2 + (p_bar (l+1) / 4) g o alpha2

    nlohmann::json to_json() const;
};

/// U(x,k) = kappa(V) + g(V) S(k) / (4(l+1)).
DiscreteStrictification strictify_discrete_pe(const PEStrictificationConfig& cfg);

struct ContinuousStrictification {
    ScalarField V_cts;
    std::shared_ptr<const WindowIntegralCache> cache;
    double tau = 0.0;
    double eps = 0.0;
    double q_bar = 0.0;
    double advertised_rate = 0.0;  // eps / tau, against V_cts
    double provable_rate = 0.0;    // (eps / tau) / (1 + tau q_bar / 2), against V_cts
    ScalarField provable_bound;    // -(eps / tau) V

    nlohmann::json to_json() const;
};

/// V_cts(x,t,k) = (1 + R(t) / tau) V(x,t,k).
ContinuousStrictification strictify_continuous_pe(const PEStrictificationConfig& cfg);

/// p(k) = 1 - exp(-r(k)) with the window of r and delta from a sweep over [0, horizon].
DiscretePESignal pe_from_exp(const DiscretePESignal& r, long horizon);

/// ln(4(l+1) / (4(l+1) - delta)), enlarging l to ceil(delta)+1 when delta > l.
double exp_rate_for_dis(int l, double delta);

struct HybridStrictificationConfig {
    ScalarField V;
    Gain gamma;                        // empty means identity
    std::optional<DiscretePESignal> p; // jump decrement weight, p = 1 - exp(-r)
    std::optional<ContinuousPESignal> q;
    bool has_flow = true;   // C nonempty
    bool has_jumps = true;  // D nonempty
    long pe_horizon = 512;
    double time_horizon = 64.0;
};

struct HybridStrictification {
    ScalarField V_sharp;
    std::shared_ptr<const WindowIntegralCache> cache;
    double flow_rate = 0.0;  // eps / tau
    double jump_rate = 0.0;  // exp_rate_for_dis(l, delta)
    double rate = 0.0;       // min of the two present rates
    double upper_factor = 2.0;
    int l = 0;
    double delta = 0.0;

    nlohmann::json to_json() const;
};

/// V# = 2V + (S_p(k) / (4(l+1)) + R(t) / tau) gamma(V).
HybridStrictification strictify_hybrid_pe(const HybridStrictificationConfig& cfg);

// Hypothesis checks that the constructors take as given.

/// V(F(x,k), k+1) - V(x,k) <= -p(k+1) Theta(V(x,k)).
InequalityRecord check_pe_decay_hypothesis(const ScalarField& V, const DiscreteSystem& sys,
                                           const DiscretePESignal& p, const Gain& theta,
                                           const std::vector<Sample>& samples, double tolerance = 1e-9);

/// DV(x,t,k) <= -q(t) V(x,t,k).
InequalityRecord check_flow_pe_hypothesis(const ScalarField& V, const ContinuousSystem& sys,
                                          const ContinuousPESignal& q, const std::vector<Sample>& samples,
                                          double tolerance = 1e-4);

}  // namespace strictlyap
