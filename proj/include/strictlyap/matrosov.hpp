#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "strictlyap/certify.hpp"
#include "strictlyap/funcspace.hpp"
#include "strictlyap/pe.hpp"
#include "strictlyap/systems.hpp"

namespace strictlyap {

enum class MatrosovMode { Discrete, Continuous, Hybrid };

std::string to_string(MatrosovMode m);
MatrosovMode matrosov_mode_from_string(const std::string& s);

/**
 * Matrosov pair (V1, V2) with auxiliary functions and the envelopes the
 * construction needs. The cross term chi is only used through its bound
 * |chi| <= phi1(|x|) phi2(N1).
 */
struct MatrosovData {
    ScalarField V1, V2, N1, N2, W;
    Gain w;     // radial minorant: W(x) >= w(|x|)
    Gain phi1;  // increasing, positive
    Gain phi2;  // Kinf
    Gain phi2_inv;  // optional, bisection otherwise

    std::optional<DiscretePESignal> p;
    std::optional<ContinuousPESignal> q;
    std::optional<DiscreteSystem> F;
    std::optional<ContinuousSystem> G;
    std::function<bool(const State&)> in_C;  // hybrid only
    std::function<bool(const State&)> in_D;

    Gain alpha1, alpha2;          // UPPD envelopes of V1
    Gain alpha1_inv, alpha2_inv;  // optional
    Gain mu_F;    // |F(x,k)| <= mu_F(|x|)
    Gain sigma2;  // |V2| <= sigma2(|x|)
    Gain sigma3;  // |V1 + V2| <= sigma3(|x|)
    Gain nu1;     // N1 <= nu1(|x|)

    long pe_horizon = 512;
    double time_horizon = 64.0;
};

/// Pointwise Assumption checks (tolerance 1e-7); hybrid restricts to C and D samples.
CertificationReport check_assumption(const MatrosovData& data, MatrosovMode mode,
                                     const std::vector<Sample>& samples, double tolerance = 1e-7);

struct LambdaGain {
    GridFunction raw;         // shell minimum of w
    ComparisonFunction hat;   // unimodal minorant, peak 1/2
};

LambdaGain build_lambda(const MatrosovData& data);

struct K1Gain {
    ComparisonFunction k1;  // increasing positive, k1 >= 1
    Gain Lambda1;           // k1 * lambda, Kinf
    GridFunction Lambda1_grid;
};

K1Gain build_k1(const LambdaGain& lambda);

struct GammaGains {
    GridFunction slope_env;  // increasing majorant of k1's node slopes
    Gain Gamma;
    Gain Lambda2;
    Gain k2;
};

GammaGains build_gains(const MatrosovData& data, const K1Gain& k1, MatrosovMode mode);

ScalarField assemble_v5(const MatrosovData& data, const K1Gain& k1, const GammaGains& g);

struct V6Result {
    ScalarField V6;
    Gain L_dis;  // delta / (4(l+1)) Lambda1   (empty when no jumps)
    Gain L_cts;  // lambda_reduction (eps / tau) Lambda1   (empty when no flow)
    Gain alpha6;
    double lambda_reduction = 0.5;
    std::shared_ptr<const WindowIntegralCache> cache;
};

V6Result strictify_v5(const MatrosovData& data, const ScalarField& V5, const K1Gain& k1, const GammaGains& g,
                      MatrosovMode mode);

struct K3K4 {
    GridFunction h;
    ComparisonFunction k3;
    GridFunction k4;
};

K3K4 build_k3_k4(const MatrosovData& data, const K1Gain& k1, const GammaGains& g, const V6Result& v6,
                 MatrosovMode mode);

struct Phi3K5 {
    Gain phi3;
    GridFunction k5;
};

Phi3K5 build_phi3_k5(const MatrosovData& data);

/// alpha3(s) = (1/2) min { k3(u) L(u) : alpha1(s) <= u <= alpha2(s) } on 512 points.
Gain make_alpha3(const MatrosovData& data, const ComparisonFunction& k3, const Gain& L);

ScalarField assemble_v8(const MatrosovData& data, const ScalarField& V6, const ComparisonFunction& k3,
                        const GridFunction& k4, const GridFunction& k5);

/// One decay certificate (discrete on D, continuous on C).
struct SubCertificate {
    std::string mode;
    GridFunction k3, k4, k5;
    Gain L;
    Gain alpha3;
    CertificationReport report;
};

struct MatrosovResult {
    MatrosovMode mode = MatrosovMode::Discrete;
    LambdaGain lambda;
    K1Gain k1;
    GammaGains gamma;
    V6Result v6;
    K3K4 k3k4;
    Phi3K5 phi3k5;
    ScalarField V5, V7, V8;
    std::vector<SubCertificate> certificates;
    CertificationReport report;  // assumption + every intermediate check

    bool pass() const { return report.pass(); }
    std::map<std::string, GridFunction> tabulated_gains() const;
    nlohmann::json provenance() const;
};

struct PipelineOptions {
    bool check_assumption = true;
    double tolerance_dis = 1e-6;
    double tolerance_cts = 1e-4;
    double tolerance_assumption = 1e-7;
};

MatrosovResult run_pipeline(const MatrosovData& data, MatrosovMode mode, const std::vector<Sample>& samples,
                            const PipelineOptions& opts = {});

// Synthetic instance S*: V1 = |x|^2, V2 = N2 = 0, W = (3/4)|x|^2, p(k) = k mod 2,
// l = 1, delta = 1. `n1_scale` multiplies N1 (1 is the intended instance).
MatrosovData sstar_discrete(double n1_scale = 1.0);
MatrosovData sstar_continuous(double n1_scale = 1.0);
MatrosovData sstar_hybrid(double n1_scale = 1.0);

}  // namespace strictlyap
