#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "strictlyap/funcspace.hpp"
#include "strictlyap/systems.hpp"

namespace strictlyap {

struct Sample {
    State x;
    double t = 0.0;
    long k = 0;
};

/**
 * Cartesian sample grid over a state box, a time range and an index range,
 * plus `random_samples` uniform draws from the same ranges.
 */
struct GridSpec {
    std::vector<double> box_min{-2.0};
    std::vector<double> box_max{2.0};
    std::vector<int> points{41};
    double t_min = 0.0;
    double t_max = 0.0;
    double t_step = 0.0;  // <= 0 means the single time t_min
    long k_min = 0;
    long k_max = 0;
    std::size_t random_samples = 0;
    std::uint64_t seed = 0;

    void validate() const;
    int dim() const { return static_cast<int>(box_min.size()); }

    static GridSpec from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

std::vector<Sample> enumerate_samples(const GridSpec& spec);

std::vector<Sample> filter_samples(const std::vector<Sample>& samples,
                                   const std::function<bool(const Sample&)>& keep);

struct InequalityRecord {
    std::string name;
    std::string step;
    double worst_margin = -std::numeric_limits<double>::infinity();
    std::optional<Sample> witness;
    std::size_t samples_checked = 0;
    double tolerance = 0.0;
    bool relative = false;  // margins normalised by max(1, |rhs|)
    bool strict = false;    // pass iff worst_margin < tolerance
    bool pass = true;

    nlohmann::json to_json() const;
};

struct CertificationReport {
    std::vector<InequalityRecord> records;

    void add(InequalityRecord r) { records.push_back(std::move(r)); }
    void merge(const CertificationReport& other);
    bool pass() const;
    const InequalityRecord* find(const std::string& name) const;

    nlohmann::json to_json() const;
};

/// Worker count used by sweeps; 0 selects the hardware concurrency.
void set_default_jobs(unsigned jobs);
unsigned default_jobs();

/**
 * Evaluates `margin` on every sample in parallel and reduces by max, ties to
 * the lowest sample index. Exceptions and NaN count as +inf at that sample.
 */
InequalityRecord check_inequality(const std::string& name, const std::string& step,
                                  const std::vector<Sample>& samples,
                                  const std::function<double(const Sample&)>& margin, double tolerance,
                                  bool relative = false);

/// alpha1(|x|) <= V(x,t,k) <= alpha2(|x|), relative tolerance 1e-9.
InequalityRecord check_uppd(const ScalarField& V, const Gain& alpha1, const Gain& alpha2,
                            const std::vector<Sample>& samples, double tolerance = 1e-9);

/// U(F(x,k), t, k+1) - U(x,t,k) <= bound(x,t,k) + tol.
InequalityRecord check_discrete_decay(const ScalarField& U, const DiscreteSystem& sys, const ScalarField& bound,
                                      const std::vector<Sample>& samples, double tolerance = 1e-6);

/// Derivative of V along G, from the analytic oracles when both are present.
double derivative_along_flow(const ScalarField& V, const ContinuousSystem& sys, const State& x, double t,
                             long k, double fd_scale = 1e-5);

/// D V(x,t,k) <= bound(x,t,k) + tol.
InequalityRecord check_continuous_decay(const ScalarField& V, const ContinuousSystem& sys,
                                        const ScalarField& bound, const std::vector<Sample>& samples,
                                        double tolerance = 1e-4, double fd_scale = 1e-5);

/// |F(x,k)| <= mu_F(|x|) or |G(x,t)| <= mu_G(|x|).
InequalityRecord check_usb(const DiscreteSystem& sys, const std::vector<Sample>& samples, double tolerance = 1e-9);
InequalityRecord check_usb(const ContinuousSystem& sys, const std::vector<Sample>& samples,
                           double tolerance = 1e-9);

/// Relative gap between analytic and finite-difference derivatives along G.
InequalityRecord check_field_derivatives(const ScalarField& V, const ContinuousSystem& sys,
                                         const std::vector<Sample>& samples, double tolerance = 1e-4);

/**
 * Jump, flow-rate and strict monotonicity records along an arc. Flow pairs
 * with V below 1e-12 are skipped.
 */
CertificationReport check_arc_decay(const ScalarField& V, const HybridArc& arc, double jump_rate, double flow_rate,
                                    double tolerance = 1e-6);

/// Minus the least-squares slope of log(value) against time.
double fit_exponential_rate(const std::vector<double>& times, const std::vector<double>& values);

nlohmann::json sample_to_json(const Sample& s);

}  // namespace strictlyap
