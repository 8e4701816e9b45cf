#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "strictlyap/errors.hpp"

namespace strictlyap {

using State = Eigen::VectorXd;

/// Type-erased univariate gain s -> g(s) on [0, inf).
using Gain = std::function<double(double)>;

enum class Extension { Linear, Constant };

/**
 * Piecewise-linear function on a strictly increasing node grid starting at 0.
 *
 * Evaluation at a node returns the stored value exactly. Arguments below 0
 * are clamped to 0; beyond the last node the function continues either with
 * the slope of the last segment or as a constant.
 */
class GridFunction {
public:
    GridFunction() = default;
    GridFunction(std::vector<double> nodes, std::vector<double> values,
                 Extension ext = Extension::Linear);

    static GridFunction sample(std::span<const double> nodes, const Gain& f,
                               Extension ext = Extension::Linear);

    double operator()(double s) const;

    std::span<const double> nodes() const { return nodes_; }
    std::span<const double> values() const { return values_; }
    std::size_t size() const { return nodes_.size(); }
    Extension extension() const { return ext_; }

    /// Slope of segment [nodes[i], nodes[i+1]].
    double slope(std::size_t i) const;

    GridFunction scaled(double factor) const;

private:
    std::vector<double> nodes_;
    std::vector<double> values_;
    Extension ext_ = Extension::Linear;
};

/// Default carrier grid: 0 followed by log-spaced nodes up to `upper`, with
/// `anchors` merged in as exact nodes.
std::vector<double> default_grid(std::size_t n = 2048, double upper = 1e3,
                                 std::span<const double> anchors = std::vector<double>{0.5, 1.0, 2.0});

enum class ClassTag { Kinf, PD, IncreasingPositive, UnimodalPD };

std::string to_string(ClassTag tag);
ClassTag class_tag_from_string(const std::string& s);

struct ComparisonFunction {
    GridFunction f;
    ClassTag tag = ClassTag::PD;
    double peak = 0.0;  // only meaningful for UnimodalPD

    double operator()(double s) const { return f(s); }
};

struct Verdict {
    bool pass = true;
    std::optional<std::size_t> witness;  // first violating node index
    std::string reason;

    explicit operator bool() const { return pass; }
};

Verdict classify(const GridFunction& f, ClassTag tag, double peak = 0.0);

/// Running-min envelopes toward `peak` from both sides (pre-smoothing shape).
GridFunction unimodal_envelope(const GridFunction& theta, double peak);

/// Unimodal PD minorant of a PD function: envelope, 3-point smoothing,
/// envelope again, then halved and clipped below the envelope.
ComparisonFunction minorize_pd(const ComparisonFunction& theta, double peak);

struct MuKappaChi {
    ComparisonFunction mu;     // increasing-positive
    ComparisonFunction kappa;  // Kinf
    ComparisonFunction chi;    // Kinf
};

/**
 * Gains that turn a PE decay with a PD rate into one with a Kinf rate.
 *
 *   mu(r)    = 1 + 4 r^2                  for r <= 1/2
 *            = 4 theta(1) r / theta(2 r)  for r >= 1/2
 *   kappa(r) = 2 * int_0^r mu             (Simpson, 8 panels per segment)
 *   chi(r)   = theta(2 r) mu(r)
 *
 * Output is tabulated on `grid` (0.5 is always added as a node).
 */
MuKappaChi build_mu_kappa_chi(const GridFunction& theta, std::span<const double> grid);
MuKappaChi build_mu_kappa_chi(const GridFunction& theta);

/// gamma(s) = chi(kappa^{-1}(s) / 2).
Gain build_gamma(const ComparisonFunction& kappa, const ComparisonFunction& chi);

double invert_monotone(const Gain& f, double y);
double invert_monotone(const GridFunction& f, double y);

/// (1/2) * min(inf_u [h(u) + L |r - u|], L r) on the nodes of h.
ComparisonFunction lipschitz_pd_minorant(const GridFunction& h, double lipschitz);

/// Running maximum plus one.
ComparisonFunction increasing_majorant(const GridFunction& samples);

/// Kinf map paired with its inverse; the inverse defaults to bisection.
struct KinfMap {
    Gain f;
    Gain inverse;

    KinfMap() = default;
    explicit KinfMap(Gain fn);
    KinfMap(Gain fn, Gain inv) : f(std::move(fn)), inverse(std::move(inv)) {}

    double operator()(double s) const { return f(s); }
};

GridFunction tabulate(const Gain& g, std::span<const double> nodes,
                      Extension ext = Extension::Linear);

/**
 * Scalar field (x, t, k) -> real, pure and deterministic. Optional analytic
 * spatial gradient and time derivative are cross-checked by the certifier.
 */
struct ScalarField {
    std::function<double(const State&, double, long)> eval;
    std::function<State(const State&, double, long)> grad_x;  // may be empty
    std::function<double(const State&, double, long)> dt;     // may be empty
    bool depends_on_t = false;
    bool depends_on_k = false;

    double operator()(const State& x, double t, long k) const { return eval(x, t, k); }
};

// Serialization: CSV with header "node,value"; JSON {nodes, values, class_tag?}.
std::string to_csv(const GridFunction& f);
GridFunction grid_from_csv(const std::string& text, Extension ext = Extension::Linear);
nlohmann::json to_json(const GridFunction& f);
nlohmann::json to_json(const ComparisonFunction& f);
GridFunction grid_from_json(const nlohmann::json& j);
ComparisonFunction comparison_from_json(const nlohmann::json& j);

}  // namespace strictlyap
