#include "strictlyap/funcspace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <sstream>

namespace strictlyap {

namespace {

std::vector<double> merge_nodes(std::span<const double> base, std::span<const double> extra) {
    std::vector<double> out(base.begin(), base.end());
    for (double a : extra) {
        if (!(a >= 0.0) || !std::isfinite(a)) continue;
        out.push_back(a);
    }
    std::sort(out.begin(), out.end());
    std::vector<double> unique;
    unique.reserve(out.size());
    for (double v : out) {
        if (!unique.empty() && std::abs(v - unique.back()) <= 1e-12 * std::max(1.0, std::abs(v))) {
            // keep the exact anchor value when it collides with a generated node
            bool v_is_extra = std::find(extra.begin(), extra.end(), v) != extra.end();
            if (v_is_extra) unique.back() = v;
            continue;
        }
        unique.push_back(v);
    }
    return unique;
}

// Composite Simpson with an even number of panels.
template <typename F>
double simpson(const F& f, double a, double b, int panels) {
    if (b <= a) return 0.0;
    if (panels % 2 != 0) ++panels;
    const double h = (b - a) / panels;
    double acc = f(a) + f(b);
    for (int i = 1; i < panels; ++i) {
        acc += (i % 2 == 1 ? 4.0 : 2.0) * f(a + i * h);
    }
    return acc * h / 3.0;
}

std::vector<double> running_envelope(std::span<const double> nodes, std::span<const double> values,
                                     double peak) {
    const std::size_t n = nodes.size();
    std::vector<double> env(values.begin(), values.end());
    // last node index at or below the peak
    std::size_t p = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (nodes[i] <= peak) p = i;
    }
    for (std::size_t i = p; i-- > 0;) env[i] = std::min(env[i], env[i + 1]);
    for (std::size_t i = p + 1; i < n; ++i) env[i] = std::min(env[i], env[i - 1]);
    return env;
}

}  // namespace

// ---------------------------------------------------------------------------
// GridFunction

GridFunction::GridFunction(std::vector<double> nodes, std::vector<double> values, Extension ext)
    : nodes_(std::move(nodes)), values_(std::move(values)), ext_(ext) {
    if (nodes_.size() != values_.size()) {
        throw StructuralError("grid function: node and value counts differ");
    }
    if (nodes_.size() < 2) throw StructuralError("grid function: need at least two nodes");
    if (nodes_.front() != 0.0) throw StructuralError("grid function: first node must be 0");
    for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
        if (!(nodes_[i + 1] > nodes_[i])) {
            throw StructuralError("grid function: nodes not strictly increasing at index " +
                                  std::to_string(i + 1));
        }
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) {
            throw StructuralError("grid function: non-finite value at node " + std::to_string(i));
        }
    }
}

GridFunction GridFunction::sample(std::span<const double> nodes, const Gain& f, Extension ext) {
    std::vector<double> vals;
    vals.reserve(nodes.size());
    for (double s : nodes) vals.push_back(f(s));
    return GridFunction(std::vector<double>(nodes.begin(), nodes.end()), std::move(vals), ext);
}

double GridFunction::operator()(double s) const {
    if (!(s > 0.0)) return values_.front();
    const double last = nodes_.back();
    if (s >= last) {
        if (s == last || ext_ == Extension::Constant) return values_.back();
        return values_.back() + slope(nodes_.size() - 2) * (s - last);
    }
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), s);
    const std::size_t i = static_cast<std::size_t>(it - nodes_.begin()) - 1;
    const double w = (s - nodes_[i]) / (nodes_[i + 1] - nodes_[i]);
    return values_[i] + w * (values_[i + 1] - values_[i]);
}

double GridFunction::slope(std::size_t i) const {
    return (values_[i + 1] - values_[i]) / (nodes_[i + 1] - nodes_[i]);
}

GridFunction GridFunction::scaled(double factor) const {
    std::vector<double> v(values_);
    for (double& x : v) x *= factor;
    return GridFunction(nodes_, std::move(v), ext_);
}

std::vector<double> default_grid(std::size_t n, double upper, std::span<const double> anchors) {
    if (n < 3) throw ConfigError("default grid needs at least 3 nodes");
    if (!(upper > 1e-6)) throw ConfigError("default grid upper bound too small");
    std::vector<double> nodes;
    nodes.reserve(n + anchors.size());
    nodes.push_back(0.0);
    const double lo = 1e-6;
    const double ratio = std::log(upper / lo);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        nodes.push_back(lo * std::exp(ratio * static_cast<double>(i) / static_cast<double>(n - 2)));
    }
    nodes.back() = upper;
    std::vector<double> kept;
    for (double a : anchors) {
        if (a > 0.0 && a < upper) kept.push_back(a);
    }
    return merge_nodes(nodes, kept);
}

// ---------------------------------------------------------------------------
// Classification

std::string to_string(ClassTag tag) {
    switch (tag) {
        case ClassTag::Kinf: return "Kinf";
        case ClassTag::PD: return "PD";
        case ClassTag::IncreasingPositive: return "increasing-positive";
        case ClassTag::UnimodalPD: return "unimodal-PD";
    }
    return "unknown";
}

ClassTag class_tag_from_string(const std::string& s) {
    if (s == "Kinf") return ClassTag::Kinf;
    if (s == "PD") return ClassTag::PD;
    if (s == "increasing-positive") return ClassTag::IncreasingPositive;
    if (s == "unimodal-PD") return ClassTag::UnimodalPD;
    throw ConfigError("unknown class tag '" + s + "'");
}

Verdict classify(const GridFunction& f, ClassTag tag, double peak) {
    const auto v = f.values();
    const auto x = f.nodes();
    const std::size_t n = v.size();
    auto fail = [](std::size_t i, std::string why) { return Verdict{false, i, std::move(why)}; };

    switch (tag) {
        case ClassTag::Kinf:
            if (v[0] != 0.0) return fail(0, "value at 0 is not 0");
            for (std::size_t i = 1; i < n; ++i) {
                if (!(v[i] > v[i - 1])) return fail(i, "not strictly increasing");
            }
            if (f.extension() != Extension::Linear || !(f.slope(n - 2) > 0.0)) {
                return fail(n - 1, "right extension is not increasing and unbounded");
            }
            return {};
        case ClassTag::PD:
            if (v[0] != 0.0) return fail(0, "value at 0 is not 0");
            for (std::size_t i = 1; i < n; ++i) {
                if (!(v[i] > 0.0)) return fail(i, "not positive off 0");
            }
            return {};
        case ClassTag::IncreasingPositive:
            for (std::size_t i = 0; i < n; ++i) {
                if (!(v[i] > 0.0)) return fail(i, "not positive");
                if (i > 0 && v[i] < v[i - 1]) return fail(i, "decreasing");
            }
            return {};
        case ClassTag::UnimodalPD: {
            Verdict pd = classify(f, ClassTag::PD);
            if (!pd) return pd;
            for (std::size_t i = 1; i < n; ++i) {
                if (x[i] <= peak && v[i] < v[i - 1]) return fail(i, "decreasing before peak");
                if (x[i - 1] >= peak && v[i] > v[i - 1]) return fail(i, "increasing after peak");
            }
            return {};
        }
    }
    return {};
}

// ---------------------------------------------------------------------------
// Minorization

GridFunction unimodal_envelope(const GridFunction& theta, double peak) {
    const double extra[] = {peak};
    const auto nodes = merge_nodes(theta.nodes(), extra);
    std::vector<double> vals;
    vals.reserve(nodes.size());
    for (double s : nodes) vals.push_back(theta(s));
    auto env = running_envelope(nodes, vals, peak);
    return GridFunction(nodes, std::move(env), Extension::Constant);
}

ComparisonFunction minorize_pd(const ComparisonFunction& theta, double peak) {
    if (!(peak > 0.0)) throw ParameterError("minorize_pd: peak must be positive");
    if (Verdict v = classify(theta.f, ClassTag::PD); !v) {
        throw ClassError("minorize_pd: input is not PD (" + v.reason + " at node " +
                         std::to_string(*v.witness) + ")");
    }
    const GridFunction env = unimodal_envelope(theta.f, peak);
    const auto nodes = env.nodes();
    const auto e = env.values();
    const std::size_t n = e.size();

    std::vector<double> smooth(n);
    smooth[0] = e[0];
    for (std::size_t i = 1; i + 1 < n; ++i) smooth[i] = (e[i - 1] + e[i] + e[i + 1]) / 3.0;
    smooth[n - 1] = 0.5 * (e[n - 2] + e[n - 1]);

    auto shaped = running_envelope(nodes, smooth, peak);
    for (std::size_t i = 0; i < n; ++i) shaped[i] = std::min(0.5 * shaped[i], e[i]);
    shaped[0] = 0.0;

    ComparisonFunction out{GridFunction(std::vector<double>(nodes.begin(), nodes.end()),
                                        std::move(shaped), Extension::Constant),
                           ClassTag::UnimodalPD, peak};
    if (Verdict v = classify(out.f, ClassTag::UnimodalPD, peak); !v) {
        throw ClassError("minorize_pd: result not unimodal PD (" + v.reason + ")");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Gains mu, kappa, chi, gamma

MuKappaChi build_mu_kappa_chi(const GridFunction& theta) {
    return build_mu_kappa_chi(theta, default_grid());
}

MuKappaChi build_mu_kappa_chi(const GridFunction& theta, std::span<const double> grid) {
    const double theta1 = theta(1.0);
    if (!(theta1 > 0.0)) throw ClassError("build_mu_kappa_chi: theta(1) must be positive");

    auto mu = [&theta, theta1](double r) {
        if (r <= 0.5) return 1.0 + 4.0 * r * r;
        const double den = theta(2.0 * r);
        if (!(den > 0.0)) {
            throw ClassError("build_mu_kappa_chi: theta(2r) = 0 at r = " + std::to_string(r) +
                             " (division singularity)");
        }
        return 4.0 * theta1 * r / den;
    };

    const double half[] = {0.5};
    const auto nodes = merge_nodes(grid, half);
    const std::size_t n = nodes.size();
    std::vector<double> mu_v(n), kappa_v(n), chi_v(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) {
            const double a = nodes[i - 1];
            const double b = nodes[i];
            acc += 2.0 * simpson(mu, a, b, 8);
        }
        mu_v[i] = mu(nodes[i]);
        kappa_v[i] = acc;
        chi_v[i] = theta(2.0 * nodes[i]) * mu_v[i];
    }
    chi_v[0] = 0.0;
    kappa_v[0] = 0.0;

    return MuKappaChi{
        {GridFunction(nodes, std::move(mu_v), Extension::Linear), ClassTag::IncreasingPositive, 0.0},
        {GridFunction(nodes, std::move(kappa_v), Extension::Linear), ClassTag::Kinf, 0.0},
        {GridFunction(nodes, std::move(chi_v), Extension::Linear), ClassTag::Kinf, 0.0}};
}

Gain build_gamma(const ComparisonFunction& kappa, const ComparisonFunction& chi) {
    if (Verdict v = classify(kappa.f, ClassTag::Kinf); !v) {
        throw ClassError("build_gamma: kappa is not strictly increasing (" + v.reason + ")");
    }
    auto k = std::make_shared<const GridFunction>(kappa.f);
    auto c = std::make_shared<const GridFunction>(chi.f);
    return [k, c](double s) {
        if (!(s > 0.0)) return 0.0;
        return (*c)(invert_monotone(*k, s) / 2.0);
    };
}

double invert_monotone(const Gain& f, double y) {
    const double f0 = f(0.0);
    if (y < f0) throw RangeError("invert_monotone: target below f(0)");
    if (y == f0) return 0.0;
    double lo = 0.0;
    double hi = 1.0;
    const double limit = std::ldexp(1.0, 60);
    while (f(hi) < y) {
        lo = hi;
        hi *= 2.0;
        if (hi > limit) throw DivergenceError("invert_monotone: no bracket within 2^60");
    }
    const double tol = 1e-13 * std::max(1.0, std::abs(y));
    double mid = 0.5 * (lo + hi);
    for (int it = 0; it < 400; ++it) {
        mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (std::abs(fm - y) <= tol) break;
        if (fm < y) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, hi)) break;
    }
    return mid;
}

double invert_monotone(const GridFunction& f, double y) {
    const auto x = f.nodes();
    const auto v = f.values();
    const std::size_t n = v.size();
    if (y < v[0]) throw RangeError("invert_monotone: target below f(0)");
    for (std::size_t i = 1; i < n; ++i) {
        if (!(v[i] > v[i - 1])) {
            return invert_monotone(Gain([&f](double s) { return f(s); }), y);
        }
    }
    if (y <= v[n - 1]) {
        auto it = std::lower_bound(v.begin(), v.end(), y);
        const std::size_t j = static_cast<std::size_t>(it - v.begin());
        if (v[j] == y) return x[j];
        const std::size_t i = j - 1;
        return x[i] + (y - v[i]) / (v[j] - v[i]) * (x[j] - x[i]);
    }
    if (f.extension() == Extension::Constant) {
        throw RangeError("invert_monotone: target above range of constant-extended function");
    }
    return x[n - 1] + (y - v[n - 1]) / f.slope(n - 2);
}

// ---------------------------------------------------------------------------
// Envelopes

ComparisonFunction lipschitz_pd_minorant(const GridFunction& h, double lipschitz) {
    if (!(lipschitz > 0.0)) throw ParameterError("lipschitz_pd_minorant: L must be positive");
    const auto x = h.nodes();
    const auto v = h.values();
    const std::size_t n = v.size();
    std::vector<double> g(v.begin(), v.end());
    for (std::size_t i = 1; i < n; ++i) g[i] = std::min(g[i], g[i - 1] + lipschitz * (x[i] - x[i - 1]));
    for (std::size_t i = n - 1; i-- > 0;) g[i] = std::min(g[i], g[i + 1] + lipschitz * (x[i + 1] - x[i]));
    for (std::size_t i = 0; i < n; ++i) g[i] = 0.5 * std::min(g[i], lipschitz * x[i]);
    g[0] = 0.0;
    return {GridFunction(std::vector<double>(x.begin(), x.end()), std::move(g), Extension::Constant),
            ClassTag::PD, 0.0};
}

ComparisonFunction increasing_majorant(const GridFunction& samples) {
    const auto v = samples.values();
    std::vector<double> out(v.size());
    double run = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < v.size(); ++i) {
        run = std::max(run, v[i]);
        out[i] = run + 1.0;
    }
    auto x = samples.nodes();
    return {GridFunction(std::vector<double>(x.begin(), x.end()), std::move(out), Extension::Constant),
            ClassTag::IncreasingPositive, 0.0};
}

KinfMap::KinfMap(Gain fn) : f(std::move(fn)) {
    inverse = [g = f](double y) { return invert_monotone(g, y); };
}

GridFunction tabulate(const Gain& g, std::span<const double> nodes, Extension ext) {
    return GridFunction::sample(nodes, g, ext);
}

// ---------------------------------------------------------------------------
// Serialization

std::string to_csv(const GridFunction& f) {
    std::ostringstream os;
    os << "node,value\n";
    char buf[64];
    for (std::size_t i = 0; i < f.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", f.nodes()[i], f.values()[i]);
        os << buf;
    }
    return os.str();
}

GridFunction grid_from_csv(const std::string& text, Extension ext) {
    std::istringstream is(text);
    std::string line;
    std::vector<double> nodes, values;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw StructuralError("grid csv: missing comma");
        try {
            std::size_t used = 0;
            const double a = std::stod(line.substr(0, comma), &used);
            const double b = std::stod(line.substr(comma + 1));
            nodes.push_back(a);
            values.push_back(b);
        } catch (const std::invalid_argument&) {
            if (nodes.empty()) continue;  // header
            throw StructuralError("grid csv: unparsable line '" + line + "'");
        }
    }
    return GridFunction(std::move(nodes), std::move(values), ext);
}

nlohmann::json to_json(const GridFunction& f) {
    return {{"nodes", std::vector<double>(f.nodes().begin(), f.nodes().end())},
            {"values", std::vector<double>(f.values().begin(), f.values().end())},
            {"extension", f.extension() == Extension::Linear ? "linear" : "constant"}};
}

nlohmann::json to_json(const ComparisonFunction& f) {
    auto j = to_json(f.f);
    j["class_tag"] = to_string(f.tag);
    if (f.tag == ClassTag::UnimodalPD) j["peak"] = f.peak;
    return j;
}

GridFunction grid_from_json(const nlohmann::json& j) {
    try {
        Extension ext = Extension::Linear;
        if (j.contains("extension") && j.at("extension").get<std::string>() == "constant") {
            ext = Extension::Constant;
        }
        return GridFunction(j.at("nodes").get<std::vector<double>>(),
                            j.at("values").get<std::vector<double>>(), ext);
    } catch (const nlohmann::json::exception& e) {
        throw StructuralError(std::string("grid json: ") + e.what());
    }
}

ComparisonFunction comparison_from_json(const nlohmann::json& j) {
    ComparisonFunction c{grid_from_json(j), ClassTag::PD, 0.0};
    if (j.contains("class_tag")) c.tag = class_tag_from_string(j.at("class_tag").get<std::string>());
    if (j.contains("peak")) c.peak = j.at("peak").get<double>();
    return c;
}

}  // namespace strictlyap
