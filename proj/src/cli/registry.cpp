#include "cli/registry.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "strictlyap/errors.hpp"

namespace strictlyap::cli {

namespace {

using nlohmann::json;

constexpr double kPi = std::numbers::pi;

// --- shared pieces --------------------------------------------------------

ScalarField quadratic(const Eigen::MatrixXd& P) {
    ScalarField V;
    V.eval = [P](const State& x, double, long) { return x.dot(P * x); };
    V.grad_x = [P](const State& x, double, long) -> State { return 2.0 * (P * x); };
    V.dt = [](const State&, double, long) { return 0.0; };
    return V;
}

ScalarField square_norm() { return quadratic(Eigen::MatrixXd::Identity(1, 1)); }

ComparisonFunction linear_gain(double c) {
    return {GridFunction::sample(default_grid(), [c](double s) { return c * s; }, Extension::Linear), ClassTag::Kinf,
            0.0};
}

DiscretePESignal mod2_signal() {
    return DiscretePESignal([](long k) { return static_cast<double>(((k % 2) + 2) % 2); }, 1, 1.0, 1.0);
}

DiscretePESignal discrete_signal(const ExperimentConfig& cfg, const DiscretePESignal& fallback) {
    return cfg.pe_discrete ? DiscretePESignal::from_json(*cfg.pe_discrete) : fallback;
}

ContinuousPESignal continuous_signal(const ExperimentConfig& cfg) {
    return cfg.pe_continuous ? ContinuousPESignal::from_json(*cfg.pe_continuous) : ContinuousPESignal::sin2();
}

GridSpec grid_or(const ExperimentConfig& cfg, GridSpec fallback) {
    GridSpec g = cfg.grid ? GridSpec::from_json(*cfg.grid) : fallback;
    if (!cfg.grid || !cfg.grid->contains("seed")) g.seed = cfg.seed;
    g.validate();
    return g;
}

SimulationSpec simulation_or(const ExperimentConfig& cfg, const SimulationSpec& fallback) {
    return cfg.simulation ? SimulationSpec::from_json(*cfg.simulation, fallback) : fallback;
}

HybridSystem jump_only(const DiscreteSystem& F) {
    HybridSystem h;
    h.in_C = [](const State&) { return false; };
    h.in_D = [](const State&) { return true; };
    h.jump = F;
    h.flow.G = [](const State& x, double) -> State { return State::Zero(x.size()); };
    h.flow.dim = F.dim;
    return h;
}

HybridSystem flow_only(const ContinuousSystem& G) {
    HybridSystem h;
    h.in_C = [](const State&) { return true; };
    h.in_D = [](const State&) { return false; };
    h.flow = G;
    h.jump.F = [](const State& x, long) -> State { return x; };
    h.jump.dim = G.dim;
    return h;
}

State vec(std::initializer_list<double> v) {
    State x(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double e : v) x[i++] = e;
    return x;
}

void base(Instance& in, const ExperimentConfig& cfg, const std::string& id, InstanceKind kind) {
    in.id = id;
    in.kind = kind;
    in.seed = cfg.seed;
    in.decay_bound_scale = cfg.decay_bound_scale;
}

double param(const json& p, const char* key) {
    const double v = p.at(key).get<double>();
    if (!std::isfinite(v)) throw ConfigError(std::string("params.") + key + " must be finite");
    return v;
}

// --- examples --------------------------------------------------------------

Instance frozen_halving(const ExperimentConfig& cfg, const json& p) {
    Instance in;
    base(in, cfg, "frozen-halving", InstanceKind::DiscretePE);
    const double a = param(p, "factor");
    if (!(std::abs(a) < 1.0)) throw ConfigError("params.factor must satisfy |factor| < 1");

    DiscreteSystem F0;
    F0.F = [a](const State& x, long) -> State { return a * x; };
    F0.mu_F = [a](double s) { return std::abs(a) * s; };
    F0.dim = 1;
    const DiscretePESignal sig = discrete_signal(cfg, mod2_signal());
    in.F = build_frozen_system(F0, sig);

    in.pe.V = square_norm();
    in.pe.theta = linear_gain(1.0 - a * a);
    in.pe.p = sig;
    in.pe.alpha1 = in.pe.alpha2 = [](double s) { return s * s; };

    in.system = jump_only(*in.F);
    GridSpec g;
    g.box_min = {-10.0};
    g.box_max = {10.0};
    g.points = {201};
    g.k_max = 100;
    in.grid = grid_or(cfg, g);
    in.tolerance = cfg.tolerance.value_or(1e-9);

    SimulationSpec s;
    s.policy.kind = "jump-priority";
    s.initial_states = {vec({1.0}), vec({-3.0})};
    s.budget.flow_time = 0.0;
    s.budget.jumps = 20;
    in.simulation = simulation_or(cfg, s);
    return in;
}

Instance frozen_convex_linear(const ExperimentConfig& cfg, const json& p) {
    Instance in;
    base(in, cfg, "frozen-convex-linear", InstanceKind::DiscretePE);
    std::vector<std::vector<double>> rows;
    try {
        rows = p.at("A").get<std::vector<std::vector<double>>>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("params.A: ") + e.what());
    }
    const auto n = static_cast<Eigen::Index>(rows.size());
    if (n == 0) throw ConfigError("params.A must be a nonempty square matrix");
    Eigen::MatrixXd A(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (static_cast<Eigen::Index>(rows[i].size()) != n) throw ConfigError("params.A must be square");
        for (Eigen::Index j = 0; j < n; ++j) A(i, j) = rows[i][j];
    }
    if (!(A.eigenvalues().cwiseAbs().maxCoeff() < 1.0)) throw ConfigError("params.A must be Schur stable");
    const long period = p.at("period").get<long>();
    const long on = p.at("on").get<long>();
    if (period < 1 || on < 1 || on > period) throw ConfigError("params: need 1 <= on <= period");

    const Eigen::MatrixXd P = discrete_lyapunov(A);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P);
    const double lmin = es.eigenvalues().minCoeff();
    const double lmax = es.eigenvalues().maxCoeff();
    const double anorm = A.operatorNorm();

    DiscreteSystem F0;
    F0.F = [A](const State& x, long) -> State { return A * x; };
    F0.mu_F = [anorm](double s) { return anorm * s; };
    F0.dim = static_cast<int>(n);
    const DiscretePESignal duty(
        [period, on](long k) { return ((k % period) + period) % period < on ? 1.0 : 0.0; },
        static_cast<int>(period - 1), static_cast<double>(on), 1.0);
    const DiscretePESignal sig = discrete_signal(cfg, duty);
    in.F = build_frozen_system(F0, sig);

    // V(Ax) - V(x) = -|x|^2 <= -V(x) / lmax; convexity carries it to the frozen map.
    in.pe.V = quadratic(P);
    in.pe.theta = linear_gain(1.0 / lmax);
    in.pe.p = sig;
    in.pe.alpha1 = [lmin](double s) { return lmin * s * s; };
    in.pe.alpha2 = [lmax](double s) { return lmax * s * s; };

    in.system = jump_only(*in.F);
    GridSpec g;
    g.box_min = std::vector<double>(static_cast<std::size_t>(n), -3.0);
    g.box_max = std::vector<double>(static_cast<std::size_t>(n), 3.0);
    g.points = std::vector<int>(static_cast<std::size_t>(n), 21);
    g.k_max = 30;
    in.grid = grid_or(cfg, g);
    in.tolerance = cfg.tolerance.value_or(1e-9);

    SimulationSpec s;
    s.policy.kind = "jump-priority";
    s.initial_states = {State::Ones(n), -2.0 * State::Ones(n)};
    s.budget.flow_time = 0.0;
    s.budget.jumps = 30;
    in.simulation = simulation_or(cfg, s);
    return in;
}

Instance sin2_flow(const ExperimentConfig& cfg, const json& p) {
    Instance in;
    base(in, cfg, "sin2-flow", InstanceKind::ContinuousPE);
    const double gain = param(p, "gain");
    if (!(gain >= 0.5)) throw ConfigError("params.gain must be >= 0.5");
    const ContinuousPESignal q = continuous_signal(cfg);

    ContinuousSystem G;
    G.G = [q, gain](const State& x, double t) -> State { return -gain * q(t) * x; };
    G.mu_G = [gain, qb = q.upper_bound()](double s) { return gain * qb * s; };
    G.dim = 1;
    in.G = G;

    in.pe.V = square_norm();
    in.pe.theta = linear_gain(1.0);
    in.pe.q = q;
    in.pe.alpha1 = in.pe.alpha2 = [](double s) { return s * s; };

    in.system = flow_only(G);
    GridSpec g;
    g.box_min = {-5.0};
    g.box_max = {5.0};
    g.points = {21};
    g.t_max = 4.0 * kPi;
    g.t_step = kPi / 16.0;
    in.grid = grid_or(cfg, g);
    in.pe.time_horizon = std::max(64.0, in.grid.t_max + 2.0 * q.tau());
    in.tolerance = cfg.tolerance.value_or(1e-4);

    SimulationSpec s;
    s.policy.kind = "jump-priority";
    s.initial_states = {vec({1.0}), vec({-2.0})};
    s.budget.flow_time = 10.0;
    s.budget.step = 1e-2;
    in.simulation = simulation_or(cfg, s);
    return in;
}

Instance hp_sin2(const ExperimentConfig& cfg, const json&) {
    Instance in;
    base(in, cfg, "hp-sin2", InstanceKind::HybridPE);
    const DiscretePESignal sig = discrete_signal(cfg, mod2_signal());
    const ContinuousPESignal q = continuous_signal(cfg);

    DiscreteSystem zero;
    zero.F = [](const State& x, long) -> State { return State::Zero(x.size()); };
    zero.mu_F = [](double) { return 0.0; };
    zero.dim = 1;
    in.F = build_frozen_system(zero, sig);

    ContinuousSystem G;
    G.G = [q](const State& x, double t) -> State { return -q(t) * x; };
    G.mu_G = [qb = q.upper_bound()](double s) { return qb * s; };
    G.dim = 1;
    in.G = G;

    in.hybrid.V = square_norm();
    in.hybrid.gamma = [](double s) { return 0.5 * s; };
    in.hybrid.p = sig;
    in.hybrid.q = q;

    in.system.in_C = [](const State&) { return true; };
    in.system.in_D = [](const State&) { return true; };
    in.system.flow = G;
    in.system.jump = *in.F;

    GridSpec g;
    g.box_min = {-2.0};
    g.box_max = {2.0};
    g.points = {41};
    g.t_max = 2.0 * kPi;
    g.t_step = kPi / 8.0;
    g.k_max = 3;
    in.grid = grid_or(cfg, g);
    in.tolerance = cfg.tolerance.value_or(1e-6);

    SimulationSpec s;
    s.policy.kind = "schedule";
    s.policy.period = kPi / 4.0;
    s.policy.count = 9;
    s.random_initial = 20;
    s.budget.flow_time = 2.5 * kPi;
    in.simulation = simulation_or(cfg, s);
    in.hybrid.time_horizon = std::max(64.0, in.simulation.t0 + in.simulation.budget.flow_time + 2.0 * q.tau());
    return in;
}

Instance matrosov_instance(const ExperimentConfig& cfg, const json& p, MatrosovMode mode, const std::string& id) {
    Instance in;
    base(in, cfg, id, InstanceKind::Matrosov);
    if (cfg.mode && matrosov_mode_from_string(*cfg.mode) != mode) {
        throw ConfigError("config.mode '" + *cfg.mode + "' does not match example '" + id + "'");
    }
    const double scale = param(p, "n1_scale");
    if (!(scale >= 0.0)) throw ConfigError("params.n1_scale must be >= 0");
    in.mode = mode;
    switch (mode) {
        case MatrosovMode::Discrete: in.matrosov = sstar_discrete(scale); break;
        case MatrosovMode::Continuous: in.matrosov = sstar_continuous(scale); break;
        case MatrosovMode::Hybrid: in.matrosov = sstar_hybrid(scale); break;
    }
    if (cfg.pe_discrete && in.matrosov.p) in.matrosov.p = DiscretePESignal::from_json(*cfg.pe_discrete);
    if (cfg.pe_continuous && in.matrosov.q) in.matrosov.q = ContinuousPESignal::from_json(*cfg.pe_continuous);

    GridSpec g;
    g.box_min = {-5.0};
    g.box_max = {5.0};
    g.points = {41};
    SimulationSpec s;
    s.initial_states = {vec({1.0}), vec({-1.5})};
    switch (mode) {
        case MatrosovMode::Discrete:
            g.k_max = 50;
            in.system = jump_only(*in.matrosov.F);
            s.policy.kind = "jump-priority";
            s.budget.flow_time = 0.0;
            s.budget.jumps = 20;
            break;
        case MatrosovMode::Continuous:
            g.t_max = 2.0 * kPi;
            g.t_step = kPi / 16.0;
            in.system = flow_only(*in.matrosov.G);
            s.policy.kind = "jump-priority";
            s.budget.flow_time = 8.0;
            s.budget.step = 1e-2;
            break;
        case MatrosovMode::Hybrid:
            g.t_max = 2.0 * kPi;
            g.t_step = kPi / 8.0;
            g.k_max = 7;
            in.system.in_C = in.matrosov.in_C;
            in.system.in_D = in.matrosov.in_D;
            in.system.flow = *in.matrosov.G;
            in.system.jump = *in.matrosov.F;
            s.policy.kind = "flow-priority";
            s.policy.flow_time = 1.0;
            s.budget.flow_time = 8.0;
            s.budget.jumps = 20;
            s.budget.step = 1e-2;
            break;
    }
    in.grid = grid_or(cfg, g);
    in.matrosov.time_horizon = std::max(64.0, in.grid.t_max + 8.0);
    in.matrosov.pe_horizon = std::max<long>(512, in.grid.k_max + 8);
    in.tolerance = cfg.tolerance.value_or(mode == MatrosovMode::Discrete ? 1e-6 : 1e-4);
    in.simulation = simulation_or(cfg, s);
    return in;
}

}  // namespace

std::string to_string(InstanceKind k) {
    switch (k) {
        case InstanceKind::DiscretePE: return "discrete-pe";
        case InstanceKind::ContinuousPE: return "continuous-pe";
        case InstanceKind::HybridPE: return "hybrid-pe";
        case InstanceKind::Matrosov: return "matrosov";
        case InstanceKind::SystemOnly: return "system";
    }
    return "unknown";
}

std::vector<State> Instance::initial_states() const {
    std::vector<State> out = simulation.initial_states;
    if (simulation.random_initial > 0) {
        const int n = system.flow.dim > 0 ? system.flow.dim : (system.jump.dim > 0 ? system.jump.dim : 1);
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(-simulation.initial_radius, simulation.initial_radius);
        for (std::size_t i = 0; i < simulation.random_initial; ++i) {
            State x(n);
            for (int j = 0; j < n; ++j) x[j] = u(rng);
            out.push_back(x);
        }
    }
    return out;
}

const std::vector<Example>& registry() {
    static const std::vector<Example> r = {
        {"frozen-halving", "frozen F(x)=x/2 with p(k)=k mod 2, V=x^2, discrete PE strictification",
         InstanceKind::DiscretePE, {{"factor", 0.5}}, frozen_halving},
        {"frozen-convex-linear", "frozen linear map with quadratic V from the Lyapunov equation and a duty-cycle p",
         InstanceKind::DiscretePE, {{"A", {{0.5, 0.2}, {0.0, 0.6}}}, {"period", 3}, {"on", 1}}, frozen_convex_linear},
        {"sin2-flow", "x' = -sin^2(t) x with V=x^2, continuous PE strictification", InstanceKind::ContinuousPE,
         {{"gain", 1.0}}, sin2_flow},
        {"hp-sin2", "hybrid H_p: frozen zero jump map, sin^2 flow, merged V#", InstanceKind::HybridPE,
         json::object(), hp_sin2},
        {"matrosov-sstar", "Matrosov pipeline on the synthetic instance S* (discrete)", InstanceKind::Matrosov,
         {{"n1_scale", 1.0}},
         [](const ExperimentConfig& c, const json& p) {
             return matrosov_instance(c, p, MatrosovMode::Discrete, "matrosov-sstar");
         }},
        {"matrosov-sstar-continuous", "Matrosov pipeline on the continuous analog of S*", InstanceKind::Matrosov,
         {{"n1_scale", 1.0}},
         [](const ExperimentConfig& c, const json& p) {
             return matrosov_instance(c, p, MatrosovMode::Continuous, "matrosov-sstar-continuous");
         }},
        {"matrosov-sstar-hybrid", "Matrosov pipeline on the hybrid S* with C = {x >= 0}, D = {x <= 0}",
         InstanceKind::Matrosov, {{"n1_scale", 1.0}},
         [](const ExperimentConfig& c, const json& p) {
             return matrosov_instance(c, p, MatrosovMode::Hybrid, "matrosov-sstar-hybrid");
         }},
    };
    return r;
}

const Example& find_example(const std::string& id) {
    for (const auto& e : registry()) {
        if (e.id == id) return e;
    }
    throw ConfigError("unknown example '" + id + "'");
}

Instance resolve(const ExperimentConfig& cfg) {
    if (cfg.system) {
        Instance in;
        in.id = "system";
        in.kind = InstanceKind::SystemOnly;
        in.seed = cfg.seed;
        in.system = cfg.system->build();
        SimulationSpec s;
        s.initial_states = {State::Ones(static_cast<Eigen::Index>(cfg.system->flow_matrix.size()))};
        in.simulation = simulation_or(cfg, s);
        for (const auto& x : in.simulation.initial_states) {
            if (x.size() != static_cast<Eigen::Index>(cfg.system->flow_matrix.size())) {
                throw ConfigError("simulation.initial_states: dimension does not match the system");
            }
        }
        return in;
    }
    const Example& ex = find_example(*cfg.example);
    json params = ex.default_params;
    for (const auto& [key, value] : cfg.params.items()) {
        if (!params.contains(key)) throw ConfigError("params: unknown key '" + key + "' for " + ex.id);
        params[key] = value;
    }
    try {
        return ex.build(cfg, params);
    } catch (const json::exception& e) {
        throw ConfigError("params for " + ex.id + ": " + e.what());
    }
}

ExperimentConfig default_config(const std::string& id) {
    find_example(id);
    ExperimentConfig c;
    c.example = id;
    return c;
}

Eigen::MatrixXd discrete_lyapunov(const Eigen::MatrixXd& A) {
    const Eigen::Index n = A.rows();
    // vec(A' P A) = (A' kron A') vec(P), column-major.
    Eigen::MatrixXd K(n * n, n * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) K.block(i * n, j * n, n, n) = A(j, i) * A.transpose();
    }
    K -= Eigen::MatrixXd::Identity(n * n, n * n);
    const Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(n, n);
    const Eigen::VectorXd q = -Eigen::Map<const Eigen::VectorXd>(Q.data(), n * n);
    const Eigen::VectorXd v = K.fullPivLu().solve(q);
    Eigen::MatrixXd P = Eigen::Map<const Eigen::MatrixXd>(v.data(), n, n);
    return 0.5 * (P + P.transpose());
}

}  // namespace strictlyap::cli
