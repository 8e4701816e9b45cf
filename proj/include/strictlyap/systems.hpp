#pragma once

#include <functional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "strictlyap/funcspace.hpp"
#include "strictlyap/pe.hpp"

namespace strictlyap {

/// x_{k+1} = F(x_k, k) with a declared growth envelope |F(x,k)| <= mu_F(|x|).
struct DiscreteSystem {
    std::function<State(const State&, long)> F;
    Gain mu_F;  // may be empty
    int dim = 1;

    State operator()(const State& x, long k) const { return F(x, k); }
};

/// dx/dt = G(x, t), assumed forward complete and locally Lipschitz.
struct ContinuousSystem {
    std::function<State(const State&, double)> G;
    Gain mu_G;  // may be empty
    bool lipschitz_declared = true;
    int dim = 1;

    State operator()(const State& x, double t) const { return G(x, t); }
};

struct HybridSystem {
    std::function<bool(const State&)> in_C;
    std::function<bool(const State&)> in_D;
    ContinuousSystem flow;
    DiscreteSystem jump;
};

struct SampledPath {
    std::vector<double> t;
    std::vector<State> x;
};

/// Classical RK4 with fixed step h; the last step is shortened to hit t1.
SampledPath integrate_flow(const ContinuousSystem& sys, const State& x0, double t0, double t1, double h);

State step_jump(const DiscreteSystem& sys, const State& x, long k);

/// F_p(x,k) = [1 - p(k+1)] x + p(k+1) F(x,k).
DiscreteSystem build_frozen_system(const DiscreteSystem& base, const DiscretePESignal& p, long horizon = 4096);

struct JumpPriority {};
struct FlowPriority {
    double T_flow = 1.0;
};
struct Schedule {
    std::vector<double> jump_times;
};
using Policy = std::variant<JumpPriority, FlowPriority, Schedule>;

std::string policy_name(const Policy& policy);

struct Budget {
    double flow_time = 10.0;
    long jumps = 1000;
    long consecutive_jumps = 10000;
    double step = 1e-3;
};

enum class ArcStatus { Budget, Dead, Blowup };

std::string to_string(ArcStatus s);

struct ArcSegment {
    long k = 0;
    double t_start = 0.0;
    double t_end = 0.0;
    std::vector<double> t;
    std::vector<State> x;
};

struct HybridArc {
    std::vector<ArcSegment> segments;
    ArcStatus status = ArcStatus::Budget;
    std::string message;

    /// Segment ordering, consecutive indices, matching endpoints.
    Verdict validate() const;

    std::size_t total_points() const;
    const State& final_state() const;
    double final_time() const;
    long final_jump() const;
};

/// Throws ZenoError once more than budget.consecutive_jumps jumps happen without flow.
HybridArc simulate_hybrid(const HybridSystem& sys, const State& x0, double t0, const Policy& policy,
                          const Budget& budget);

/// Columns t, k, x_1..x_n, segment_id.
std::string arc_to_csv(const HybridArc& arc);
nlohmann::json arc_sidecar(const HybridArc& arc, const Policy& policy);

}  // namespace strictlyap
