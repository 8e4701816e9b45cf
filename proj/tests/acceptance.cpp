// Acceptance criteria. Usage: acceptance [N ...] --lyapctl PATH --configs DIR --work DIR
// Prints one line per criterion; exit status is nonzero if any selected criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "strictlyap/certify.hpp"
#include "strictlyap/funcspace.hpp"
#include "strictlyap/matrosov.hpp"
#include "strictlyap/pe.hpp"
#include "strictlyap/strictify.hpp"
#include "strictlyap/systems.hpp"

using namespace strictlyap;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

// Pinned tolerances.
constexpr double kTelescopeTol = 1e-12;
constexpr double kRpiTol = 1e-6;
constexpr double kKappaTol = 1e-6;
constexpr double kGammaTol = 1e-5;
constexpr double kIdentityTol = 1e-6;
constexpr double kDiscreteDecayTol = 1e-9;
constexpr double kSpotTol = 1e-12;
constexpr double kFdTol = 1e-4;
constexpr double kVctsSpotTol = 1e-5;
constexpr double kRateSlack = 0.05;
constexpr double kMatrosovDisTol = 1e-6;
constexpr double kMatrosovCtsTol = 1e-4;
constexpr double kClosedFormTol = 1e-9;

struct Args {
    std::string lyapctl;
    std::string configs;
    std::string work = "acceptance_work";
};
Args g_args;

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) pass = false;
        if (!ok) detail << " [fail: " << what << "]";
    }
};

State scalar(double v) {
    State x(1);
    x[0] = v;
    return x;
}

ScalarField square() {
    ScalarField V;
    V.eval = [](const State& x, double, long) { return x.squaredNorm(); };
    V.grad_x = [](const State& x, double, long) -> State { return 2.0 * x; };
    V.dt = [](const State&, double, long) { return 0.0; };
    return V;
}

DiscretePESignal mod2() {
    return DiscretePESignal([](long k) { return static_cast<double>(((k % 2) + 2) % 2); }, 1, 1.0, 1.0);
}

ComparisonFunction linear(double c) {
    return {GridFunction::sample(default_grid(), [c](double s) { return c * s; }, Extension::Linear), ClassTag::Kinf,
            0.0};
}

int run_cli(const std::string& args, const std::string& stdout_path = "/dev/null") {
    const std::string cmd = g_args.lyapctl + " " + args + " > " + stdout_path + " 2>/dev/null";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Twenty random PE sequences with windows l in {1..5}, values in [0.05, 1].
struct RandomSequence {
    int l;
    std::vector<double> values;  // index j + l holds p(j), j >= -l
    DiscretePESignal signal;
};

std::vector<RandomSequence> random_sequences() {
    std::mt19937_64 rng(20240611);
    std::uniform_int_distribution<int> wl(1, 5);
    std::uniform_real_distribution<double> val(0.05, 1.0);
    std::vector<RandomSequence> out;
    for (int i = 0; i < 20; ++i) {
        const int l = wl(rng);
        std::vector<double> v(260 + l);
        for (auto& e : v) e = val(rng);
        out.push_back({l, v, DiscretePESignal::from_table(v, -l, l, 0.05 * (l + 1), false)});
    }
    return out;
}

// --- criteria ----------------------------------------------------------------

void criterion_1(Outcome& o) {
    double worst = 0.0;
    for (const auto& s : random_sequences()) {
        auto p = [&](long j) { return s.values[static_cast<std::size_t>(j + s.l)]; };
        for (long k = s.l; k <= 200; ++k) {
            double window = 0.0;
            for (long j = k - s.l; j <= k; ++j) window += p(j);
            const double lhs = sum_S(s.signal, s.l, k + 1) - sum_S(s.signal, s.l, k);
            const double rhs = -window + (s.l + 1) * p(k + 1);
            worst = std::max(worst, std::abs(lhs - rhs));
        }
    }
    o.detail << "max |S(k+1)-S(k)-rhs| = " << worst;
    o.require(worst <= kTelescopeTol, "telescoping residual");
}

void criterion_2(Outcome& o) {
    double s_ratio = 0.0;
    for (const auto& s : random_sequences()) {
        for (long k = 0; k <= 200; ++k) {
            const double bound = s.signal.upper_bound() * (s.l + 1) * (s.l + 1);
            s_ratio = std::max(s_ratio, sum_S(s.signal, s.l, k) / bound);
        }
    }
    o.require(s_ratio <= 1.0, "S(k) <= p_bar (l+1)^2");

    const ContinuousPESignal one([](double) { return 1.0; }, 2.0, 2.0, 1.0);
    const ContinuousPESignal sin2 = ContinuousPESignal::sin2();
    double r_ratio = 0.0;
    for (const auto* q : {&one, &sin2}) {
        const double bound = q->tau() * q->tau() * q->upper_bound() / 2.0;
        for (int i = 0; i <= 200; ++i) {
            const double t = 4.0 * q->tau() * i / 200.0;
            r_ratio = std::max(r_ratio, int_R(*q, q->tau(), t, q->tau() / 256.0) / bound);
        }
    }
    o.require(r_ratio <= 1.0 + 1e-12, "R(t) <= tau^2 q_bar / 2");
    const double rpi = int_R(sin2, kPi, kPi, kPi / 256.0);
    o.detail << "max S/bound = " << s_ratio << ", max R/bound = " << r_ratio << ", R(pi) - pi^2/4 = "
             << rpi - kPi * kPi / 4.0;
    o.require(std::abs(rpi - kPi * kPi / 4.0) <= kRpiTol, "R(pi) = pi^2/4");
}

void criterion_3(Outcome& o) {
    const auto t = build_mu_kappa_chi(linear(1.0).f);
    const Gain gamma = build_gamma(t.kappa, t.chi);
    const double k05 = t.kappa.f(0.5);
    const double k1 = t.kappa.f(1.0);
    const double g = gamma(10.0 / 3.0);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        const double r = std::pow(10.0, -2.0 + 4.0 * i / 49.0);
        worst = std::max(worst, std::abs(gamma(t.kappa.f(r)) - t.chi.f(r / 2.0)));
    }
    o.detail << "kappa(0.5) = " << k05 << ", kappa(1) = " << k1 << ", gamma(10/3) = " << g
             << ", identity error = " << worst;
    o.require(std::abs(k05 - 4.0 / 3.0) <= kKappaTol, "kappa(0.5)");
    o.require(std::abs(k1 - 10.0 / 3.0) <= kKappaTol, "kappa(1)");
    o.require(std::abs(g - 2.0) <= kGammaTol, "gamma(10/3)");
    o.require(worst <= kIdentityTol, "gamma(kappa(r)) = chi(r/2)");
}

void criterion_4(Outcome& o) {
    DiscreteSystem half;
    half.F = [](const State& x, long) -> State { return 0.5 * x; };
    half.mu_F = [](double s) { return 0.5 * s; };
    half.dim = 1;
    const DiscretePESignal p = mod2();
    const DiscreteSystem F = build_frozen_system(half, p);

    PEStrictificationConfig cfg;
    cfg.V = square();
    cfg.theta = linear(0.75);
    cfg.p = p;
    const auto d = strictify_discrete_pe(cfg);

    GridSpec g;
    g.box_min = {-10.0};
    g.box_max = {10.0};
    g.points = {201};
    g.k_max = 100;
    const auto samples = enumerate_samples(g);
    ScalarField bound;
    bound.eval = [](const State& x, double, long) { return -(1.0 / 8.0) * 0.75 * x.squaredNorm(); };
    const auto rec = check_discrete_decay(d.U, F, bound, samples, kDiscreteDecayTol);

    const State one = scalar(1.0);
    double spot_worst = 0.0;
    double spot = 0.0;
    for (long k = 0; k <= 100; k += 2) {
        const double du = d.U(step_jump(F, one, k), 0.0, k + 1) - d.U(one, 0.0, k);
        if (k == 0) spot = du;
        spot_worst = std::max(spot_worst, std::abs(du - (-0.7734375)));
    }
    o.detail << "worst margin = " << rec.worst_margin << " over " << rec.samples_checked
             << " samples; dU(1, k even) = " << spot << " (target -0.7734375)";
    o.require(rec.pass, "decay inequality");
    o.require(spot_worst <= kSpotTol, "spot value dU(1, k even)");
}

void criterion_5(Outcome& o) {
    const ContinuousPESignal q = ContinuousPESignal::sin2();
    ContinuousSystem G;
    G.G = [q](const State& x, double t) -> State { return -q(t) * x; };
    G.mu_G = [](double s) { return s; };
    G.dim = 1;
    PEStrictificationConfig cfg;
    cfg.V = square();
    cfg.theta = linear(1.0);
    cfg.q = q;
    const auto c = strictify_continuous_pe(cfg);

    ScalarField fd = c.V_cts;  // finite differences only
    fd.grad_x = nullptr;
    fd.dt = nullptr;
    ScalarField bound;
    const ScalarField V = c.V_cts;
    bound.eval = [V](const State& x, double t, long k) { return -0.5 * V(x, t, k); };

    GridSpec g;
    g.box_min = {-5.0};
    g.box_max = {5.0};
    g.points = {41};
    g.t_max = 4.0 * kPi;
    g.t_step = kPi / 32.0;
    const auto rec = check_continuous_decay(fd, G, bound, enumerate_samples(g), kFdTol);
    const double spot = c.V_cts(scalar(1.0), kPi, 0);
    o.detail << "FD worst margin = " << rec.worst_margin;
    if (rec.witness) o.detail << " at " << sample_to_json(*rec.witness).dump();
    o.detail << "; V_cts(1, pi) = " << spot << " (target " << 1.0 + kPi / 4.0 << ")";
    o.require(rec.pass, "D V_cts <= -0.5 V_cts");
    o.require(std::abs(spot - (1.0 + kPi / 4.0)) <= kVctsSpotTol, "V_cts(1, pi)");
}

void criterion_6(Outcome& o) {
    const DiscretePESignal p = mod2();
    const ContinuousPESignal q = ContinuousPESignal::sin2();
    DiscreteSystem zero;
    zero.F = [](const State& x, long) -> State { return State::Zero(x.size()); };
    zero.dim = 1;
    HybridSystem H;
    H.in_C = [](const State&) { return true; };
    H.in_D = [](const State&) { return true; };
    H.jump = build_frozen_system(zero, p);
    H.flow.G = [q](const State& x, double t) -> State { return -q(t) * x; };
    H.flow.dim = 1;

    HybridStrictificationConfig cfg;
    cfg.V = square();
    cfg.gamma = [](double s) { return 0.5 * s; };
    cfg.p = p;
    cfg.q = q;
    const auto h = strictify_hybrid_pe(cfg);

    const double threshold = std::min(h.flow_rate, std::log(8.0 / 7.0)) - kRateSlack;
    Schedule sched;
    for (int i = 1; i <= 9; ++i) sched.jump_times.push_back(i * kPi / 4.0);
    Budget b;
    b.flow_time = 2.5 * kPi;

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    bool mono = true, jumps = true, rate = true;
    double min_rate = std::numeric_limits<double>::infinity();
    std::size_t min_segments = 1000;
    for (int a = 0; a < 20; ++a) {
        const HybridArc arc = simulate_hybrid(H, scalar(u(rng)), 0.0, sched, b);
        min_segments = std::min(min_segments, arc.segments.size());
        const auto rep = check_arc_decay(h.V_sharp, arc, h.jump_rate, 0.0, 0.0);
        mono = mono && rep.find("arc_monotone")->pass;
        jumps = jumps && rep.find("arc_jump")->pass;
        for (const auto& seg : arc.segments) {
            std::vector<double> ts, vs;
            for (std::size_t j = 0; j < seg.t.size(); ++j) {
                const double v = h.V_sharp(seg.x[j], seg.t[j], seg.k);
                if (v > 1e-12) {
                    ts.push_back(seg.t[j]);
                    vs.push_back(v);
                }
            }
            if (ts.size() < 3) continue;
            const double r = fit_exponential_rate(ts, vs);
            min_rate = std::min(min_rate, r);
            rate = rate && r >= threshold;
        }
    }
    o.detail << "min fitted flow rate = " << min_rate << " (threshold " << threshold << "), jump rate "
             << h.jump_rate << ", segments per arc >= " << min_segments;
    o.require(min_segments == 10, "10 segments per arc");
    o.require(mono, "V# strictly decreasing along arcs");
    o.require(jumps, "per-jump contraction");
    o.require(rate, "fitted flow rate");
}

CertificationReport only(const CertificationReport& rep, const std::string& prefix) {
    CertificationReport out;
    for (const auto& r : rep.records) {
        if (r.name.rfind(prefix, 0) == 0) out.add(r);
    }
    return out;
}

void criterion_7(Outcome& o) {
    GridSpec g;
    g.box_min = {-5.0};
    g.box_max = {5.0};
    g.points = {41};
    g.k_max = 50;
    const auto samples = enumerate_samples(g);
    PipelineOptions opts;
    opts.tolerance_dis = kMatrosovDisTol;
    const auto r = run_pipeline(sstar_discrete(), MatrosovMode::Discrete, samples, opts);
    for (const char* name : {"v5_decay_dis", "v6_decay_dis", "k3_bound_dis", "v8_decay_dis", "final_decay_dis"}) {
        const auto* rec = r.report.find(name);
        o.require(rec && rec->pass, name);
    }
    o.require(only(r.report, "assumption").pass(), "assumption");
    o.require(r.pass(), "every record");

    const auto bad = check_assumption(sstar_discrete(0.5), MatrosovMode::Discrete, samples);
    const auto* ex = bad.find("assumption_excitation_dis");
    o.require(!bad.pass() && ex && !ex->pass && ex->witness.has_value(), "sabotaged N1 rejected with witness");
    o.detail << r.report.records.size() << " records, final margin "
             << r.report.find("final_decay_dis")->worst_margin;
    if (ex && ex->witness) o.detail << "; sabotage witness " << sample_to_json(*ex->witness).dump();
}

void criterion_8(Outcome& o) {
    GridSpec g;
    g.box_min = {-5.0};
    g.box_max = {5.0};
    g.points = {41};
    g.t_max = 2.0 * kPi;
    g.t_step = kPi / 16.0;
    PipelineOptions opts;
    opts.tolerance_cts = kMatrosovCtsTol;
    const auto r = run_pipeline(sstar_continuous(), MatrosovMode::Continuous, enumerate_samples(g), opts);
    const auto* fin = r.report.find("final_decay_cts");
    o.require(fin && fin->pass, "final decay");
    o.require(r.pass(), "every record");
    o.detail << r.report.records.size() << " records, final margin " << (fin ? fin->worst_margin : NAN);
}

void criterion_9(Outcome& o) {
    GridSpec g;
    g.box_min = {-5.0};
    g.box_max = {5.0};
    g.points = {41};
    g.t_max = 2.0 * kPi;
    g.t_step = kPi / 8.0;
    g.k_max = 7;
    PipelineOptions opts;
    opts.tolerance_dis = kMatrosovDisTol;
    opts.tolerance_cts = kMatrosovCtsTol;
    const auto r = run_pipeline(sstar_hybrid(), MatrosovMode::Hybrid, enumerate_samples(g), opts);
    o.require(r.certificates.size() == 2, "two certificates");
    if (r.certificates.size() == 2) {
        const auto& a = r.certificates[0];
        const auto& b = r.certificates[1];
        o.require(a.report.pass(), "discrete certificate");
        o.require(b.report.pass(), "continuous certificate");
        auto same = [](const GridFunction& x, const GridFunction& y) {
            return x.size() == y.size() && std::equal(x.nodes().begin(), x.nodes().end(), y.nodes().begin()) &&
                   std::equal(x.values().begin(), x.values().end(), y.values().begin());
        };
        o.require(same(a.k3, b.k3) && same(a.k4, b.k4) && same(a.k5, b.k5), "shared k3, k4, k5 grids");
        o.detail << "discrete " << (a.report.pass() ? "pass" : "fail") << ", continuous "
                 << (b.report.pass() ? "pass" : "fail") << ", gains shared bitwise";
    }
    o.require(r.pass(), "every record");
}

void criterion_10(Outcome& o) {
    HybridSystem flow;
    flow.in_C = [](const State&) { return true; };
    flow.in_D = [](const State&) { return false; };
    flow.flow.G = [](const State& x, double) -> State { return -x; };
    flow.flow.dim = 1;
    auto terminal_error = [&](double h) {
        Budget b;
        b.flow_time = 1.0;
        b.step = h;
        const auto arc = simulate_hybrid(flow, scalar(1.0), 0.0, JumpPriority{}, b);
        return std::abs(arc.final_state()[0] - std::exp(-1.0));
    };
    const double ratio = terminal_error(0.1) / terminal_error(0.05);
    o.require(ratio >= 12.0 && ratio <= 20.0, "RK4 order ratio");

    Budget fb;
    fb.flow_time = 3.0;
    const auto arc = simulate_hybrid(flow, scalar(2.0), 0.0, JumpPriority{}, fb);
    double flow_err = 0.0;
    for (std::size_t j = 0; j < arc.segments[0].t.size(); ++j) {
        const double t = arc.segments[0].t[j];
        flow_err = std::max(flow_err, std::abs(arc.segments[0].x[j][0] - 2.0 * std::exp(-t)));
    }
    o.require(arc.segments.size() == 1 && flow_err <= kClosedFormTol, "pure-flow closed form");

    HybridSystem jump;
    jump.in_C = [](const State&) { return false; };
    jump.in_D = [](const State&) { return true; };
    jump.jump.F = [](const State& x, long) -> State { return 0.5 * x; };
    jump.jump.dim = 1;
    Budget jb;
    jb.jumps = 30;
    const auto jarc = simulate_hybrid(jump, scalar(3.0), 0.0, JumpPriority{}, jb);
    double jump_err = 0.0;
    for (const auto& seg : jarc.segments) {
        jump_err = std::max(jump_err, std::abs(seg.x[0][0] - 3.0 * std::pow(0.5, static_cast<double>(seg.k))));
    }
    o.require(jarc.segments.size() == 31 && jump_err <= kClosedFormTol, "pure-jump closed form");

    const int zeno = run_cli("simulate --config " + g_args.configs + "/zeno.json --out " + g_args.work + "/zeno");
    o.require(zeno == 4, "Zeno guard exit 4");
    o.detail << "RK4 ratio = " << ratio << ", flow error = " << flow_err << ", jump error = " << jump_err
             << ", zeno exit = " << zeno;
}

void criterion_11(Outcome& o) {
    const fs::path work(g_args.work);
    fs::create_directories(work);
    const std::string list_file = (work / "list.txt").string();
    o.require(run_cli("examples list", list_file) == 0, "examples list exits 0");
    std::vector<std::string> ids;
    {
        std::ifstream in(list_file);
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty()) ids.push_back(line.substr(0, line.find('\t')));
        }
    }
    o.require(ids.size() >= 4, "registry has >= 4 entries");
    for (const char* must : {"frozen-halving", "frozen-convex-linear", "hp-sin2", "matrosov-sstar"}) {
        o.require(std::find(ids.begin(), ids.end(), must) != ids.end(), std::string("registry lists ") + must);
    }
    int failing = 0;
    for (const auto& id : ids) {
        const int code = run_cli("examples run " + id + " --out " + (work / "run" / id).string());
        if (code != 0) {
            ++failing;
            o.require(false, "examples run " + id + " exit " + std::to_string(code));
        }
    }
    const int corrupted = run_cli("certify --config " + g_args.configs + "/corrupted.json --out " +
                                  (work / "corrupted").string());
    const int sabotaged = run_cli("certify --config " + g_args.configs + "/frozen_halving_sabotaged.json --out " +
                                  (work / "sabotaged").string());
    o.require(corrupted == 64, "corrupted config exits 64");
    o.require(sabotaged == 3, "sabotaged bound exits 3");

    bool identical = true;
    for (const char* cfg : {"hp_sin2.json", "frozen_halving.json", "matrosov_sstar.json"}) {
        const fs::path a = work / "det_a" / cfg;
        const fs::path b = work / "det_b" / cfg;
        run_cli("certify --config " + g_args.configs + "/" + cfg + " --seed 5 --out " + a.string());
        run_cli("certify --config " + g_args.configs + "/" + cfg + " --seed 5 --jobs 1 --out " + b.string());
        const std::string ra = slurp(a / "report.json");
        identical = identical && !ra.empty() && ra == slurp(b / "report.json");
    }
    o.require(identical, "byte-identical reports");
    o.detail << ids.size() << " examples (" << failing << " failing), corrupted exit " << corrupted
             << ", sabotaged exit " << sabotaged << ", reports identical = " << (identical ? "yes" : "no");
}

struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<void(Outcome&)> fn;
};

const std::vector<Criterion>& criteria() {
    static const std::vector<Criterion> c = {
        {1, "telescoping identity", 1.0, criterion_1},
        {2, "window bounds", 5.0, criterion_2},
        {3, "kappa/gamma construction", 1.0, criterion_3},
        {4, "discrete PE decay", 5.0, criterion_4},
        {5, "continuous strictification", 10.0, criterion_5},
        {6, "hybrid merge", 30.0, criterion_6},
        {7, "matrosov discrete", 60.0, criterion_7},
        {8, "matrosov continuous", 60.0, criterion_8},
        {9, "matrosov hybrid", 120.0, criterion_9},
        {10, "simulator", 1e9, criterion_10},
        {11, "cli contract", 1e9, criterion_11},
    };
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--lyapctl" && i + 1 < argc) {
            g_args.lyapctl = argv[++i];
        } else if (a == "--configs" && i + 1 < argc) {
            g_args.configs = argv[++i];
        } else if (a == "--work" && i + 1 < argc) {
            g_args.work = argv[++i];
        } else {
            selected.push_back(std::stoi(a));
        }
    }
    bool all = true;
    for (const auto& c : criteria()) {
        if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            if ((c.id >= 10) && (g_args.lyapctl.empty() || g_args.configs.empty())) {
                throw std::runtime_error("--lyapctl and --configs are required");
            }
            c.fn(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << " [exception: " << e.what() << "]";
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs > c.limit_s) {
            o.pass = false;
            o.detail << " [fail: runtime over " << c.limit_s << " s]";
        }
        std::printf("criterion %2d %-28s %s  %s (%.2f s)\n", c.id, c.name, o.pass ? "PASS" : "FAIL",
                    o.detail.str().c_str(), secs);
        all = all && o.pass;
    }
    return all ? 0 : 1;
}
