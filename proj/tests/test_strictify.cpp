#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "strictlyap/certify.hpp"
#include "strictlyap/errors.hpp"
#include "strictlyap/strictify.hpp"

using namespace strictlyap;

namespace {

constexpr double kPi = std::numbers::pi;

State s1(double v) {
    State x(1);
    x << v;
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
    return {GridFunction::sample(default_grid(), [c](double s) { return c * s; }), ClassTag::Kinf, 0.0};
}

DiscreteSystem halving() {
    return {[](const State& x, long) -> State { return 0.5 * x; }, [](double s) { return 0.5 * s; }, 1};
}

std::vector<Sample> samples(double r, int n, long k_max, double t_max = 0.0, double t_step = 0.0) {
    GridSpec g;
    g.box_min = {-r};
    g.box_max = {r};
    g.points = {n};
    g.k_max = k_max;
    g.t_max = t_max;
    g.t_step = t_step;
    return enumerate_samples(g);
}

PEStrictificationConfig halving_config() {
    PEStrictificationConfig cfg;
    cfg.V = square();
    cfg.theta = linear(0.75);
    cfg.p = mod2();
    cfg.alpha1 = [](double s) { return s * s; };
    cfg.alpha2 = [](double s) { return s * s; };
    return cfg;
}

}  // namespace

TEST_CASE("discrete strictification closed form") {
    const auto d = strictify_discrete_pe(halving_config());
    CHECK(d.kappa_identity);
    CHECK(d.l == 1);
    CHECK(d.delta == 1.0);
    // U = x^2 (1 + 3 S(k) / 32), S(even) = 1, S(odd) = 2
    CHECK(d.U(s1(1.0), 0.0, 0) == doctest::Approx(1.09375).epsilon(1e-12));
    CHECK(d.U(s1(1.0), 0.0, 1) == doctest::Approx(1.1875).epsilon(1e-12));
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int i = 0; i < 100; ++i) {
        const double x = u(rng);
        const long k = i;
        const double S = k % 2 == 0 ? 1.0 : 2.0;
        CHECK(d.U(s1(x), 0.0, k) == doctest::Approx(x * x * (1.0 + 3.0 * S / 32.0)).epsilon(1e-12));
        CHECK(d.decay_bound(s1(x), 0.0, k) == doctest::Approx(-0.75 * x * x / 8.0).epsilon(1e-12));
    }
}

TEST_CASE("discrete strictification decays on the frozen system") {
    const auto d = strictify_discrete_pe(halving_config());
    const auto F = build_frozen_system(halving(), mod2());
    const auto ss = samples(10.0, 201, 100);
    CHECK(check_pe_decay_hypothesis(square(), halving(), mod2(), [](double s) { return 0.75 * s; }, ss).pass);
    CHECK(check_discrete_decay(d.U, F, d.decay_bound, ss, 1e-9).pass);
    CHECK(check_uppd(d.U, d.lower_envelope, d.upper_envelope, ss).pass);
    // upper envelope: x^2 + (p_bar (l+1) / 4) 0.75 x^2
    CHECK(d.upper_envelope(2.0) == doctest::Approx(4.0 * (1.0 + 0.375)).epsilon(1e-12));
}

TEST_CASE("discrete strictification with a bounded PD theta") {
    PEStrictificationConfig cfg = halving_config();
    cfg.theta = {GridFunction::sample(default_grid(), [](double s) { return 0.75 * s / (1.0 + s); }), ClassTag::PD,
                 0.0};
    const auto d = strictify_discrete_pe(cfg);
    CHECK_FALSE(d.kappa_identity);
    REQUIRE(d.tables);
    const auto F = build_frozen_system(halving(), mod2());
    const auto ss = samples(5.0, 101, 40);
    CHECK(check_pe_decay_hypothesis(square(), halving(), mod2(), [](double s) { return 0.75 * s / (1.0 + s); }, ss)
              .pass);
    CHECK(check_discrete_decay(d.U, F, d.decay_bound, ss, 1e-9).pass);
    CHECK(check_uppd(d.U, d.lower_envelope, d.upper_envelope, ss).pass);
}

TEST_CASE("discrete strictification rejects weak excitation") {
    PEStrictificationConfig cfg = halving_config();
    cfg.p = DiscretePESignal([](long) { return 0.0; }, 1, 0.0, 0.0);
    CHECK_THROWS_AS(strictify_discrete_pe(cfg), PEError);
    cfg.p = DiscretePESignal([](long k) { return k % 2 == 0 ? 0.0 : 1.0; }, 0, 1.0, 1.0);
    CHECK_THROWS_AS(strictify_discrete_pe(cfg), PEError);
    cfg.p.reset();
    CHECK_THROWS_AS(strictify_discrete_pe(cfg), ConfigError);
}

TEST_CASE("pe_from_exp") {
    const DiscretePESignal zero([](long) { return 0.0; }, 0, 0.0, 0.0);
    const auto p0 = pe_from_exp(zero, 32);
    CHECK(p0.delta() == 0.0);
    CHECK(p0(5) == 0.0);

    const DiscretePESignal ln2([](long) { return std::log(2.0); }, 0, 0.0, std::log(2.0));
    const auto p1 = pe_from_exp(ln2, 32);
    CHECK(p1(3) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(p1.delta() == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(p1.upper_bound() == doctest::Approx(0.5).epsilon(1e-15));

    const DiscretePESignal alt([](long k) { return k % 2 == 0 ? 0.0 : std::log(2.0); }, 1, 0.0, std::log(2.0));
    const auto p2 = pe_from_exp(alt, 32);
    CHECK(p2.window() == 1);
    CHECK(p2.delta() == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(p2(4) == 0.0);

    const DiscretePESignal neg([](long) { return -1.0; }, 0, 0.0, 0.0);
    CHECK_THROWS_AS(pe_from_exp(neg, 4), ParameterError);
}

TEST_CASE("exp_rate_for_dis") {
    CHECK(exp_rate_for_dis(1, 1.0) == doctest::Approx(std::log(8.0 / 7.0)).epsilon(1e-15));
    CHECK(exp_rate_for_dis(3, 2.0) == doctest::Approx(std::log(8.0 / 7.0)).epsilon(1e-15));
    CHECK(exp_rate_for_dis(0, 0.5) == doctest::Approx(std::log(12.0 / 11.5)).epsilon(1e-15));
    CHECK_THROWS_AS(exp_rate_for_dis(1, 0.0), ParameterError);
    CHECK_THROWS_AS(exp_rate_for_dis(1, -1.0), ParameterError);
}

TEST_CASE("continuous strictification") {
    PEStrictificationConfig cfg;
    cfg.V = square();
    cfg.theta = linear(1.0);
    cfg.q = ContinuousPESignal::sin2();
    cfg.time_horizon = 4 * kPi;
    const auto c = strictify_continuous_pe(cfg);
    CHECK(c.tau == doctest::Approx(kPi));
    CHECK(c.advertised_rate == doctest::Approx(0.5));
    CHECK(c.provable_rate == doctest::Approx(0.5 / (1.0 + kPi / 2)));
    CHECK(c.V_cts(s1(1.0), kPi, 0) == doctest::Approx(1.0 + kPi / 4).epsilon(1e-8));
    for (double t = 0.0; t < 4 * kPi; t += 0.37) {
        const double R = kPi * kPi / 4 - kPi / 4 * std::sin(2 * t);
        CHECK(c.V_cts(s1(2.0), t, 0) == doctest::Approx(4.0 * (1.0 + R / kPi)).epsilon(1e-8));
        CHECK(c.V_cts(s1(2.0), t, 0) >= 4.0);
        CHECK(c.V_cts(s1(2.0), t, 0) <= 4.0 * (1.0 + kPi / 2));
    }
    const auto q = ContinuousPESignal::sin2();
    const ContinuousSystem G{[q](const State& x, double t) -> State { return -q(t) * x; }, {}, true, 1};
    const auto ss = samples(5.0, 41, 0, 4 * kPi, kPi / 32);
    CHECK(check_flow_pe_hypothesis(square(), G, q, ss).pass);
    CHECK(check_continuous_decay(c.V_cts, G, c.provable_bound, ss, 1e-4).pass);
    CHECK(check_field_derivatives(c.V_cts, G, ss).pass);
}

TEST_CASE("continuous strictification rejects bad windows") {
    PEStrictificationConfig cfg;
    cfg.V = square();
    cfg.theta = linear(1.0);
    cfg.q = ContinuousPESignal::sin2(kPi / 2, kPi / 2);
    CHECK_THROWS_AS(strictify_continuous_pe(cfg), PEError);
}

TEST_CASE("hybrid strictification with jumps only") {
    const DiscretePESignal ln2([](long) { return std::log(2.0); }, 0, 0.0, std::log(2.0));
    HybridStrictificationConfig cfg;
    cfg.V = square();
    cfg.p = pe_from_exp(ln2, 64);
    cfg.has_flow = false;
    const auto h = strictify_hybrid_pe(cfg);
    // 2V + (S / 4) V with S = 0.5
    for (long k = 0; k < 6; ++k) CHECK(h.V_sharp(s1(1.0), 0.0, k) == doctest::Approx(2.125).epsilon(1e-14));
    CHECK(h.V_sharp(s1(3.0), 0.0, 2) == doctest::Approx(9.0 * 2.125).epsilon(1e-14));
    CHECK(h.jump_rate == doctest::Approx(exp_rate_for_dis(0, 0.5)));
    CHECK(h.flow_rate == 0.0);
    CHECK(h.rate == h.jump_rate);
    CHECK(h.upper_factor == doctest::Approx(2.125));
}

TEST_CASE("hybrid strictification bounds and periodicity") {
    HybridStrictificationConfig cfg;
    cfg.V = square();
    cfg.gamma = [](double s) { return 0.5 * s; };
    cfg.p = mod2();
    cfg.q = ContinuousPESignal::sin2();
    cfg.time_horizon = 4 * kPi;
    const auto h = strictify_hybrid_pe(cfg);
    CHECK(h.jump_rate == doctest::Approx(std::log(8.0 / 7.0)));
    CHECK(h.flow_rate == doctest::Approx(0.5));
    CHECK(h.upper_factor == doctest::Approx(2.0 + 0.5 + kPi / 2));
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> ux(-3.0, 3.0), ut(0.0, 3 * kPi);
    for (int i = 0; i < 200; ++i) {
        const State x = s1(ux(rng));
        const double t = ut(rng);
        const long k = i % 7;
        const double v = x.squaredNorm();
        const double vs = h.V_sharp(x, t, k);
        CHECK(vs >= 2.0 * v - 1e-12);
        CHECK(vs <= h.upper_factor * v + 1e-9);
        CHECK(h.V_sharp(x, t + kPi, k + 2) == doctest::Approx(vs).epsilon(1e-8));
    }
}

TEST_CASE("hybrid strictification requires signals for nonempty sets") {
    HybridStrictificationConfig cfg;
    cfg.V = square();
    cfg.q = ContinuousPESignal::sin2();
    CHECK_THROWS_AS(strictify_hybrid_pe(cfg), ConfigError);
    cfg.has_jumps = false;
    CHECK_NOTHROW(strictify_hybrid_pe(cfg));
}

TEST_CASE("strictification json") {
    const auto d = strictify_discrete_pe(halving_config());
    const auto j = d.to_json();
    CHECK(j.contains("l"));
    CHECK(j.contains("delta"));
}
