#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "strictlyap/errors.hpp"
#include "strictlyap/pe.hpp"

using namespace strictlyap;

namespace {

constexpr double kPi = std::numbers::pi;

DiscretePESignal mod2(int l, double delta) {
    return DiscretePESignal([](long k) { return k % 2 == 0 ? 0.0 : 1.0; }, l, delta, 1.0);
}

// Direct double sum over s in [k-l, k], j in [s, k].
double S_oracle(const DiscretePESignal& p, int l, long k) {
    double acc = 0.0;
    for (long s = k - l; s <= k; ++s)
        for (long j = s; j <= k; ++j) acc += p(j);
    return acc;
}

}  // namespace

TEST_CASE("verify_discrete_pe") {
    CHECK(verify_discrete_pe(mod2(1, 1.0), 1, 1.0, 100).pass);
    const auto bad = verify_discrete_pe(mod2(0, 1.0), 0, 1.0, 100);
    CHECK_FALSE(bad.pass);
    REQUIRE(bad.first_violation);
    CHECK(*bad.first_violation == 0);
    CHECK(bad.worst_window == 0.0);
    const DiscretePESignal one([](long) { return 1.0; }, 2, 3.0, 1.0);
    CHECK(verify_discrete_pe(one, 2, 3.0, 50).pass);
    CHECK_FALSE(verify_discrete_pe(one, 2, 3.5, 50).pass);
}

TEST_CASE("sum_S closed forms") {
    const DiscretePESignal one([](long) { return 1.0; }, 2, 3.0, 1.0);
    for (long k = 0; k < 10; ++k) CHECK(sum_S(one, 2, k) == 6.0);
    const auto p = mod2(1, 1.0);
    for (long k = 0; k < 20; ++k) CHECK(sum_S(p, 1, k) == (k % 2 == 0 ? 1.0 : 2.0));
}

TEST_CASE("sum_S matches the double sum on random signals") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    for (int l : {0, 1, 3, 7}) {
        std::vector<double> samples(64);
        for (double& v : samples) v = u(rng);
        const auto p = DiscretePESignal::from_table(samples, -l, l, 0.0);
        for (long k = 0; k + 1 < 64 - l; ++k) {
            CHECK(sum_S(p, l, k) == doctest::Approx(S_oracle(p, l, k)).epsilon(1e-13));
            // S(k+1) - S(k) = (l+1) p(k+1) - sum_{j=k-l}^{k} p(j)
            const double lhs = sum_S(p, l, k + 1) - sum_S(p, l, k);
            const double rhs = (l + 1.0) * p(k + 1) - window_sum(p, l, k);
            CHECK(std::abs(lhs - rhs) <= 1e-12);
        }
    }
}

TEST_CASE("discrete window bounds") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    std::vector<double> samples(50);
    for (double& v : samples) v = u(rng);
    const auto p = DiscretePESignal::from_table(samples, -4, 4, 0.0, true);
    const auto v = check_window_bounds(p, 200);
    CHECK(v.pass);
    CHECK(v.worst_window <= p.upper_bound() * 25.0);
}

TEST_CASE("discrete signal domain and parameters") {
    const auto p = DiscretePESignal::from_table({1, 2, 3}, -1, 1, 1.0);
    CHECK(p(-1) == 1.0);
    CHECK(p(1) == 3.0);
    CHECK_THROWS_AS(p(-2), DomainError);
    CHECK_THROWS_AS(p(2), DomainError);
    CHECK(p.upper_bound() == 3.0);
    CHECK_THROWS_AS(DiscretePESignal::from_table({}, 0, 1, 1.0), ConfigError);
    CHECK_THROWS_AS(DiscretePESignal::from_table({1, -1}, 0, 1, 1.0), ParameterError);
    CHECK_THROWS_AS(DiscretePESignal([](long) { return 1.0; }, -1, 1.0, 1.0), ParameterError);
    const auto periodic = DiscretePESignal::from_table({0, 1}, 0, 1, 1.0, true);
    CHECK(periodic(-1) == 1.0);
    CHECK(periodic(6) == 0.0);
}

TEST_CASE("discrete signal json") {
    const nlohmann::json j = {{"type", "discrete"}, {"l", 1}, {"delta", 1}, {"samples", {0, 1}},
                              {"start_index", 0}, {"periodic", true}};
    const auto p = DiscretePESignal::from_json(j);
    CHECK(p.window() == 1);
    CHECK(p.delta() == 1.0);
    CHECK(p(3) == 1.0);
    CHECK_THROWS_AS(DiscretePESignal::from_json({{"type", "discrete"}}), ConfigError);
    CHECK_THROWS_AS(DiscretePESignal::from_json({{"type", "continuous"}}), ConfigError);
}

TEST_CASE("verify_continuous_pe for sin^2") {
    const auto q = ContinuousPESignal::sin2();
    CHECK(verify_continuous_pe(q, kPi, kPi / 2, 4 * kPi, kPi / 64).pass);
    CHECK_FALSE(verify_continuous_pe(q, kPi / 2, kPi / 2, 4 * kPi, kPi / 128).pass);
    CHECK_THROWS_AS(verify_continuous_pe(q, kPi, kPi / 2, 4 * kPi, kPi / 32), ConfigError);
}

TEST_CASE("int_R closed forms") {
    const ContinuousPESignal one([](double) { return 1.0; }, 2.0, 2.0, 1.0);
    CHECK(int_R(one, 2.0, 5.0, 2.0 / 64) == doctest::Approx(2.0).epsilon(1e-12));
    const ContinuousPESignal zero([](double) { return 0.0; }, 1.0, 1.0, 0.0);
    CHECK(int_R(zero, 1.0, 0.3, 1.0 / 64) == 0.0);
    const auto q = ContinuousPESignal::sin2();
    for (double t : {0.0, 0.4, 1.0, 2.5, 7.0}) {
        const double exact = kPi * kPi / 4 - kPi / 4 * std::sin(2 * t);
        CHECK(int_R(q, kPi, t, kPi / 256) == doctest::Approx(exact).epsilon(1e-9));
        CHECK(window_integral(q, kPi, t, kPi / 256) == doctest::Approx(kPi / 2).epsilon(1e-10));
    }
    CHECK_THROWS_AS(int_R(q, kPi, 0.0, kPi / 10), ConfigError);
}

TEST_CASE("continuous window bounds") {
    const auto q = ContinuousPESignal::sin2();
    const auto v = check_window_bounds(q, 4 * kPi, kPi / 64);
    CHECK(v.pass);
    CHECK(v.worst_window <= kPi * kPi / 2);
}

TEST_CASE("window cache matches the closed form") {
    const auto q = ContinuousPESignal::sin2();
    const WindowIntegralCache cache(q, -kPi, 5 * kPi, kPi / 256);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-kPi, 5 * kPi);
    for (int i = 0; i < 200; ++i) {
        const double t = u(rng);
        CHECK(cache.R(t) == doctest::Approx(kPi * kPi / 4 - kPi / 4 * std::sin(2 * t)).epsilon(1e-8));
        CHECK(std::abs(cache.dR(t) - (kPi * std::pow(std::sin(t), 2) - kPi / 2)) <= 1e-6);
    }
    // outside the table
    CHECK(cache.R(20.0) == doctest::Approx(kPi * kPi / 4 - kPi / 4 * std::sin(40.0)).epsilon(1e-8));
    CHECK_THROWS_AS(WindowIntegralCache(q, 1.0, 1.0), ConfigError);
}

TEST_CASE("continuous signal tables and json") {
    const auto q = ContinuousPESignal::from_table({0, 1, 2}, {1, 1, 1}, 1.0, 1.0, true);
    CHECK(q(0.5) == 1.0);
    CHECK(q(7.25) == 1.0);
    const auto nonper = ContinuousPESignal::from_table({0, 1, 2}, {1, 1, 1}, 1.0, 1.0);
    CHECK_THROWS_AS(nonper(3.0), DomainError);
    CHECK_THROWS_AS(ContinuousPESignal::from_table({0}, {1}, 1.0, 1.0), ConfigError);
    CHECK_THROWS_AS(ContinuousPESignal::from_table({0, 0}, {1, 1}, 1.0, 1.0), ConfigError);
    CHECK_THROWS_AS(ContinuousPESignal([](double) { return 1.0; }, 0.0, 1.0, 1.0), ParameterError);
    CHECK_THROWS_AS(ContinuousPESignal([](double) { return 1.0; }, 1.0, 0.0, 1.0), ParameterError);
    const auto s = ContinuousPESignal::from_json({{"type", "continuous"}, {"kind", "sin2"}, {"tau", kPi}, {"eps", kPi / 2}});
    CHECK(s(kPi / 2) == doctest::Approx(1.0));
    CHECK(s.upper_bound() == 1.0);
    CHECK_THROWS_AS(ContinuousPESignal::from_json({{"type", "continuous"}, {"kind", "cos"}, {"tau", 1}, {"eps", 1}}),
                    ConfigError);
}
