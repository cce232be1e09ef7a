#include "apm/utility.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace apm;

namespace {

std::vector<Utility> builtins() {
    return {Utility::proof_u1(0.5),
            Utility::proof_u1(0.05),
            Utility::proof_un(0.5),
            Utility::proof_un(2.0 / 3.0),
            Utility::power_moderate(0.0, 2.0, 1.0),
            Utility::power_moderate(0.5, 3.0, 2.0),
            Utility::exponential_bounded(),
            Utility::custom({-1.0, 2.0}, {3.0, 1.0, 0.0})};
}

}  // namespace

TEST_CASE("proof_u1 values") {
    const Utility u = Utility::proof_u1(0.5);
    CHECK(u.raw_value(0.0) == -1.0);
    CHECK(u(0.0) == 0.0);
    CHECK(u.left_deriv(0.0) == doctest::Approx(0.5));
    CHECK(u.right_deriv(0.0) == doctest::Approx(0.5));
    CHECK(u.raw_value(-2.0) == doctest::Approx(-2.0));
    CHECK(u.raw_value(1e12) < 0.0);
    CHECK(u.raw_value(1e12) > -1e-5);
    CHECK_THROWS_AS((void)Utility::proof_u1(1.0), InvalidUtility);
}

TEST_CASE("proof_un values") {
    const Utility u = Utility::proof_un(2.0 / 3.0);
    CHECK(u.raw_value(0.0) == 1.0);
    CHECK(u.right_deriv(0.0) == doctest::Approx(2.0 / 3.0));
    CHECK(u.left_deriv(0.0) == doctest::Approx(2.0 / 3.0));
    const Utility h = Utility::proof_un(0.5);
    CHECK(h.raw_value(3.0) == doctest::Approx(2.0));
    CHECK(h.raw_value(-1.0) == doctest::Approx(0.5));
    CHECK_THROWS_AS((void)Utility::proof_un(0.0), InvalidUtility);
}

TEST_CASE("built-in utilities are normalized, concave and nondecreasing") {
    for (const auto& u : builtins()) {
        CAPTURE(u.describe());
        CHECK(u(0.0) == 0.0);
        const std::size_t n = 10000;
        double prev_slope = std::numeric_limits<double>::infinity();
        double prev = u(-500.0);
        const double h = 1000.0 / (n - 1);
        for (std::size_t j = 1; j < n; ++j) {
            const double x = -500.0 + h * j;
            const double v = u(x);
            const double slope = (v - prev) / h;
            CHECK(slope >= -1e-9);
            CHECK(slope <= prev_slope + 1e-9 * std::max(1.0, std::abs(prev_slope)));
            prev_slope = slope;
            prev = v;
        }
    }
}

TEST_CASE("derivative matches centered differences away from kinks") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> xs(-20.0, 20.0);
    for (const auto& u : builtins()) {
        CAPTURE(u.describe());
        const auto kinks = u.kinks();
        for (int t = 0; t < 200; ++t) {
            const double x = xs(rng);
            bool near_kink = false;
            for (double k : kinks) {
                near_kink = near_kink || std::abs(x - k) < 1e-3;
            }
            if (near_kink) {
                continue;
            }
            const double h = 1e-6 * std::max(1.0, std::abs(x));
            const double fd = (u(x + h) - u(x - h)) / (2.0 * h);
            CHECK(std::abs(fd - u.deriv(x)) <= std::max(1e-6, 1e-6 * std::abs(u.deriv(x))));
        }
    }
}

TEST_CASE("growth certificates hold") {
    for (const auto& u : builtins()) {
        const auto g = u.growth();
        if (!g) {
            continue;
        }
        CAPTURE(u.describe());
        CHECK(g->alpha < 1.0);
        for (std::size_t j = 0; j < 10000; ++j) {
            const double x = std::pow(10.0, -3.0 + 9.0 * j / 9999.0);
            CHECK(u(x) <= g->c1 * (std::pow(x, g->alpha) + 1.0) + 1e-12);
        }
    }
    CHECK_FALSE(Utility::linear().growth());
    CHECK(Utility::linear().is_linear());
    CHECK(Utility::exponential_bounded().bounded_above());
}

TEST_CASE("linear domination constants") {
    const LenaConstants e = lena_constants(Utility::exponential_bounded());
    CHECK(e.certified);
    CHECK(lena_excess(Utility::exponential_bounded(), 1.0, 0.0) <= 1e-9);

    const Utility quad = Utility::power_moderate(0.0, 2.0, 2.0);
    for (double c : {0.5, 1.0, 4.0}) {
        CHECK(lena_excess(quad, c, c * c / 8.0) <= 1e-9);
    }
    CHECK(lena_excess(quad, 1.0, 0.0) > 0.0);

    for (const auto& u : builtins()) {
        CAPTURE(u.describe());
        const LenaConstants l = lena_constants(u);
        CHECK(l.certified);
        CHECK(l.c > 0.0);
    }
    CHECK(lena_constants(Utility::linear(0.0)).constant_u);
}

TEST_CASE("young pairs") {
    const Utility quad = Utility::power_moderate(0.0, 2.0, 1.0);
    for (double x : {0.5, 1.0, 3.0}) {
        CHECK(young_phi(quad, x) == doctest::Approx(x * x));
        CHECK(young_psi(quad, x) == doctest::Approx(x * x / 4.0).epsilon(1e-8));
    }
    const YoungPair q = young_pair(quad);
    CHECK(q.moderate);
    CHECK(q.phi_ratio_sup == doctest::Approx(4.0).epsilon(1e-6));
    CHECK(q.psi_ratio_sup == doctest::Approx(4.0).epsilon(1e-4));

    const YoungPair e = young_pair(Utility::exponential_bounded(), {1e-2, 50.0, 200, 0.0, 0.0});
    CHECK_FALSE(e.moderate);

    const YoungPair l = young_pair(Utility::linear(2.0));
    CHECK_FALSE(l.moderate);
}

TEST_CASE("fenchel-young inequality on sampled pairs") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> d(0.0, 30.0);
    for (const auto& u : builtins()) {
        for (int t = 0; t < 200; ++t) {
            const double x = d(rng);
            const double y = d(rng);
            CHECK(x * y <= young_phi(u, x) + young_psi(u, y) + 1e-9);
        }
    }
}

TEST_CASE("custom piecewise validation") {
    CHECK_THROWS_AS((void)Utility::custom({1.0}, {1.0, 2.0}), InvalidUtility);
    CHECK_THROWS_AS((void)Utility::custom({1.0}, {1.0}), InvalidUtility);
    CHECK_THROWS_AS((void)Utility::custom({1.0}, {-1.0, -2.0}), InvalidUtility);
    const Utility c = Utility::custom({0.0}, {2.0, 1.0});
    CHECK(c.deriv(0.0) == doctest::Approx(1.5));
    CHECK(c.left_deriv(0.0) == 2.0);
    CHECK(c.right_deriv(0.0) == 1.0);
    const Utility s = c.scaled(3.0);
    CHECK(s(1.0) == doctest::Approx(3.0));
}
