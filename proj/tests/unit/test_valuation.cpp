#include "apm/valuation.hpp"

#include "oracle/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace apm;

namespace {

double sample_mean(const std::vector<double>& v) {
    long double s = 0.0L;
    for (double x : v) {
        s += x;
    }
    return static_cast<double>(s / v.size());
}

double sample_var(const std::vector<double>& v) {
    const double m = sample_mean(v);
    long double s = 0.0L;
    for (double x : v) {
        s += (x - m) * (x - m);
    }
    return static_cast<double>(s / (v.size() - 1));
}

}  // namespace

TEST_CASE("value samples: trivial strategies") {
    const SamplePool pool = SamplePool::build(ShockFamily(), 3, 1000, 1);
    const ReducedParams b(Sequence::finite({0.3, -0.2, 0.1}));
    for (double v : value_samples(Strategy::finite({0.0, 0.0, 0.0}), b, pool).values) {
        CHECK(v == 0.0);
    }
    const auto e1 = value_samples(Strategy::finite({1.0}), b, pool).values;
    for (std::size_t j = 0; j < pool.size(); ++j) {
        CHECK(e1[j] == pool.column(1)[j] - 0.3);
    }
}

TEST_CASE("value samples match analytic moments") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const std::size_t n = 100000;
    const SamplePool pool = SamplePool::build(ShockFamily(), 5, n, 2);
    std::size_t misses = 0;
    for (int t = 0; t < 100; ++t) {
        std::vector<double> phi(5);
        std::vector<double> bv(5);
        for (std::size_t i = 0; i < 5; ++i) {
            phi[i] = u(rng);
            bv[i] = u(rng);
        }
        const ReducedParams b(Sequence::finite(bv));
        const auto v = value_samples(Strategy::finite(phi), b, pool).values;
        const ValueMoments m = value_moments(Strategy::finite(phi), b);
        const double var = sample_var(v);
        const double se_mean = std::sqrt(var / n);
        const double se_var = var * std::sqrt(2.0 / (n - 1));
        misses += std::abs(sample_mean(v) - m.mean) > 4.0 * se_mean ? 1 : 0;
        misses += std::abs(var - m.variance) > 4.0 * se_var ? 1 : 0;
    }
    CHECK(misses == 0);
}

TEST_CASE("value samples are linear in phi") {
    const SamplePool pool = SamplePool::build(ShockFamily(StudentTLaw{5.0}), 4, 2000, 3);
    const ReducedParams b(Sequence::finite({0.1, 0.2, -0.3, 0.4}));
    const std::vector<double> phi = {0.5, -1.0, 2.0, 0.25};
    const std::vector<double> psi = {1.5, 0.5, -0.75, 1.0};
    std::vector<double> combo(4);
    for (std::size_t i = 0; i < 4; ++i) {
        combo[i] = 2.0 * phi[i] + psi[i];
    }
    const auto a = value_samples(Strategy::finite(phi), b, pool).values;
    const auto c = value_samples(Strategy::finite(psi), b, pool).values;
    const auto ac = value_samples(Strategy::finite(combo), b, pool).values;
    for (std::size_t j = 0; j < pool.size(); ++j) {
        CHECK(std::abs(ac[j] - (2.0 * a[j] + c[j])) <= 1e-12 * std::max(1.0, std::abs(ac[j])));
    }
}

TEST_CASE("value moments") {
    const std::vector<double> bv = {0.3, -0.2, 0.1};
    const ReducedParams b(Sequence::finite(bv));
    const ValueMoments m = value_moments(Strategy::finite(bv), b);
    CHECK(m.mean == doctest::Approx(-0.14));
    CHECK(m.variance == doctest::Approx(0.14));
    const ValueMoments z = value_moments(Strategy::finite({0.0, 0.0}), b);
    CHECK(z.mean == 0.0);
    CHECK(z.variance == 0.0);
    const ValueMoments unit = value_moments(Strategy::finite({0.6, 0.8}), b);
    CHECK(unit.variance == doctest::Approx(1.0).epsilon(1e-15));
    const ReducedParams ones(Sequence::with_rule({}, TailRule::constant(1.0)));
    CHECK_THROWS_AS((void)value_moments(Strategy(Sequence::with_rule({}, TailRule::constant(1.0))), ones),
                    InvalidParameter);
}

TEST_CASE("tail variance of an l2 strategy shrinks with the truncation point") {
    const Strategy phi(Sequence::with_rule({}, TailRule::power_law(1.0, 1.0)));
    const ReducedParams b(Sequence::with_rule({}, TailRule::geometric(1.0, 0.5)));
    double prev = phi.norm_sq();
    for (std::size_t n : {1u, 10u, 100u, 1000u}) {
        const TruncationBound t = truncation_bound(phi, b, n);
        CHECK(t.tail_variance < prev);
        CHECK(t.tail_variance == doctest::Approx(oracle::hurwitz_brute(2.0, n + 1.0, 200000)).epsilon(1e-8));
        prev = t.tail_variance;
    }
    CHECK(prev < 1.1e-3);
    const SamplePool pool = SamplePool::build(ShockFamily(), 10, 100, 5);
    const ValueSamples vs = value_samples(phi, b, pool);
    REQUIRE(vs.truncation);
    CHECK(vs.truncation->n == 10);
    CHECK(vs.truncation->mean_bound >= 0.0);
}

TEST_CASE("expectation under a density") {
    const std::vector<double> v = {1.0, 2.0, 3.0, 6.0};
    const std::vector<double> ones(4, 1.0);
    CHECK(expectation_under_density(v, ones).mean == doctest::Approx(3.0));
    const std::vector<double> c(4, 2.5);
    const std::vector<double> w = {0.5, 1.5, 0.25, 1.75};
    CHECK(expectation_under_density(c, w).mean == doctest::Approx(2.5));
    const std::vector<double> bad = {1.0, 1.0, 1.0, 2.0};
    CHECK_THROWS_AS((void)expectation_under_density(v, bad), DensityNotNormalized);
}

TEST_CASE("gaussian exponential tilt makes values centered") {
    const std::size_t n = 200000;
    const std::vector<double> bv = {0.3, -0.2};
    const SamplePool pool = SamplePool::build(ShockFamily(), 2, n, 8);
    std::vector<double> w(n);
    long double s = 0.0L;
    for (std::size_t j = 0; j < n; ++j) {
        w[j] = std::exp(bv[0] * pool.column(1)[j] + bv[1] * pool.column(2)[j]);
        s += w[j];
    }
    for (double& x : w) {
        x /= static_cast<double>(s / n);
    }
    const auto v = value_samples(Strategy::finite({1.0, 2.0}), ReducedParams(Sequence::finite(bv)), pool).values;
    const MeanSe m = expectation_under_density(v, w);
    CHECK(std::abs(m.mean) <= 4.0 * m.se);
}

TEST_CASE("pool contract") {
    const SamplePool pool = SamplePool::build(ShockFamily(), 3, 10, 4, 2);
    CHECK(pool.first_index() == 2);
    CHECK(pool.last_index() == 4);
    CHECK(pool.covers(4));
    CHECK_FALSE(pool.covers(1));
    const SamplePool anti = SamplePool::build(ShockFamily(), 2, 10, 4, 1, true);
    for (std::size_t j = 0; j < 5; ++j) {
        CHECK(anti.column(1)[j + 5] == -anti.column(1)[j]);
    }
    CHECK_THROWS((void)SamplePool::build(ShockFamily(TwoPointAbaLaw{}), 2, 10, 4, 1, true));
    CHECK_THROWS((void)SamplePool::build(ShockFamily(), 2, 11, 4, 1, true));
    std::ostringstream os;
    write_pool_csv(os, pool);
    CHECK(os.str().rfind("#", 0) == 0);
}
