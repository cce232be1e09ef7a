#include "apm/optimizer.hpp"

#include "oracle/oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace apm;

namespace {

OptimizationProblem exp_problem(std::vector<double> b, std::size_t n, std::uint64_t seed) {
    OptimizationProblem p{ReducedParams(Sequence::finite(b)), ShockFamily(), Utility::exponential_bounded()};
    p.k = b.size();
    p.n = n;
    p.seed = seed;
    return p;
}

// argmax of p u(phi) + (1 - p) u(-phi) by golden section
double golden_two_point(const Utility& u, double p, double lo, double hi) {
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    auto f = [&](double x) { return p * u(x) + (1.0 - p) * u(-x); };
    double a = lo;
    double b = hi;
    for (int it = 0; it < 200; ++it) {
        const double c = b - g * (b - a);
        const double d = a + g * (b - a);
        if (f(c) > f(d)) {
            b = d;
        } else {
            a = c;
        }
    }
    return 0.5 * (a + b);
}

}  // namespace

TEST_CASE("gradient against the gaussian closed form") {
    const std::vector<double> b = {0.3};
    const SamplePool pool = SamplePool::build(ShockFamily(), 1, 1000000, 31);
    for (double phi : {-0.6, 0.0, 0.6}) {
        const std::vector<double> x = {phi};
        const ObjectiveEval e = objective_and_gradient(x, b, Utility::exponential_bounded(), pool);
        const double g = oracle::exp_utility_grad(x, b)[0];
        CAPTURE(phi);
        CHECK(std::abs(e.grad[0] - g) <= 4.0 * e.grad_se[0]);
        CHECK(std::abs(e.value.mean - oracle::exp_utility_value(x, b)) <= 4.0 * e.value.se + 1e-15);
    }
}

TEST_CASE("gradient at the origin is -u'(0) b") {
    const std::vector<double> b = {0.3, -0.2, 0.1};
    const std::vector<double> zero(3, 0.0);
    const SamplePool pool = SamplePool::build(ShockFamily(StudentTLaw{5.0}), 3, 200000, 32);
    const Utility u = Utility::proof_un(0.5);
    const ObjectiveEval e = objective_and_gradient(zero, b, u, pool);
    for (std::size_t l = 0; l < 3; ++l) {
        CHECK(std::abs(e.grad[l] + u.deriv(0.0) * b[l]) <= 4.0 * e.grad_se[l]);
    }
    CHECK(e.value.mean == 0.0);
}

TEST_CASE("linear utility is rejected") {
    OptimizationProblem p = exp_problem({0.3}, 100, 1);
    p.u = Utility::linear();
    CHECK_THROWS_AS((void)maximize_segment(p), RejectedUtility);
    CHECK_THROWS_AS(check_problem(p), RejectedUtility);
}

TEST_CASE("gaussian exponential optimum is -b") {
    const std::vector<double> b = {0.3, -0.2, 0.1};
    const OptimizationResult r = maximize_segment(exp_problem(b, 200000, 33));
    CHECK(r.status == SolverStatus::converged);
    for (std::size_t l = 0; l < 3; ++l) {
        CHECK(r.phi_star[l] == doctest::Approx(-b[l]).epsilon(0.05).scale(0.1));
    }
    CHECK(std::abs(r.value.mean - oracle::exp_utility_truncated_value(b, 3)) <= 4.0 * r.value.se);
    CHECK(r.max_foc <= std::max(1e-6, 3.0 * r.max_foc_se));
    for (std::size_t t = 1; t < r.trace.size(); ++t) {
        CHECK(r.trace[t].value >= r.trace[t - 1].value);
    }
}

TEST_CASE("zero premia with symmetric shocks give a zero optimum") {
    OptimizationProblem p = exp_problem({0.0, 0.0}, 100000, 34);
    p.u = Utility::power_moderate(0.5, 2.0, 1.0);
    p.options.grad_tol = 1e-9;
    const SamplePool pool = SamplePool::build(ShockFamily(), 2, p.n, p.seed, 1, true);
    const OptimizationResult r = maximize_segment(p, pool);
    CHECK(r.status == SolverStatus::converged);
    for (double x : r.phi_star) {
        CHECK(std::abs(x) <= 1e-6);
    }
}

TEST_CASE("two-point shock with a quadratic loss side") {
    OptimizationProblem p{ReducedParams(Sequence::finite({0.0})), ShockFamily(RademacherLaw{}),
                          Utility::power_moderate(0.5, 2.0, 0.25)};
    p.k = 1;
    p.n = 20000;
    p.seed = 35;
    p.options.grad_tol = 1e-12;
    const SamplePool pool = SamplePool::build(p.family, 1, p.n, p.seed);
    std::size_t ups = 0;
    for (double x : pool.column(1)) {
        ups += x > 0 ? 1 : 0;
    }
    const double freq = static_cast<double>(ups) / p.n;
    const OptimizationResult r = maximize_segment(p, pool);
    CHECK(r.status == SolverStatus::converged);
    CHECK(r.phi_star[0] == doctest::Approx(golden_two_point(p.u, freq, -1.0, 1.0)).scale(1.0).epsilon(1e-6));
    CHECK(std::abs(r.phi_star[0]) <= 0.05);
}

TEST_CASE("scaling u does not move the optimum") {
    const std::vector<double> b = {0.2, 0.4};
    OptimizationProblem p = exp_problem(b, 50000, 36);
    p.u = Utility::proof_un(0.5);
    p.family = ShockFamily(StudentTLaw{6.0});
    const OptimizationResult a = maximize_segment(p);
    p.u = Utility::proof_un(0.5).scaled(7.0);
    const OptimizationResult c = maximize_segment(p);
    REQUIRE(a.status == SolverStatus::converged);
    REQUIRE(c.status == SolverStatus::converged);
    for (std::size_t l = 0; l < 2; ++l) {
        CHECK(a.phi_star[l] == doctest::Approx(c.phi_star[l]).epsilon(1e-4).scale(1.0));
    }
}

TEST_CASE("different starts reach the same optimum") {
    OptimizationProblem p = exp_problem({0.3, -0.1, 0.25}, 50000, 37);
    p.u = Utility::proof_u1(0.3);
    p.options.grad_tol = 1e-9;
    const SamplePool pool = SamplePool::build(p.family, p.k, p.n, p.seed);
    const OptimizationResult a = maximize_segment(p, pool);
    p.initial = std::vector<double>{1.0, 1.0, -1.0};
    const OptimizationResult c = maximize_segment(p, pool);
    REQUIRE(a.status == SolverStatus::converged);
    REQUIRE(c.status == SolverStatus::converged);
    for (std::size_t l = 0; l < 3; ++l) {
        CHECK(a.phi_star[l] == doctest::Approx(c.phi_star[l]).epsilon(1e-4).scale(1.0));
    }
}

TEST_CASE("sweep on a geometric market") {
    std::vector<double> b;
    for (std::size_t i = 1; i <= 6; ++i) {
        b.push_back(std::ldexp(1.0, -static_cast<int>(i)));
    }
    OptimizationProblem p = exp_problem(b, 100000, 38);
    const SweepReport s = segment_sweep(p, {1, 2, 4, 6}, {1e-3, 5e-2});
    REQUIRE(s.rows.size() == 4);
    for (const auto& row : s.rows) {
        CAPTURE(row.k);
        CHECK(row.result.status == SolverStatus::converged);
        const double exact = oracle::exp_utility_truncated_value(b, row.k);
        CHECK(std::abs(row.result.value.mean - exact) <= 4.0 * row.result.value.se);
        if (row.increment) {
            CHECK(row.increment->mean >= -3.0 * row.increment->se);
        }
    }
    CHECK(s.converged);
}

TEST_CASE("truncation gaps") {
    const std::vector<double> b = {0.4, 0.2, 0.1};
    const SamplePool pool = SamplePool::build(ShockFamily(), 3, 100000, 39);
    const std::vector<double> phi = {-0.4, -0.2, -0.1};
    const auto gaps = truncation_gap(phi, {0, 1, 2, 3, 5}, b, Utility::exponential_bounded(), pool);
    REQUIRE(gaps.size() == 5);
    CHECK(gaps[3].gap.mean == 0.0);
    CHECK(gaps[4].gap.mean == 0.0);
    for (std::size_t j = 0; j < 3; ++j) {
        const double exact =
            oracle::exp_utility_truncated_value(b, 3) - oracle::exp_utility_truncated_value(b, gaps[j].n);
        CHECK(std::abs(gaps[j].gap.mean - exact) <= 4.0 * gaps[j].gap.se);
        CHECK(gaps[j + 1].gap.mean <= gaps[j].gap.mean + 3.0 * gaps[j].gap.se);
    }
}
