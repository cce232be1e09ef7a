#include "apm/risk_neutral.hpp"

#include "apm/parallel.hpp"
#include "apm/philox.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace apm {

namespace {

double mean_of(std::span<const double> x) {
    CompensatedSum s;
    for (double v : x) {
        s.add(v);
    }
    return s.value() / static_cast<double>(x.size());
}

void fill_extremes(DensityEstimate& d) {
    const auto [lo, hi] = std::minmax_element(d.weights.begin(), d.weights.end());
    d.min_weight = *lo;
    d.max_weight = *hi;
}

}  // namespace

DensityEstimate DensityEstimate::from_weights(std::vector<double> w) {
    if (w.empty()) {
        throw InvalidDensity("density needs at least one weight");
    }
    for (double x : w) {
        if (!(x > 0.0) || !std::isfinite(x)) {
            throw InvalidDensity("density weights must be finite and positive");
        }
    }
    DensityEstimate d;
    const double m = mean_of(w);
    for (double& x : w) {
        x /= m;
    }
    d.weights = std::move(w);
    d.mean_uprime = m;
    d.utility = "explicit";
    fill_extremes(d);
    return d;
}

DensityEstimate construct_density(std::span<const double> phi_star, std::span<const double> b, const Utility& u,
                                  const SamplePool& pool) {
    std::vector<double> v(pool.size());
    value_samples_dense(phi_star, b, pool, v);
    std::vector<double> du(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) {
        du[j] = u.deriv(v[j]);
        if (!(du[j] > 0.0) || !std::isfinite(du[j])) {
            throw InvalidDensity("u'(V) is " + format_double(du[j]) + " at sample " + std::to_string(j) +
                                 "; the density needs 0 < u' < inf on the pool");
        }
    }
    DensityEstimate d;
    d.mean_uprime = mean_of(du);
    for (double& x : du) {
        x /= d.mean_uprime;
    }
    d.weights = std::move(du);
    d.utility = u.describe();
    d.phi_star.assign(phi_star.begin(), phi_star.end());
    if (const auto s = u.sup_deriv()) {
        d.linf_bound = *s / d.mean_uprime;
    }
    fill_extremes(d);
    return d;
}

RiskNeutralReport verify_risk_neutral(const DensityEstimate& density, const SamplePool& pool,
                                      std::span<const double> b, std::size_t first, std::size_t last,
                                      double tolerance, std::uint64_t strategy_seed, std::size_t random_strategies) {
    if (first == 0 || last < first || !pool.covers(first) || !pool.covers(last) || b.size() < last) {
        throw std::invalid_argument("verify_risk_neutral: index range not covered by pool and b");
    }
    if (density.weights.size() != pool.size()) {
        throw std::invalid_argument("verify_risk_neutral: density and pool sizes differ");
    }
    RiskNeutralReport rep;
    rep.tolerance = tolerance;
    rep.pass = true;
    const std::size_t n = pool.size();
    std::vector<double> tmp(n);
    for (std::size_t i = first; i <= last; ++i) {
        const auto col = pool.column(i);
        const double bi = b[i - 1];
        for (std::size_t j = 0; j < n; ++j) {
            tmp[j] = density.weights[j] * (col[j] - bi);
        }
        const MeanSe m = mean_se(tmp);
        ResidualRow row;
        row.i = i;
        row.b = bi;
        row.residual = m.mean;
        row.weighted_mean = m.mean + bi;
        row.se = m.se;
        row.within = std::abs(m.mean) <= std::max(tolerance, 3.0 * m.se);
        rep.pass = rep.pass && row.within;
        rep.residuals.push_back(row);
    }

    std::mt19937_64 rng(strategy_seed);
    for (std::size_t s = 0; s < random_strategies; ++s) {
        std::vector<double> phi(last, 0.0);
        for (std::size_t i = first; i <= last; ++i) {
            phi[i - 1] = 2.0 * to_unit(rng()) - 1.0;
        }
        value_samples_dense(phi, b.subspan(0, last), pool, tmp);
        MartingaleRow row;
        row.eq_value = expectation_under_density(tmp, density.weights);
        row.within = std::abs(row.eq_value.mean) <= std::max(tolerance, 3.0 * row.eq_value.se);
        row.phi.assign(phi.begin() + static_cast<std::ptrdiff_t>(first - 1), phi.end());
        rep.pass = rep.pass && row.within;
        rep.martingale.push_back(std::move(row));
    }
    return rep;
}

MomentReport density_moment_report(const DensityEstimate& density, std::span<const double> p_list,
                                   const Utility* source) {
    MomentReport rep;
    rep.max_weight = density.max_weight;
    rep.min_weight = density.min_weight;
    rep.linf_bound = density.linf_bound;
    std::vector<double> tmp(density.weights.size());
    for (double p : p_list) {
        MomentRow row;
        row.p = p;
        for (std::size_t j = 0; j < tmp.size(); ++j) {
            tmp[j] = std::pow(density.weights[j], p);
        }
        row.dq_dp = mean_of(tmp);
        for (std::size_t j = 0; j < tmp.size(); ++j) {
            tmp[j] = std::pow(density.weights[j], -p);
        }
        row.dp_dq = mean_of(tmp);
        rep.rows.push_back(row);
    }
    if (source) {
        // 1/u'(x) grows like (1 + x)^{1 - kappa} (resp. ^{1 + eps}) and V(phi*) is in L^2
        if (const auto* k = std::get_if<ProofUn>(&source->kind())) {
            rep.predicted_dp_dq_exponent = 2.0 / (1.0 - k->kappa);
        } else if (const auto* e = std::get_if<ProofU1>(&source->kind())) {
            rep.predicted_dp_dq_exponent = 2.0 / (1.0 + e->epsilon);
        }
    }
    if (!rep.predicted_dp_dq_exponent) {
        rep.caveat = "empirical evidence only: finite-pool moments cannot certify integrability";
    } else {
        rep.caveat = "moments are pool estimates; the exponent is the analytic prediction for this family";
    }
    return rep;
}

PSchedule p_schedule(std::size_t n, double epsilon) {
    if (n == 0) {
        throw std::invalid_argument("p_schedule needs n >= 1");
    }
    PSchedule s;
    double p = 2.0;
    for (std::size_t j = 0; j < n; ++j) {
        s.p.push_back(p);
        s.alpha_ceiling.push_back(p / (p + 1.0));
        s.kappa.push_back(p / (p + 1.0) - epsilon);
        p = 2.0 * p + 2.0;
    }
    return s;
}

std::size_t schedule_stages(double target_alpha) {
    if (!(target_alpha >= 0.0 && target_alpha < 1.0)) {
        throw std::invalid_argument("target alpha must lie in [0, 1)");
    }
    double p = 2.0;
    std::size_t n = 1;
    while (!(p / (p + 1.0) > target_alpha)) {
        p = 2.0 * p + 2.0;
        ++n;
    }
    return n;
}

BuilderResult recursive_density_builder(const BuilderSpec& spec) {
    if (!(spec.epsilon > 0.0 && spec.epsilon < 1.0)) {
        throw std::invalid_argument("schedule epsilon must lie in (0, 1)");
    }
    BuilderResult out;
    out.stages_planned = schedule_stages(spec.target_alpha);
    const PSchedule sched = p_schedule(out.stages_planned, spec.epsilon);
    for (double kappa : sched.kappa) {
        if (!(kappa > 0.0 && kappa < 1.0)) {
            throw std::invalid_argument("epsilon " + format_double(spec.epsilon) + " gives kappa outside (0, 1)");
        }
    }

    const SamplePool pool = SamplePool::build(spec.family, spec.k, spec.n, spec.seed);
    const std::vector<double> b = spec.b.head(spec.k);
    for (std::size_t j = 1; j <= out.stages_planned; ++j) {
        const Utility u = j == 1 ? Utility::proof_u1(spec.epsilon) : Utility::proof_un(sched.kappa[j - 2]);
        OptimizationProblem prob{spec.b, spec.family, u, spec.k, spec.n, spec.seed, spec.options, std::nullopt};
        BuilderStage stage;
        stage.index = j;
        stage.utility = u.describe();
        stage.result = maximize_segment(prob, pool);
        if (stage.result.status != SolverStatus::converged) {
            out.failed_stage = j;
            out.message = "stage " + std::to_string(j) + " solver status " + to_string(stage.result.status);
            out.stages.push_back(std::move(stage));
            return out;
        }
        stage.density = construct_density(stage.result.phi_star, b, u, pool);
        stage.verification = verify_risk_neutral(stage.density, pool, b, 1, spec.k, 0.0, spec.seed + j);
        stage.moments = density_moment_report(stage.density, spec.moment_p, &u);
        const bool ok = stage.verification.pass;
        out.stages.push_back(std::move(stage));
        if (!ok) {
            out.failed_stage = j;
            out.message = "stage " + std::to_string(j) + " density failed risk-neutral verification";
            return out;
        }
    }
    if (spec.target_alpha > 0.0) {
        const Utility target = Utility::proof_un(spec.target_alpha);
        OptimizationProblem prob{spec.b, spec.family, target, spec.k, spec.n, spec.seed, spec.options, std::nullopt};
        out.certification = maximize_segment(prob, pool);
        out.message = "certified growth exponent " + format_double(spec.target_alpha) + " with status " +
                      to_string(out.certification->status);
    } else {
        out.message = "target alpha 0 needs no certification beyond stage 1";
    }
    return out;
}

}  // namespace apm
