#include "apm/optimizer.hpp"

#include "apm/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace apm {

namespace {

constexpr std::size_t kRowBlock = 8192;

double norm2(std::span<const double> v) {
    CompensatedSum s;
    for (double x : v) {
        s.add(x * x);
    }
    return std::sqrt(s.value());
}

double dot(std::span<const double> a, std::span<const double> b) { return compensated_dot(a, b); }

/// Mean and standard error of f(j) over j with mask[j] set, blocked so the
/// result does not depend on the thread count.
template <class F>
MeanSe blocked_mean_se(std::size_t n, const std::vector<unsigned char>& ok, std::size_t used, F f) {
    MeanSe out;
    if (used == 0) {
        out.mean = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    const std::size_t blocks = block_count(n, kRowBlock);
    std::vector<double> sums(blocks, 0.0);
    for_each_block(n, kRowBlock, [&](std::size_t blk, std::size_t r0, std::size_t r1) {
        CompensatedSum s;
        for (std::size_t j = r0; j < r1; ++j) {
            if (ok[j]) {
                s.add(f(j));
            }
        }
        sums[blk] = s.value();
    });
    CompensatedSum total;
    for (double s : sums) {
        total.add(s);
    }
    const double dn = static_cast<double>(used);
    out.mean = total.value() / dn;
    for_each_block(n, kRowBlock, [&](std::size_t blk, std::size_t r0, std::size_t r1) {
        CompensatedSum s;
        for (std::size_t j = r0; j < r1; ++j) {
            if (ok[j]) {
                const double d = f(j) - out.mean;
                s.add(d * d);
            }
        }
        sums[blk] = s.value();
    });
    CompensatedSum sq;
    for (double s : sums) {
        sq.add(s);
    }
    out.sd = used > 1 ? std::sqrt(sq.value() / (dn - 1.0)) : 0.0;
    out.se = out.sd / std::sqrt(dn);
    return out;
}

std::string pool_descriptor(const SamplePool& pool, std::size_t k) {
    std::ostringstream os;
    os << "seed=" << pool.seed() << ";family=" << pool.family().describe() << ";indices=1.." << k
       << ";n=" << pool.size() << (pool.antithetic() ? ";antithetic" : "");
    return os.str();
}

bool foc_within(const ObjectiveEval& e, double tol) {
    for (std::size_t l = 0; l < e.grad.size(); ++l) {
        if (!(std::abs(e.grad[l]) <= std::max(tol, 3.0 * e.grad_se[l]))) {
            return false;
        }
    }
    return true;
}

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) {
        m = std::max(m, std::abs(x));
    }
    return m;
}

}  // namespace

void check_problem(const OptimizationProblem& problem) {
    if (problem.k == 0 || problem.n == 0) {
        throw std::invalid_argument("optimization needs k >= 1 and n >= 1");
    }
    if (!(problem.options.grad_tol > 0.0)) {
        throw std::invalid_argument("gradient tolerance must be positive");
    }
    if (problem.u.is_linear()) {
        throw RejectedUtility("unbounded objective (linear u): expected utility maximization fails for linear u");
    }
    const auto g = problem.u.growth();
    if (!problem.u.bounded_above() && !(g && g->alpha < 1.0)) {
        throw RejectedUtility("utility is neither bounded above nor certified with growth exponent alpha < 1");
    }
}

std::string to_string(SolverStatus s) {
    switch (s) {
        case SolverStatus::converged:
            return "converged";
        case SolverStatus::max_iter:
            return "max-iter";
        case SolverStatus::diverging:
            return "diverging-objective";
    }
    return "max-iter";
}

ObjectiveEval objective_and_gradient(std::span<const double> phi, std::span<const double> b, const Utility& u,
                                     const SamplePool& pool) {
    const std::size_t n = pool.size();
    const std::size_t k = phi.size();
    std::vector<double> v(n);
    value_samples_dense(phi, b, pool, v);
    std::vector<double> uv(n);
    std::vector<double> du(n);
    std::vector<unsigned char> ok(n, 1);
    for_each_block(n, kRowBlock, [&](std::size_t, std::size_t r0, std::size_t r1) {
        for (std::size_t j = r0; j < r1; ++j) {
            uv[j] = u(v[j]);
            du[j] = u.deriv(v[j]);
            ok[j] = std::isfinite(uv[j]) && std::isfinite(du[j]) ? 1 : 0;
        }
    });
    ObjectiveEval e;
    const std::size_t used = static_cast<std::size_t>(std::count(ok.begin(), ok.end(), 1));
    e.flagged = n - used;
    e.value = blocked_mean_se(n, ok, used, [&](std::size_t j) { return uv[j]; });
    e.grad.resize(k);
    e.grad_se.resize(k);
    for (std::size_t l = 0; l < k; ++l) {
        const double* col = pool.column(l + 1).data();
        const double bl = b[l];
        const MeanSe g = blocked_mean_se(n, ok, used, [&](std::size_t j) { return du[j] * (col[j] - bl); });
        e.grad[l] = g.mean;
        e.grad_se[l] = g.se;
    }
    return e;
}

OptimizationResult maximize_segment(const OptimizationProblem& problem, const SamplePool& pool) {
    check_problem(problem);
    const std::size_t k = problem.k;
    if (pool.first_index() != 1 || pool.count() < k) {
        throw std::invalid_argument("pool does not cover indices 1.." + std::to_string(k));
    }
    const SolverOptions& opt = problem.options;
    const std::vector<double> b = problem.b.head(k);
    const double radius = opt.radius.value_or(1e3 * (1.0 + norm2(b)));

    std::vector<double> x(k, 0.0);
    if (problem.initial) {
        for (std::size_t i = 0; i < std::min(k, problem.initial->size()); ++i) {
            x[i] = (*problem.initial)[i];
        }
    }

    OptimizationResult res;
    res.pool_descriptor = pool_descriptor(pool, k);
    ObjectiveEval cur = objective_and_gradient(x, b, problem.u, pool);
    if (static_cast<double>(cur.flagged) > opt.max_flagged_fraction * static_cast<double>(pool.size())) {
        throw ObjectiveOverflow(std::to_string(cur.flagged) + " of " + std::to_string(pool.size()) +
                                " samples give a non-finite u(V) at the start point");
    }

    std::vector<double> h(k * k, 0.0);
    auto reset_h = [&] {
        std::fill(h.begin(), h.end(), 0.0);
        for (std::size_t i = 0; i < k; ++i) {
            h[i * k + i] = 1.0;
        }
    };
    reset_h();
    bool scaled = false;

    std::vector<double> d(k);
    std::vector<double> xt(k);
    std::vector<double> s(k);
    std::vector<double> y(k);
    std::vector<double> hy(k);
    bool done = false;
    for (std::size_t iter = 0; iter <= opt.max_iter; ++iter) {
        const double max_g = max_abs(cur.grad);
        res.trace.push_back({iter, cur.value.mean, max_g, 0.0, norm2(x)});
        if (max_g <= opt.grad_tol) {
            res.status = SolverStatus::converged;
            done = true;
            break;
        }
        if (iter == opt.max_iter) {
            break;
        }
        for (std::size_t i = 0; i < k; ++i) {
            d[i] = dot(std::span<const double>(h.data() + i * k, k), cur.grad);
        }
        double gd = dot(cur.grad, d);
        if (!(gd > 0.0) || !std::isfinite(gd)) {
            reset_h();
            scaled = false;
            d = cur.grad;
            gd = dot(cur.grad, d);
        }
        double t = 1.0;
        bool accepted = false;
        ObjectiveEval trial;
        for (std::size_t bt = 0; bt < opt.max_backtracks; ++bt) {
            for (std::size_t i = 0; i < k; ++i) {
                xt[i] = x[i] + t * d[i];
            }
            trial = objective_and_gradient(xt, b, problem.u, pool);
            if (trial.flagged <= cur.flagged && trial.value.mean >= cur.value.mean + opt.armijo * t * gd) {
                accepted = true;
                break;
            }
            t *= opt.backtrack;
        }
        if (!accepted) {
            res.message = "line search stalled";
            res.status = foc_within(cur, opt.grad_tol) ? SolverStatus::converged : SolverStatus::max_iter;
            done = true;
            break;
        }
        res.trace.back().step = t;
        // BFGS on the minimization of -E u(V): y = grad(-f)(xt) - grad(-f)(x)
        for (std::size_t i = 0; i < k; ++i) {
            s[i] = xt[i] - x[i];
            y[i] = cur.grad[i] - trial.grad[i];
        }
        const double sy = dot(s, y);
        const double yy = dot(y, y);
        if (sy > 1e-14 * norm2(s) * std::sqrt(yy) && yy > 0.0) {
            if (!scaled) {
                reset_h();
                for (std::size_t i = 0; i < k; ++i) {
                    h[i * k + i] = sy / yy;
                }
                scaled = true;
            }
            for (std::size_t i = 0; i < k; ++i) {
                hy[i] = dot(std::span<const double>(h.data() + i * k, k), y);
            }
            const double yhy = dot(y, hy);
            const double rho = 1.0 / sy;
            for (std::size_t i = 0; i < k; ++i) {
                for (std::size_t j = 0; j < k; ++j) {
                    h[i * k + j] += rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
                }
            }
        }
        x = xt;
        cur = std::move(trial);
        if (norm2(x) > radius) {
            res.status = SolverStatus::diverging;
            res.message = "||phi|| exceeded the divergence radius " + format_double(radius) +
                          " while the objective kept improving";
            res.trace.push_back({iter + 1, cur.value.mean, max_abs(cur.grad), 0.0, norm2(x)});
            done = true;
            break;
        }
    }
    if (!done) {
        res.status = foc_within(cur, opt.grad_tol) ? SolverStatus::converged : SolverStatus::max_iter;
        res.message = "iteration limit reached";
    }
    res.phi_star = x;
    res.value = cur.value;
    res.foc = cur.grad;
    res.foc_se = cur.grad_se;
    res.max_foc = max_abs(cur.grad);
    res.max_foc_se = cur.grad_se.empty() ? 0.0 : *std::max_element(cur.grad_se.begin(), cur.grad_se.end());
    res.flagged = cur.flagged;
    return res;
}

OptimizationResult maximize_segment(const OptimizationProblem& problem) {
    check_problem(problem);
    const SamplePool pool = SamplePool::build(problem.family, problem.k, problem.n, problem.seed);
    return maximize_segment(problem, pool);
}

namespace {

std::vector<double> utility_samples(std::span<const double> phi, std::span<const double> b, const Utility& u,
                                    const SamplePool& pool) {
    std::vector<double> v(pool.size());
    value_samples_dense(phi, b, pool, v);
    for (double& x : v) {
        x = u(x);
    }
    return v;
}

}  // namespace

SweepReport segment_sweep(const OptimizationProblem& problem, const std::vector<std::size_t>& k_list,
                          const SweepTolerances& tol) {
    if (k_list.empty() || !std::is_sorted(k_list.begin(), k_list.end()) || k_list.front() == 0 ||
        std::adjacent_find(k_list.begin(), k_list.end()) != k_list.end()) {
        throw std::invalid_argument("segment_sweep needs a strictly ascending k list starting at >= 1");
    }
    check_problem(problem);
    const std::size_t k_max = k_list.back();
    const SamplePool pool = SamplePool::build(problem.family, k_max, problem.n, problem.seed);
    const std::vector<double> b = problem.b.head(k_max);

    SweepReport rep;
    std::vector<double> prev_phi;
    std::vector<double> prev_u;
    for (std::size_t k : k_list) {
        OptimizationProblem pk = problem;
        pk.k = k;
        if (!prev_phi.empty()) {
            pk.initial = prev_phi;
        }
        SweepRow row;
        row.k = k;
        row.result = maximize_segment(pk, pool);
        const std::span<const double> bk(b.data(), k);
        std::vector<double> cur_u = utility_samples(row.result.phi_star, bk, problem.u, pool);
        if (!prev_phi.empty()) {
            std::vector<double> diff(cur_u.size());
            for (std::size_t j = 0; j < diff.size(); ++j) {
                diff[j] = cur_u[j] - prev_u[j];
            }
            row.increment = mean_se(diff);
            CompensatedSum dist;
            for (std::size_t i = 0; i < prev_phi.size(); ++i) {
                const double dd = row.result.phi_star[i] - prev_phi[i];
                dist.add(dd * dd);
            }
            row.distance = std::sqrt(dist.value());
        }
        prev_phi = row.result.phi_star;
        prev_u = std::move(cur_u);
        rep.rows.push_back(std::move(row));
    }
    const SweepRow& last = rep.rows.back();
    if (last.increment && last.distance) {
        rep.converged = std::abs(last.increment->mean) <= std::max(tol.value, 3.0 * last.increment->se) &&
                        *last.distance <= tol.distance;
        rep.verdict = rep.converged ? "converged (value increment and phi distance below tolerance)"
                                    : "not converged on this k grid";
    } else {
        rep.verdict = "single segment";
    }
    return rep;
}

std::vector<GapRow> truncation_gap(std::span<const double> phi_star, const std::vector<std::size_t>& n_list,
                                   std::span<const double> b, const Utility& u, const SamplePool& pool) {
    const std::vector<double> full = utility_samples(phi_star, b, u, pool);
    std::vector<GapRow> out;
    for (std::size_t n : n_list) {
        const std::size_t m = std::min(n, phi_star.size());
        const std::vector<double> trunc = utility_samples(phi_star.subspan(0, m), b, u, pool);
        std::vector<double> diff(full.size());
        for (std::size_t j = 0; j < diff.size(); ++j) {
            diff[j] = full[j] - trunc[j];
        }
        out.push_back({n, mean_se(diff)});
    }
    return out;
}

}  // namespace apm
