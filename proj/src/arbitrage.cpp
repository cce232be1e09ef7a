#include "apm/arbitrage.hpp"

#include "apm/numeric.hpp"
#include "apm/parallel.hpp"
#include "apm/valuation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace apm {

Strategy arbitrage_strategy(const ReducedParams& b, std::size_t k) {
    const double s = b.partial_sharpe(k);
    if (!(s > 0.0)) {
        throw std::invalid_argument("arbitrage construction needs S_k > 0");
    }
    const double scale = std::pow(s, -0.75);
    std::vector<double> phi = b.head(k);
    for (double& x : phi) {
        x = -x * scale;
    }
    return Strategy::finite(std::move(phi));
}

ArbitrageReport asymptotic_arbitrage_construct(const ReducedParams& b, const std::vector<std::size_t>& k_grid) {
    if (k_grid.empty() || k_grid.front() == 0 || !std::is_sorted(k_grid.begin(), k_grid.end())) {
        throw std::invalid_argument("k grid must be ascending and start at >= 1");
    }
    ArbitrageReport rep;
    const SharpeSum total = sharpe_sum(b, k_grid.back());
    rep.verdict = total.status;
    rep.sharpe_total = total.total;
    rep.constructed = rep.verdict == SeriesStatus::diverging;
    for (std::size_t k : k_grid) {
        ArbitrageRow row;
        row.k = k;
        row.sharpe = b.partial_sharpe(k);
        if (rep.constructed && row.sharpe > 0.0) {
            const ValueMoments m = value_moments(arbitrage_strategy(b, k), b);
            row.ev = m.mean;
            row.variance = m.variance;
        }
        rep.rows.push_back(row);
    }
    switch (rep.verdict) {
        case SeriesStatus::diverging:
            rep.note = "sum b_i^2 diverges: phi_i(k) = -b_i S_k^(-3/4) has EV = S_k^(1/4) -> inf, var = S_k^(-1/2) -> 0";
            break;
        case SeriesStatus::summable:
            rep.note = "sum b_i^2 converges: no asymptotic arbitrage";
            break;
        case SeriesStatus::unknown:
            rep.note = "b has no analytic tail: a finite prefix cannot decide divergence; supply a tail rule";
            break;
    }
    return rep;
}

double sorted_quantile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) {
        return std::nan("");
    }
    const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double ks_distance_normal(std::vector<double> x, double mean) {
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double f = normal_cdf(x[j] - mean);
        d = std::max({d, f - static_cast<double>(j) / n, static_cast<double>(j + 1) / n - f});
    }
    return d;
}

namespace {

/// values[g][p] = sum_{i=2}^{k_grid[g]} eps_i for path p.
std::vector<std::vector<double>> aba_paths(const ShockFamily& family, const std::vector<std::size_t>& k_grid,
                                           std::uint64_t seed, std::size_t n_paths) {
    if (!family.holds_only(3)) {
        throw WrongFamily("the demo needs the two_point_aba shock family, got " + family.describe());
    }
    if (k_grid.empty() || k_grid.front() < 2 || !std::is_sorted(k_grid.begin(), k_grid.end())) {
        throw std::invalid_argument("k grid must be ascending with k >= 2");
    }
    if (n_paths == 0) {
        throw std::invalid_argument("need at least one path");
    }
    std::vector<std::vector<double>> values(k_grid.size(), std::vector<double>(n_paths));
    constexpr std::size_t kPathBlock = 64;
    for_each_block(n_paths, kPathBlock, [&](std::size_t, std::size_t p0, std::size_t p1) {
        const std::size_t len = p1 - p0;
        std::vector<double> acc(len, 0.0);
        std::vector<double> comp(len, 0.0);
        std::vector<double> buf(len);
        std::size_t g = 0;
        for (std::size_t i = 2; i <= k_grid.back(); ++i) {
            family.fill(seed, i, p0, buf);
            for (std::size_t j = 0; j < len; ++j) {
                const double t = acc[j] + buf[j];
                comp[j] += std::abs(acc[j]) >= std::abs(buf[j]) ? (acc[j] - t) + buf[j] : (buf[j] - t) + acc[j];
                acc[j] = t;
            }
            while (g < k_grid.size() && k_grid[g] == i) {
                for (std::size_t j = 0; j < len; ++j) {
                    values[g][p0 + j] = acc[j] + comp[j];
                }
                ++g;
            }
        }
    });
    return values;
}

double no_jump_sum(std::size_t k) {
    CompensatedSum s;
    for (std::size_t i = 2; i <= k; ++i) {
        s.add(aba_two_point(i).up);
    }
    return s.value();
}

TrajectoryRow summarize(std::size_t k, std::vector<double> v, double threshold, double scale) {
    TrajectoryRow row;
    row.k = k;
    CompensatedSum s;
    std::size_t above = 0;
    for (double x : v) {
        s.add(x);
        above += x > threshold ? 1 : 0;
    }
    row.mean = s.value() / static_cast<double>(v.size());
    row.fraction_above = static_cast<double>(above) / static_cast<double>(v.size());
    std::sort(v.begin(), v.end());
    for (double q : kTrajectoryQuantiles) {
        row.quantiles.push_back(sorted_quantile(v, q));
    }
    row.analytic_mean = 0.0;
    row.analytic_variance = static_cast<double>(k - 1) * scale * scale;
    row.no_jump_value = no_jump_sum(k) * scale;
    row.no_jump_probability = static_cast<double>(k + 1) / (2.0 * static_cast<double>(k));
    return row;
}

}  // namespace

TrajectoryReport free_lunch_demo_aba(const ShockFamily& family, const std::vector<std::size_t>& k_grid,
                                     std::uint64_t seed, std::size_t n_paths, double threshold) {
    auto values = aba_paths(family, k_grid, seed, n_paths);
    TrajectoryReport rep;
    rep.threshold = threshold;
    rep.paths = n_paths;
    rep.seed = seed;
    for (std::size_t g = 0; g < k_grid.size(); ++g) {
        rep.rows.push_back(summarize(k_grid[g], std::move(values[g]), threshold, 1.0));
    }
    rep.note = "b_i = 0 for every i, so sum b_i^2 = 0, yet V(phi(k)) = sum_{i=2}^k eps_i drifts upward: "
               "an asymptotic free lunch without asymptotic arbitrage";
    return rep;
}

TrajectoryReport closedness_failure_demo(const ShockFamily& family, const std::vector<std::size_t>& k_grid,
                                         std::uint64_t seed, std::size_t n_paths, double band) {
    auto values = aba_paths(family, k_grid, seed, n_paths);
    TrajectoryReport rep;
    rep.threshold = band;
    rep.paths = n_paths;
    rep.seed = seed;
    for (std::size_t g = 0; g < k_grid.size(); ++g) {
        const double scale = 1.0 / std::log(static_cast<double>(k_grid[g]));
        for (double& x : values[g]) {
            x *= scale;
        }
        // fraction_above counts paths outside the band around 1
        TrajectoryRow row = summarize(k_grid[g], values[g], std::numeric_limits<double>::infinity(), scale);
        std::size_t outside = 0;
        for (double x : values[g]) {
            outside += std::abs(x - 1.0) > band ? 1 : 0;
        }
        row.fraction_above = static_cast<double>(outside) / static_cast<double>(values[g].size());
        rep.rows.push_back(std::move(row));
    }
    rep.note = "V(lambda(k)) = (1/ln k) sum_{i=2}^k eps_i tends to 1 a.s. while var V(lambda(k)) = (k-1)/ln^2 k "
               "explodes; the limit X = 1 satisfies E[X eps_i] = 0 for all i, so it is not a portfolio value";
    return rep;
}

NormalizedRule uniform_rule() {
    return [](std::size_t n) { return std::vector<double>(n, 1.0 / std::sqrt(static_cast<double>(n))); };
}

namespace {

/// Whether (1/sqrt n) sum_{i<=n} b_i has a finite limit; returns it when known.
std::optional<double> uniform_rule_limit(const ReducedParams& b, std::string& why) {
    const Sequence& s = b.b();
    switch (s.tail_kind()) {
        case TailKind::zero:
            return 0.0;
        case TailKind::unknown:
            why = "b has no analytic tail; d(n) is reported per n but its limit is unknown";
            return std::nullopt;
        case TailKind::rule:
            break;
    }
    const TailRule r = *s.rule();
    const double a = std::abs(r.ratio);
    if (r.scale == 0.0 || a < 1.0) {
        return 0.0;
    }
    if (r.ratio == -1.0 && r.power >= 0.0) {
        return 0.0;  // alternating, partial sums bounded
    }
    if (a > 1.0 || r.power < 0.5) {
        throw RejectedRule("d(n) = sum phi_tilde_i(n) b_i has no finite limit for this b (grows like n^" +
                           format_double(0.5 - r.power) + ")");
    }
    if (r.power == 0.5) {
        return 2.0 * r.scale;
    }
    return 0.0;
}

}  // namespace

CltReport clt_normalized_check(const NormalizedRule& rule, const std::string& rule_name, const ReducedParams& b,
                               const ShockFamily& family, const std::vector<std::size_t>& n_grid, std::size_t samples,
                               std::uint64_t seed) {
    if (n_grid.empty() || samples < 2) {
        throw std::invalid_argument("clt check needs a nonempty n grid and at least 2 samples");
    }
    CltReport rep;
    if (rule_name == "uniform") {
        rep.d_limit = uniform_rule_limit(b, rep.note);
    } else {
        rep.note = "rule '" + rule_name + "' is not analyzed; d(n) is reported per n";
    }
    for (std::size_t n : n_grid) {
        const std::vector<double> phi = rule(n);
        CompensatedSum norm;
        for (double x : phi) {
            norm.add(x * x);
        }
        if (phi.size() != n || std::abs(norm.value() - 1.0) > 1e-9) {
            throw RejectedRule("rule does not produce unit-norm coefficients at n = " + std::to_string(n));
        }
        const std::vector<double> bn = b.head(n);
        const double d = compensated_dot(phi, bn);

        std::vector<double> v(samples);
        constexpr std::size_t kSampleBlock = 4096;
        for_each_block(samples, kSampleBlock, [&](std::size_t, std::size_t r0, std::size_t r1) {
            const std::size_t len = r1 - r0;
            std::vector<double> acc(len, 0.0);
            std::vector<double> comp(len, 0.0);
            std::vector<double> buf(len);
            for (std::size_t i = 1; i <= n; ++i) {
                if (phi[i - 1] == 0.0) {
                    continue;
                }
                family.fill(seed, i, r0, buf);
                for (std::size_t j = 0; j < len; ++j) {
                    const double x = phi[i - 1] * (buf[j] - bn[i - 1]);
                    const double t = acc[j] + x;
                    comp[j] += std::abs(acc[j]) >= std::abs(x) ? (acc[j] - t) + x : (x - t) + acc[j];
                    acc[j] = t;
                }
            }
            for (std::size_t j = 0; j < len; ++j) {
                v[r0 + j] = acc[j] + comp[j];
            }
        });
        CltRow row;
        row.n = n;
        row.d = d;
        std::size_t negative = 0;
        for (double x : v) {
            negative += x < 0.0 ? 1 : 0;
        }
        row.p_negative = static_cast<double>(negative) / static_cast<double>(samples);
        row.ks = ks_distance_normal(std::move(v), -d);
        row.ks_band = 1.36 / std::sqrt(static_cast<double>(samples));
        row.f_limit = normal_cdf(rep.d_limit.value_or(d));
        rep.rows.push_back(row);
    }
    return rep;
}

}  // namespace apm
