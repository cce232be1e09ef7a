#pragma once

#include "apm/market_model.hpp"
#include "apm/shock_library.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace apm {

struct ArbitrageRow {
    std::size_t k = 0;
    double sharpe = 0.0;               // S_k
    std::optional<double> ev;          // EV of the constructed strategy
    std::optional<double> variance;    // var V of the constructed strategy
};

struct ArbitrageReport {
    std::vector<ArbitrageRow> rows;
    SeriesStatus verdict = SeriesStatus::unknown;
    std::optional<double> sharpe_total;
    bool constructed = false;
    std::string note;
};

/// phi_i(k) = -b_i S_k^{-3/4} when sum b_i^2 diverges.
[[nodiscard]] Strategy arbitrage_strategy(const ReducedParams& b, std::size_t k);

[[nodiscard]] ArbitrageReport asymptotic_arbitrage_construct(const ReducedParams& b,
                                                             const std::vector<std::size_t>& k_grid);

class WrongFamily : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline const std::vector<double> kTrajectoryQuantiles = {0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99};

struct TrajectoryRow {
    std::size_t k = 0;
    std::vector<double> quantiles;  // at kTrajectoryQuantiles
    double mean = 0.0;
    double fraction_above = 0.0;    // fraction of paths with value > threshold
    double analytic_mean = 0.0;
    double analytic_variance = 0.0;
    double no_jump_value = 0.0;        // path value when every shock takes its up value
    double no_jump_probability = 0.0;  // prod_{i=2}^k (1 - 1/i^2) = (k+1)/(2k)
};

struct TrajectoryReport {
    double threshold = 0.0;
    std::size_t paths = 0;
    std::uint64_t seed = 0;
    std::vector<TrajectoryRow> rows;
    std::string note;
};

/// Paths of sum_{i=2}^k eps_i under the aba family; path p uses draw p of every index.
[[nodiscard]] TrajectoryReport free_lunch_demo_aba(const ShockFamily& family, const std::vector<std::size_t>& k_grid,
                                                   std::uint64_t seed, std::size_t n_paths, double threshold);

/// Paths of (1/ln k) sum_{i=2}^k eps_i; threshold is the band half-width around 1.
[[nodiscard]] TrajectoryReport closedness_failure_demo(const ShockFamily& family,
                                                       const std::vector<std::size_t>& k_grid, std::uint64_t seed,
                                                       std::size_t n_paths, double band = 0.15);

/// Unit-norm coefficients phi_tilde(n) of length n.
using NormalizedRule = std::function<std::vector<double>(std::size_t n)>;

[[nodiscard]] NormalizedRule uniform_rule();

struct CltRow {
    std::size_t n = 0;
    double d = 0.0;             // sum phi_tilde_i b_i
    double ks = 0.0;            // sup |F_emp - N(-d, 1)|
    double ks_band = 0.0;       // 1.36 / sqrt(samples)
    double p_negative = 0.0;    // empirical P(V < 0)
    double f_limit = 0.0;       // Phi(d)
};

struct CltReport {
    std::vector<CltRow> rows;
    std::optional<double> d_limit;
    std::string note;
};

class RejectedRule : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// `rule_name` is used to judge whether d has a finite limit ("uniform" is analyzed analytically).
[[nodiscard]] CltReport clt_normalized_check(const NormalizedRule& rule, const std::string& rule_name,
                                             const ReducedParams& b, const ShockFamily& family,
                                             const std::vector<std::size_t>& n_grid, std::size_t samples,
                                             std::uint64_t seed);

/// Kolmogorov-Smirnov distance of a sample to N(mean, 1); sorts a copy.
[[nodiscard]] double ks_distance_normal(std::vector<double> x, double mean);

/// Type 7 sample quantile of sorted data.
[[nodiscard]] double sorted_quantile(const std::vector<double>& sorted, double q);

}  // namespace apm
