#pragma once

#include "apm/market_model.hpp"
#include "apm/numeric.hpp"
#include "apm/shock_library.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

namespace apm {

/// Frozen shock pool for indices first_index..first_index+count-1.
class SamplePool {
public:
    SamplePool() = default;

    /// Antithetic pairing (rows n/2.. mirror rows 0..n/2-1) is allowed for
    /// symmetric continuous families only and needs even n.
    [[nodiscard]] static SamplePool build(const ShockFamily& family, std::size_t count, std::size_t n,
                                          std::uint64_t seed, std::size_t first_index = 1, bool antithetic = false);

    [[nodiscard]] std::size_t size() const { return shocks_.rows; }
    [[nodiscard]] std::size_t first_index() const { return shocks_.first_index; }
    [[nodiscard]] std::size_t last_index() const { return shocks_.first_index + shocks_.cols - 1; }
    [[nodiscard]] std::size_t count() const { return shocks_.cols; }
    [[nodiscard]] bool covers(std::size_t i) const { return i >= first_index() && i <= last_index(); }
    [[nodiscard]] std::uint64_t seed() const { return seed_; }
    [[nodiscard]] bool antithetic() const { return antithetic_; }
    [[nodiscard]] const ShockFamily& family() const { return family_; }

    [[nodiscard]] std::span<const double> column(std::size_t i) const { return shocks_.column(i); }

private:
    ShockFamily family_;
    ShockMatrix shocks_;
    std::uint64_t seed_ = 0;
    bool antithetic_ = false;
};

struct TruncationBound {
    std::size_t n = 0;            // last index evaluated on the pool
    double mean_bound = 0.0;      // |sum_{i>n} phi_i b_i| <= this
    double tail_variance = 0.0;   // sum_{i>n} phi_i^2
};

struct ValueSamples {
    std::vector<double> values;
    std::optional<TruncationBound> truncation;
};

/// V_j = sum_i phi_i (eps_{j,i} - b_i) over indices 1..k of the pool.
/// Pool must start at index 1. Strategies with a rule tail past the pool
/// are truncated and the analytic bound is attached.
[[nodiscard]] ValueSamples value_samples(const Strategy& phi, const ReducedParams& b, const SamplePool& pool);

/// Same as above for a dense coefficient vector phi_1..phi_k (k <= pool count).
void value_samples_dense(std::span<const double> phi, std::span<const double> b, const SamplePool& pool,
                         std::span<double> out);

struct ValueMoments {
    double mean = 0.0;      // EV = -sum phi_i b_i
    double variance = 0.0;  // sum phi_i^2
};

/// Analytic moments; throws std::domain_error for divergent or unknown tails.
[[nodiscard]] ValueMoments value_moments(const Strategy& phi, const ReducedParams& b);

/// Cauchy-Schwarz bound on the part of V(phi) past index n.
[[nodiscard]] TruncationBound truncation_bound(const Strategy& phi, const ReducedParams& b, std::size_t n);

class DensityNotNormalized : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Weighted mean sum_j w_j V_j / n with its standard error.
/// Throws DensityNotNormalized when mean(w) differs from 1 by more than 1e-8.
[[nodiscard]] MeanSe expectation_under_density(std::span<const double> values, std::span<const double> weights);

/// CSV export: comment header (seed, family, index range) then one row per sample.
void write_pool_csv(std::ostream& os, const SamplePool& pool);

}  // namespace apm
