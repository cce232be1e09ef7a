#pragma once

#include "apm/sequence.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace apm {

class InvalidParameter : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raw APM coefficients. Returns are R_i = mu_i + bar_beta_i eps_i for i <= m and
/// R_i = mu_i + sum_j beta_i^j eps_j + bar_beta_i eps_i for i > m; riskless rate 0.
///
/// `beta[r]` is the factor loading row of asset m + 1 + r. Assets past the last
/// explicit row carry no factor loading.
struct MarketParams {
    std::size_t m = 1;
    Sequence mu;
    std::vector<std::vector<double>> beta;
    Sequence bar_beta;

    /// Throws InvalidParameter on a zero bar_beta in 1..k or malformed beta rows.
    void validate(std::size_t k) const;

    [[nodiscard]] std::span<const double> loading(std::size_t i) const;
    [[nodiscard]] std::size_t last_loaded_asset() const { return m + beta.size(); }
};

/// Reduced market-price-of-risk sequence b with memoized partial Sharpe sums.
class ReducedParams {
public:
    ReducedParams() = default;
    explicit ReducedParams(Sequence b);

    [[nodiscard]] const Sequence& b() const { return b_; }
    [[nodiscard]] double at(std::size_t i) const { return b_.at(i); }
    [[nodiscard]] std::vector<double> head(std::size_t k) const { return b_.head(k); }

    /// S_k for k within the memoized prefix; extends through the tail otherwise.
    [[nodiscard]] double partial_sharpe(std::size_t k) const;

private:
    Sequence b_;
    std::vector<double> partial_;  // partial_[k] = S_k, partial_[0] = 0
};

/// b_1..b_k; attaches an analytic tail when every asset past k is
/// idiosyncratic and mu, bar_beta are rule-driven there.
[[nodiscard]] ReducedParams reduce_params(const MarketParams& params, std::size_t k);

enum class SeriesStatus { summable, diverging, unknown };

[[nodiscard]] std::string to_string(SeriesStatus s);

struct SharpeSum {
    std::size_t k = 0;
    double partial = 0.0;                // S_k
    SeriesStatus status = SeriesStatus::unknown;
    std::optional<double> total;         // S_infinity when summable
};

[[nodiscard]] SharpeSum sharpe_sum(const ReducedParams& reduced, std::size_t k);

/// Factor-space strategy phi with cached squared norm.
class Strategy {
public:
    Strategy() = default;
    explicit Strategy(Sequence phi);

    [[nodiscard]] static Strategy finite(std::vector<double> phi) { return Strategy(Sequence::finite(std::move(phi))); }

    [[nodiscard]] const Sequence& phi() const { return phi_; }
    [[nodiscard]] double at(std::size_t i) const { return phi_.at(i); }
    [[nodiscard]] double norm_sq() const { return norm_sq_; }
    /// Max index with phi_i != 0 for finite-support strategies.
    [[nodiscard]] std::optional<std::size_t> segment() const { return phi_.support(); }

private:
    Sequence phi_;
    double norm_sq_ = 0.0;
};

/// Raw portfolio in segment k: psi_0 (riskless) and psi_1..psi_k.
struct RawPortfolio {
    std::vector<double> psi;  // psi[0] is the riskless position

    [[nodiscard]] std::size_t segment() const { return psi.empty() ? 0 : psi.size() - 1; }
};

/// psi_1..psi_k -> phi with V(psi) = sum_i phi_i (eps_i - b_i).
[[nodiscard]] Strategy raw_to_factor(std::span<const double> psi, const MarketParams& params);

/// Inverse on assets 1..k, psi_0 = -sum psi_i.
[[nodiscard]] RawPortfolio factor_to_raw(const Strategy& phi, const MarketParams& params);

}  // namespace apm
