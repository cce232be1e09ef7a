#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace apm {

/// Closed-form index rule i -> scale * ratio^i * i^(-power), i >= 1.
///
/// The family is closed under products and quotients, which lets tails of
/// derived sequences (b from mu and bar_beta, phi*b, phi^2) stay analytic.
struct TailRule {
    double scale = 0.0;
    double ratio = 1.0;
    double power = 0.0;

    [[nodiscard]] double operator()(std::size_t i) const;
    [[nodiscard]] TailRule squared() const { return {scale * scale, ratio * ratio, 2.0 * power}; }

    [[nodiscard]] static TailRule constant(double c) { return {c, 1.0, 0.0}; }
    [[nodiscard]] static TailRule geometric(double scale, double ratio) { return {scale, ratio, 0.0}; }
    [[nodiscard]] static TailRule power_law(double scale, double exponent) { return {scale, 1.0, exponent}; }
};

[[nodiscard]] TailRule operator*(const TailRule& a, const TailRule& b);
[[nodiscard]] TailRule operator/(const TailRule& a, const TailRule& b);

struct TailSum {
    bool converges = false;
    double value = 0.0;  // meaningful only when converges
};

/// sum_{i > n} rule(i); absolute convergence required.
[[nodiscard]] TailSum tail_sum(const TailRule& rule, std::size_t n);

/// What a sequence holds beyond its explicit prefix.
enum class TailKind {
    zero,     // finite support
    rule,     // analytic continuation via TailRule
    unknown,  // truncated; values beyond the prefix are not available
};

/// Sequence indexed from 1: dense prefix plus a tail description.
class Sequence {
public:
    Sequence() = default;

    [[nodiscard]] static Sequence finite(std::vector<double> values);
    [[nodiscard]] static Sequence truncated(std::vector<double> values);
    [[nodiscard]] static Sequence with_rule(std::vector<double> prefix, TailRule rule);

    /// i >= 1. Throws std::out_of_range past a truncated prefix.
    [[nodiscard]] double at(std::size_t i) const;
    [[nodiscard]] bool defined_at(std::size_t i) const;

    [[nodiscard]] std::span<const double> prefix() const { return prefix_; }
    [[nodiscard]] std::size_t prefix_size() const { return prefix_.size(); }
    [[nodiscard]] TailKind tail_kind() const { return kind_; }
    [[nodiscard]] const std::optional<TailRule>& rule() const { return rule_; }

    /// Values 1..k materialized.
    [[nodiscard]] std::vector<double> head(std::size_t k) const;

    /// Index of the last nonzero entry when the support is finite.
    [[nodiscard]] std::optional<std::size_t> support() const;

    /// sum_{i > n} x_i^2 (exact for rules, 0 for zero tails, nullopt if unknown or divergent).
    [[nodiscard]] std::optional<double> tail_norm_sq(std::size_t n) const;

    [[nodiscard]] std::string describe() const;

private:
    std::vector<double> prefix_;
    TailKind kind_ = TailKind::zero;
    std::optional<TailRule> rule_;
};

/// sum_i a_i b_i, analytic when both tails are rules or either is zero.
/// Throws std::domain_error if a needed tail is unknown or divergent.
[[nodiscard]] double inner_product(const Sequence& a, const Sequence& b);

}  // namespace apm
