#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>

namespace apm {

/// Neumaier-compensated accumulator. Order of add() calls fixes the result.
class CompensatedSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

[[nodiscard]] double compensated_dot(std::span<const double> a, std::span<const double> b);

/// Standard normal CDF, accurate in both tails.
[[nodiscard]] inline double normal_cdf(double x) noexcept {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

[[nodiscard]] inline double normal_pdf(double x) noexcept {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * 3.14159265358979323846);
}

/// Hurwitz zeta sum_{j>=0} (q+j)^{-s} for s > 1, q > 0 (Euler-Maclaurin).
[[nodiscard]] double hurwitz_zeta(double s, double q);

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
    double sd = 0.0;
};

/// Sample mean with standard error; blocked summation in fixed order.
[[nodiscard]] MeanSe mean_se(std::span<const double> x);

/// Shortest round-trip decimal representation (deterministic across runs).
[[nodiscard]] std::string format_double(double x);

}  // namespace apm
