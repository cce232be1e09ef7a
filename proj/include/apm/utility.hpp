#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace apm {

class InvalidUtility : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// u(x) = eps x - 1 for x < 0, -(1 + x)^-eps for x >= 0.
struct ProofU1 {
    double epsilon = 0.5;
};

/// u(x) = kappa x + 1 for x < 0, (1 + x)^kappa for x >= 0.
struct ProofUn {
    double kappa = 0.5;
};

/// u(x) = (1 + x)^alpha - 1 for x >= 0, -lambda |x|^p - alpha |x| for x < 0.
/// alpha = 0 leaves gains flat, so u is bounded above.
struct PowerModerate {
    double alpha = 0.0;
    double p = 2.0;
    double lambda = 1.0;
};

/// u(x) = 1 - exp(-x).
struct ExponentialBounded {};

/// u(x) = slope x. Accepted by the type, rejected by the optimizer.
struct LinearUtility {
    double slope = 1.0;
};

/// Piecewise-linear u through the origin; slopes[j] applies between
/// breakpoints[j-1] and breakpoints[j]. Slopes are nonnegative and nonincreasing.
struct CustomPiecewise {
    std::vector<double> breakpoints;
    std::vector<double> slopes;
};

using UtilityKind = std::variant<ProofU1, ProofUn, PowerModerate, ExponentialBounded, LinearUtility, CustomPiecewise>;

/// u(x) <= c1 (x^alpha + 1) for x >= 0.
struct GrowthCertificate {
    double c1 = 1.0;
    double alpha = 0.0;
};

/// Concave nondecreasing utility, normalized so that u(0) = 0.
class Utility {
public:
    Utility() : Utility(ExponentialBounded{}) {}
    explicit Utility(UtilityKind kind);

    [[nodiscard]] static Utility proof_u1(double epsilon);
    [[nodiscard]] static Utility proof_un(double kappa);
    [[nodiscard]] static Utility power_moderate(double alpha, double p, double lambda);
    [[nodiscard]] static Utility exponential_bounded() { return Utility(ExponentialBounded{}); }
    [[nodiscard]] static Utility linear(double slope = 1.0) { return Utility(LinearUtility{slope}); }
    [[nodiscard]] static Utility custom(std::vector<double> breakpoints, std::vector<double> slopes);

    /// lambda u; any additive constant disappears under normalization.
    [[nodiscard]] Utility scaled(double lambda) const;

    [[nodiscard]] double operator()(double x) const { return scale_ * (raw_value(x) - raw_at_zero_); }
    /// Unnormalized family formula (e.g. u1(0) = -1).
    [[nodiscard]] double raw_value(double x) const;

    /// Derivative; at a declared kink the average of the one-sided slopes.
    [[nodiscard]] double deriv(double x) const;
    [[nodiscard]] double left_deriv(double x) const;
    [[nodiscard]] double right_deriv(double x) const;

    [[nodiscard]] const UtilityKind& kind() const { return kind_; }
    [[nodiscard]] double scale() const { return scale_; }
    [[nodiscard]] std::string name() const;
    [[nodiscard]] std::string describe() const;
    [[nodiscard]] std::vector<double> kinks() const;

    [[nodiscard]] bool is_linear() const;
    [[nodiscard]] bool bounded_above() const;
    [[nodiscard]] std::optional<GrowthCertificate> growth() const;
    /// sup_x u'(x) when finite.
    [[nodiscard]] std::optional<double> sup_deriv() const;
    /// u' > 0 everywhere.
    [[nodiscard]] bool strictly_increasing() const;

private:
    UtilityKind kind_;
    double scale_ = 1.0;
    double raw_at_zero_ = 0.0;
};

struct LenaConstants {
    bool constant_u = false;
    double c = 0.0;
    double big_c = 0.0;
    double x_star = 0.0;
    bool certified = false;
    double worst_excess = 0.0;  // max over the grid of u(x) - (-c|x| + C)
};

struct LenaWindow {
    double lower = -1e6;
    std::size_t grid_points = 10000;
};

/// Constants with u(x) <= -c|x| + C for x <= 0, certified on a grid.
[[nodiscard]] LenaConstants lena_constants(const Utility& u, const LenaWindow& window = {});

/// Grid certification of given (c, C); returns the worst excess (<= tol means valid).
[[nodiscard]] double lena_excess(const Utility& u, double c, double big_c, const LenaWindow& window = {});

struct YoungGrid {
    double x_min = 1e-2;
    double x_max = 1e3;
    std::size_t points = 200;
    /// y grid for the conjugate; empty range means the same as x.
    double y_min = 0.0;
    double y_max = 0.0;
};

struct YoungPair {
    std::vector<double> x;
    std::vector<double> phi;  // Phi(x) = -u(-x)
    std::vector<double> y;
    std::vector<double> psi;  // Psi(y) = sup_{x >= 0} (x y - Phi(x)); may be inf
    double phi_ratio_sup = 0.0;   // sup over upper decade of Phi(2x)/Phi(x)
    double psi_ratio_sup = 0.0;   // same for Psi
    double growth_low = 0.0;      // Phi(x)/x at the start of the upper decade
    double growth_high = 0.0;     // Phi(x)/x at x_max
    bool moderate = false;
    std::string verdict;
    std::vector<std::string> reasons;
};

[[nodiscard]] double young_phi(const Utility& u, double x);
[[nodiscard]] double young_psi(const Utility& u, double y);

[[nodiscard]] YoungPair young_pair(const Utility& u, const YoungGrid& grid = {});

}  // namespace apm
