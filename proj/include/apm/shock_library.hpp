#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace apm {

// Standardized laws: every index has mean 0 and variance 1.

struct GaussianLaw {};

/// Student t scaled to unit variance; df > 2.
struct StudentTLaw {
    double df = 5.0;
};

/// +-1 with probability 1/2 each.
struct RademacherLaw {};

/// Two-point law of the free-lunch counterexample; index-dependent.
/// Index 1 (where the construction leaves the law free) is Gaussian.
struct TwoPointAbaLaw {};

/// Symmetric Lomax: P(eps >= z) = (1 + sigma z)^(-theta) / 2 for z >= 0, theta > 2.
struct BoundedTailPowerLaw {
    double theta = 4.0;
};

using ShockLaw = std::variant<GaussianLaw, StudentTLaw, RademacherLaw, TwoPointAbaLaw, BoundedTailPowerLaw>;

[[nodiscard]] std::string law_name(const ShockLaw& law);

struct TwoPointLaw {
    double up = 0.0;
    double down = 0.0;
    double p_up = 0.0;
    double p_down = 0.0;
};

/// Two-point law at index i >= 2 of the free-lunch example.
[[nodiscard]] TwoPointLaw aba_two_point(std::size_t i);

/// Constants of the tail bracket h(z) = c z^-eta <= P(eps >= z) <= C z^-theta for z >= 1.
struct PowerTailBracket {
    double upper_constant = 0.0;  // C
    double theta = 0.0;
    double lower_constant = 0.0;  // c
    double eta = 0.0;
};

[[nodiscard]] PowerTailBracket power_tail_bracket(const BoundedTailPowerLaw& law);

/// Column-major n x count matrix of shocks for indices first..first+count-1.
struct ShockMatrix {
    std::size_t rows = 0;
    std::size_t first_index = 1;
    std::size_t cols = 0;
    std::vector<double> data;

    [[nodiscard]] std::span<const double> column(std::size_t index) const {
        return {data.data() + (index - first_index) * rows, rows};
    }
};

/// Per-index family of shock laws; law_at(i) cycles through `laws`.
class ShockFamily {
public:
    ShockFamily() : laws_{GaussianLaw{}} {}
    explicit ShockFamily(ShockLaw law);
    explicit ShockFamily(std::vector<ShockLaw> cycle);

    [[nodiscard]] const ShockLaw& law_at(std::size_t i) const;
    [[nodiscard]] std::span<const ShockLaw> laws() const { return laws_; }
    [[nodiscard]] bool index_dependent() const;
    [[nodiscard]] bool holds_only(std::size_t alternative) const;
    [[nodiscard]] std::string describe() const;

    [[nodiscard]] double mean(std::size_t i) const;
    [[nodiscard]] double variance(std::size_t i) const;
    /// P(eps_i > x)
    [[nodiscard]] double upper_tail(std::size_t i, double x) const;
    /// P(eps_i < -x)
    [[nodiscard]] double lower_tail(std::size_t i, double x) const;
    /// E[eps_i^2 1{|eps_i| >= n}]
    [[nodiscard]] double truncated_second_moment(std::size_t i, double n) const;
    /// Whether eps_i has support unbounded in both directions.
    [[nodiscard]] bool unbounded_support(std::size_t i) const;

    /// Draw d of index i. Pure in (seed, i, d).
    [[nodiscard]] double draw(std::uint64_t seed, std::size_t i, std::uint64_t d) const;
    /// Draws first_draw .. first_draw + out.size() - 1 of index i.
    void fill(std::uint64_t seed, std::size_t i, std::uint64_t first_draw, std::span<double> out) const;

private:
    std::vector<ShockLaw> laws_;
};

/// n draws for each index in [first_index, first_index + count).
/// Column i is identical whatever other indices are requested.
[[nodiscard]] ShockMatrix sample(const ShockFamily& family, std::size_t first_index, std::size_t count,
                                 std::size_t n, std::uint64_t seed);

enum class RelevanceVerdict { pass, violated, inconclusive };

[[nodiscard]] std::string to_string(RelevanceVerdict v);

struct TailRow {
    double x = 0.0;
    double inf_upper = 0.0;  // inf_i P(eps_i > x)
    double inf_lower = 0.0;  // inf_i P(eps_i < -x)
    std::optional<double> bracket_low;   // h(x) for power-tail families, x >= 1
    std::optional<double> bracket_high;  // C x^-theta
};

struct IntegrabilityRow {
    double n = 0.0;
    double sup_tail_moment = 0.0;  // sup_i E[eps_i^2 1{|eps_i| >= n}]
};

struct RelevanceReport {
    std::size_t i_max = 0;
    std::vector<TailRow> tails;
    std::vector<IntegrabilityRow> integrability;
    RelevanceVerdict verdict = RelevanceVerdict::inconclusive;
    std::vector<std::string> notes;
};

/// Evidence for two-sided uniform tail mass and uniform integrability of eps_i^2.
[[nodiscard]] RelevanceReport check_assumption_relevant(const ShockFamily& family, std::span<const double> x_grid,
                                                        std::span<const double> n_grid, std::size_t i_max);

}  // namespace apm
