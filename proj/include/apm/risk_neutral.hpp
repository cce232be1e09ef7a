#pragma once

#include "apm/market_model.hpp"
#include "apm/numeric.hpp"
#include "apm/optimizer.hpp"
#include "apm/utility.hpp"
#include "apm/valuation.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace apm {

class InvalidDensity : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// dQ/dP as weights on a pool.
struct DensityEstimate {
    std::vector<double> weights;
    double mean_uprime = 1.0;        // E u'(V(phi*)) on the pool
    double max_weight = 1.0;
    double min_weight = 1.0;
    std::optional<double> linf_bound;  // sup u' / E u'
    std::string utility;
    std::vector<double> phi_star;

    /// Weights given directly; normalized to mean 1.
    [[nodiscard]] static DensityEstimate from_weights(std::vector<double> w);
};

/// w_j = u'(V_j(phi*)) / mean u'(V(phi*)).
[[nodiscard]] DensityEstimate construct_density(std::span<const double> phi_star, std::span<const double> b,
                                                const Utility& u, const SamplePool& pool);

struct ResidualRow {
    std::size_t i = 0;
    double b = 0.0;
    double weighted_mean = 0.0;  // E_Q eps_i
    double residual = 0.0;       // rho_i = E_Q eps_i - b_i
    double se = 0.0;
    bool within = false;
};

struct MartingaleRow {
    std::vector<double> phi;
    MeanSe eq_value;  // E_Q V(phi)
    bool within = false;
};

struct RiskNeutralReport {
    std::vector<ResidualRow> residuals;
    std::vector<MartingaleRow> martingale;
    double tolerance = 0.0;
    bool pass = false;
};

/// Residuals over indices first..last of the pool and E_Q V(phi) for
/// `random_strategies` coefficient vectors drawn uniformly from [-1, 1].
[[nodiscard]] RiskNeutralReport verify_risk_neutral(const DensityEstimate& density, const SamplePool& pool,
                                                    std::span<const double> b, std::size_t first, std::size_t last,
                                                    double tolerance = 0.0, std::uint64_t strategy_seed = 1,
                                                    std::size_t random_strategies = 10);

struct MomentRow {
    double p = 0.0;
    double dq_dp = 0.0;  // E[(dQ/dP)^p]
    double dp_dq = 0.0;  // E[(dP/dQ)^p]
};

struct MomentReport {
    std::vector<MomentRow> rows;
    double max_weight = 0.0;
    double min_weight = 0.0;
    std::optional<double> linf_bound;
    /// For the proof families: dP/dQ lies in L^q for q up to this value.
    std::optional<double> predicted_dp_dq_exponent;
    std::string caveat;
};

[[nodiscard]] MomentReport density_moment_report(const DensityEstimate& density, std::span<const double> p_list,
                                                 const Utility* source = nullptr);

struct PSchedule {
    std::vector<double> p;
    std::vector<double> alpha_ceiling;  // p/(p+1)
    std::vector<double> kappa;          // p/(p+1) - epsilon
};

[[nodiscard]] PSchedule p_schedule(std::size_t n, double epsilon = 0.05);

/// Smallest n with p_n/(p_n+1) > target_alpha.
[[nodiscard]] std::size_t schedule_stages(double target_alpha);

struct BuilderStage {
    std::size_t index = 0;
    std::string utility;
    OptimizationResult result;
    DensityEstimate density;
    RiskNeutralReport verification;
    MomentReport moments;
};

struct BuilderSpec {
    ReducedParams b;
    ShockFamily family;
    std::size_t k = 5;
    std::size_t n = 100000;
    std::uint64_t seed = 0;
    double target_alpha = 0.8;
    double epsilon = 0.05;
    SolverOptions options;
    std::vector<double> moment_p = {1.0, 2.0, 4.0};
};

struct BuilderResult {
    std::size_t stages_planned = 0;
    std::vector<BuilderStage> stages;
    std::optional<OptimizationResult> certification;  // proof_un(target_alpha)
    std::optional<std::size_t> failed_stage;
    std::string message;
};

/// Stage 1 uses proof_u1(epsilon); stage j >= 2 uses proof_un(kappa_{j-1}).
/// Stops at the first stage failing the FOC or risk-neutral check.
[[nodiscard]] BuilderResult recursive_density_builder(const BuilderSpec& spec);

}  // namespace apm
