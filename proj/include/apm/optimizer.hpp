#pragma once

#include "apm/market_model.hpp"
#include "apm/numeric.hpp"
#include "apm/shock_library.hpp"
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

class RejectedUtility : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Too many samples with non-finite u(V) at the start point.
class ObjectiveOverflow : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SolverOptions {
    double grad_tol = 1e-6;
    std::size_t max_iter = 500;
    double armijo = 1e-4;
    double backtrack = 0.5;
    std::size_t max_backtracks = 60;
    /// Divergence radius on ||phi||; default 1e3 (1 + ||b prefix||).
    std::optional<double> radius;
    /// Fraction of flagged samples that aborts the solve.
    double max_flagged_fraction = 1e-3;
};

struct OptimizationProblem {
    ReducedParams b;
    ShockFamily family;
    Utility u;
    std::size_t k = 1;
    std::size_t n = 10000;
    std::uint64_t seed = 0;
    SolverOptions options;
    std::optional<std::vector<double>> initial;
};

/// Throws RejectedUtility for linear u or u without growth control.
void check_problem(const OptimizationProblem& problem);

struct ObjectiveEval {
    MeanSe value;                 // E u(V)
    std::vector<double> grad;     // E[u'(V) J_l]
    std::vector<double> grad_se;
    std::size_t flagged = 0;      // samples with non-finite u(V) or u'(V)
};

/// Frozen-pool objective over the first phi.size() indices of the pool.
[[nodiscard]] ObjectiveEval objective_and_gradient(std::span<const double> phi, std::span<const double> b,
                                                   const Utility& u, const SamplePool& pool);

enum class SolverStatus { converged, max_iter, diverging };

[[nodiscard]] std::string to_string(SolverStatus s);

struct IterationRecord {
    std::size_t iter = 0;
    double value = 0.0;
    double max_grad = 0.0;
    double step = 0.0;
    double norm = 0.0;
};

struct OptimizationResult {
    std::vector<double> phi_star;
    MeanSe value;
    std::vector<double> foc;      // E[u'(V(phi*)) J_l]
    std::vector<double> foc_se;
    double max_foc = 0.0;
    double max_foc_se = 0.0;
    std::size_t flagged = 0;
    std::vector<IterationRecord> trace;
    SolverStatus status = SolverStatus::max_iter;
    std::string pool_descriptor;
    std::string message;
};

/// Quasi-Newton ascent on the frozen pool (first problem.k indices).
[[nodiscard]] OptimizationResult maximize_segment(const OptimizationProblem& problem, const SamplePool& pool);
/// Builds the pool from (family, k, n, seed) and solves.
[[nodiscard]] OptimizationResult maximize_segment(const OptimizationProblem& problem);

struct SweepRow {
    std::size_t k = 0;
    OptimizationResult result;
    std::optional<MeanSe> increment;  // v_k - v_{previous k}, paired on the shared pool
    std::optional<double> distance;   // ||phi*(k)|_{<= prev} - phi*(prev)||
};

struct SweepReport {
    std::vector<SweepRow> rows;
    bool converged = false;
    std::string verdict;
};

struct SweepTolerances {
    double value = 1e-4;
    double distance = 1e-2;
};

/// Shared nested pool sized for max(k_list); warm starts between segments.
[[nodiscard]] SweepReport segment_sweep(const OptimizationProblem& problem, const std::vector<std::size_t>& k_list,
                                        const SweepTolerances& tol = {});

struct GapRow {
    std::size_t n = 0;
    MeanSe gap;  // E u(V(phi*)) - E u(V(phi_bar(n)))
};

/// Truncation gaps on the pool; phi_star.size() indices are used.
[[nodiscard]] std::vector<GapRow> truncation_gap(std::span<const double> phi_star, const std::vector<std::size_t>& n_list,
                                                 std::span<const double> b, const Utility& u, const SamplePool& pool);

}  // namespace apm
