// Pre-registered oracle run that freezes the demo thresholds in
// fixtures/aba_calibration.json. Uses only tests/oracle.

#include "oracle/oracles.hpp"

#include <json.hpp>

#include <cmath>
#include <iostream>

int main() {
    nlohmann::ordered_json out;

    {
        // free lunch: k = 1e4, M = 1, 1e4 oracle paths; the checked run uses 1e3 paths
        const std::size_t k = 10000;
        const std::size_t paths = 10000;
        const std::size_t checked_paths = 1000;
        const double m = 1.0;
        const std::uint64_t seed = 8;
        oracle::AbaOracle ab(k);
        std::mt19937_64 rng(seed);
        std::size_t above = 0;
        for (std::size_t p = 0; p < paths; ++p) {
            above += ab.path(rng, {k})[0] > m ? 1 : 0;
        }
        const double f = static_cast<double>(above) / static_cast<double>(paths);
        const double se = std::sqrt(f * (1.0 - f) * (1.0 / paths + 1.0 / checked_paths));
        out["free_lunch"] = {{"k", k},           {"threshold", m},         {"oracle_seed", seed},
                             {"oracle_paths", paths}, {"oracle_fraction", f}, {"checked_paths", checked_paths},
                             {"bound", f - 4.0 * se}, {"no_jump_value", ab.no_jump(k)}};
    }
    {
        // closedness: medians of 1001-path runs at k = 1e3 and 1e6
        const std::size_t paths = 1001;
        const std::size_t reps = 4000;
        const std::uint64_t seed = 9;
        const std::vector<std::size_t> grid = {1000, 1000000};
        oracle::AbaOracle ab(grid.back());
        std::mt19937_64 rng(seed);
        std::vector<double> med_lo(reps);
        std::vector<double> med_hi(reps);
        std::size_t in_expected = 0;
        std::size_t closer = 0;
        for (std::size_t r = 0; r < reps; ++r) {
            std::vector<double> lo(paths);
            std::vector<double> hi(paths);
            for (std::size_t p = 0; p < paths; ++p) {
                const auto v = ab.path(rng, grid);
                lo[p] = v[0] / std::log(1000.0);
                hi[p] = v[1] / std::log(1000000.0);
            }
            med_lo[r] = oracle::median(lo);
            med_hi[r] = oracle::median(hi);
            in_expected += std::abs(med_hi[r] - 1.0) <= 0.15 ? 1 : 0;
            closer += std::abs(med_hi[r] - 1.0) < std::abs(med_lo[r] - 1.0) ? 1 : 0;
        }
        out["closedness"] = {
            {"k", grid.back()},
            {"paths", paths},
            {"oracle_seed", seed},
            {"oracle_replicates", reps},
            {"band_low", oracle::rank_quantile(med_hi, 0.0005)},
            {"band_high", oracle::rank_quantile(med_hi, 0.9995)},
            {"median_of_medians", oracle::median(med_hi)},
            {"expected_band", {0.85, 1.15}},
            {"p_median_in_expected_band", static_cast<double>(in_expected) / reps},
            {"p_closer_at_large_k", static_cast<double>(closer) / reps},
            {"no_jump_value_large_k", ab.no_jump(grid.back()) / std::log(1000000.0)},
            {"no_jump_value_small_k", ab.no_jump(1000) / std::log(1000.0)},
        };
    }
    std::cout << out.dump(2) << "\n";
}
