#include "apm/commands.hpp"

#include "apm/arbitrage.hpp"
#include "apm/numeric.hpp"
#include "apm/optimizer.hpp"
#include "apm/parallel.hpp"
#include "apm/risk_neutral.hpp"
#include "apm/valuation.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace apm {

using nlohmann::ordered_json;

namespace {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::ofstream open_out(const RunOptions& opts, const std::string& name) {
    std::filesystem::create_directories(opts.out_dir);
    const auto path = opts.out_dir / name;
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw IoError("cannot write " + path.string());
    }
    return os;
}

void write_json(const RunOptions& opts, const std::string& name, const ordered_json& j) {
    auto os = open_out(opts, name);
    os << j.dump(2) << "\n";
}

std::string hex(std::uint64_t h) {
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

ordered_json header(const std::string& command, const ExperimentConfig& cfg) {
    ordered_json j;
    j["command"] = command;
    j["market_hash"] = hex(cfg.hash);
    j["seed"] = cfg.seed;
    j["shocks"] = cfg.shocks.describe();
    return j;
}

ordered_json mean_se_json(const MeanSe& m) { return {{"mean", m.mean}, {"se", m.se}}; }

std::vector<std::size_t> index_list(const ordered_json& sec, const std::string& key, std::vector<std::size_t> fallback,
                                    const std::string& path) {
    auto v = get_or<std::vector<std::size_t>>(sec, key, std::move(fallback), path);
    if (v.empty()) {
        throw ConfigError(path + "/" + key, "expected a nonempty list");
    }
    return v;
}

std::size_t segment_k(const ExperimentConfig& cfg, const ordered_json& sec, const std::string& path) {
    const auto k = get_or<std::size_t>(sec, "k", cfg.market.natural_k, path);
    if (k == 0) {
        throw ConfigError(path + "/k", "expected k >= 1");
    }
    if (!cfg.market.reduced.b().defined_at(k)) {
        throw ConfigError(path + "/k", "b is only known for the first " +
                                           std::to_string(cfg.market.reduced.b().prefix_size()) + " assets");
    }
    return k;
}

const Utility& require_utility(const ExperimentConfig& cfg) {
    if (!cfg.utility) {
        throw ConfigError("/utility", "this command needs a utility section");
    }
    return *cfg.utility;
}

SolverOptions solver_options(const ordered_json& sec, const std::string& path) {
    SolverOptions o;
    o.grad_tol = get_or<double>(sec, "grad_tol", o.grad_tol, path);
    o.max_iter = get_or<std::size_t>(sec, "max_iter", o.max_iter, path);
    if (sec.contains("radius")) {
        o.radius = get_or<double>(sec, "radius", 0.0, path);
    }
    return o;
}

OptimizationProblem make_problem(const ExperimentConfig& cfg, const ordered_json& sec, const std::string& path) {
    OptimizationProblem p;
    p.b = cfg.market.reduced;
    p.family = cfg.shocks;
    p.u = require_utility(cfg);
    p.k = segment_k(cfg, sec, path);
    p.n = cfg.samples;
    p.seed = cfg.seed;
    p.options = solver_options(sec, path);
    if (sec.contains("initial")) {
        p.initial = get_or<std::vector<double>>(sec, "initial", {}, path);
    }
    return p;
}

int status_code(SolverStatus s) {
    switch (s) {
        case SolverStatus::converged:
            return kExitOk;
        case SolverStatus::max_iter:
            return kExitMaxIter;
        case SolverStatus::diverging:
            return kExitDiverging;
    }
    return kExitMaxIter;
}

ordered_json result_json(const OptimizationResult& r) {
    ordered_json j;
    j["status"] = to_string(r.status);
    j["message"] = r.message;
    j["pool"] = r.pool_descriptor;
    j["phi_star"] = r.phi_star;
    j["value"] = mean_se_json(r.value);
    j["foc"] = r.foc;
    j["foc_se"] = r.foc_se;
    j["max_foc"] = r.max_foc;
    j["max_foc_se"] = r.max_foc_se;
    j["flagged_samples"] = r.flagged;
    j["iterations"] = r.trace.empty() ? 0 : r.trace.back().iter;
    ordered_json trace = ordered_json::array();
    for (const auto& t : r.trace) {
        trace.push_back({{"iter", t.iter}, {"value", t.value}, {"max_grad", t.max_grad}, {"step", t.step},
                         {"norm", t.norm}});
    }
    j["trace"] = trace;
    return j;
}

std::string sharpe_line(const SharpeSum& s) {
    std::string line = to_string(s.status);
    if (s.total) {
        line += ", S_inf=" + format_double(*s.total);
    } else {
        line += ", S_" + std::to_string(s.k) + "=" + format_double(s.partial);
    }
    return line;
}

// ---------------------------------------------------------------- validate

int cmd_validate(const ExperimentConfig& cfg, const RunOptions& opts, std::ostream& out) {
    const auto& sec = cfg.section("validate");
    const std::string path = "/validate";
    const std::size_t k = segment_k(cfg, sec, path);
    const auto x_grid = get_or<std::vector<double>>(sec, "x_grid", {0.5, 1.0, 2.0, 4.0}, path);
    const auto n_grid = get_or<std::vector<double>>(sec, "n_grid", {1.0, 2.0, 4.0, 8.0}, path);
    const auto i_max = get_or<std::size_t>(sec, "i_max", 100, path);
    if (x_grid.empty() || n_grid.empty() || i_max == 0) {
        throw ConfigError(path, "grids must be nonempty and i_max >= 1");
    }

    const SharpeSum s = sharpe_sum(cfg.market.reduced, k);
    const RelevanceReport rel = check_assumption_relevant(cfg.shocks, x_grid, n_grid, i_max);

    ordered_json j = header("validate", cfg);
    j["k"] = k;
    j["b_prefix"] = cfg.market.reduced.head(k);
    j["b_tail"] = cfg.market.reduced.b().describe();
    ordered_json sj;
    sj["status"] = to_string(s.status);
    sj["partial"] = s.partial;
    sj["total"] = s.total ? ordered_json(*s.total) : ordered_json(nullptr);
    j["sharpe"] = sj;
    ordered_json moments = ordered_json::array();
    for (std::size_t i = 1; i <= std::min<std::size_t>(i_max, 10); ++i) {
        moments.push_back({{"i", i},
                           {"law", law_name(cfg.shocks.law_at(i))},
                           {"mean", cfg.shocks.mean(i)},
                           {"variance", cfg.shocks.variance(i)}});
    }
    j["moments_check"] = moments;
    ordered_json aj;
    aj["verdict"] = to_string(rel.verdict);
    aj["i_max"] = rel.i_max;
    ordered_json tails = ordered_json::array();
    for (const auto& t : rel.tails) {
        ordered_json row = {{"x", t.x}, {"inf_upper", t.inf_upper}, {"inf_lower", t.inf_lower}};
        if (t.bracket_low) {
            row["bracket_low"] = *t.bracket_low;
            row["bracket_high"] = *t.bracket_high;
        }
        tails.push_back(row);
    }
    aj["tails"] = tails;
    ordered_json integ = ordered_json::array();
    for (const auto& r : rel.integrability) {
        integ.push_back({{"n", r.n}, {"sup_tail_moment", r.sup_tail_moment}});
    }
    aj["integrability"] = integ;
    aj["notes"] = rel.notes;
    j["assumption_relevant"] = aj;
    std::string summary = sharpe_line(s) + "; assumption: " + to_string(rel.verdict);
    if (rel.verdict == RelevanceVerdict::violated && !rel.notes.empty()) {
        summary += " (" + rel.notes.front() + ")";
    }
    j["summary"] = summary;
    write_json(opts, "validate.json", j);
    out << summary << "\n";
    return rel.verdict == RelevanceVerdict::violated ? kExitViolated : kExitOk;
}

// ---------------------------------------------------------------- optimize / sweep

int cmd_optimize(const ExperimentConfig& cfg, const RunOptions& opts, std::ostream& out) {
    const auto& sec = cfg.section("optimize");
    const std::string path = "/optimize";
    const OptimizationProblem prob = make_problem(cfg, sec, path);
    check_problem(prob);
    const auto trunc = get_or<std::vector<std::size_t>>(sec, "truncation", {}, path);
    const bool antithetic = get_or<bool>(sec, "antithetic", false, path);
    const SamplePool pool = SamplePool::build(prob.family, prob.k, prob.n, prob.seed, 1, antithetic);
    const OptimizationResult r = maximize_segment(prob, pool);
    const std::vector<double> b = prob.b.head(prob.k);

    ordered_json j = header("optimize", cfg);
    j["utility"] = prob.u.describe();
    j["k"] = prob.k;
    j["n"] = prob.n;
    j["grad_tol"] = prob.options.grad_tol;
    j["result"] = result_json(r);
    if (!trunc.empty()) {
        ordered_json gaps = ordered_json::array();
        for (const auto& g : truncation_gap(r.phi_star, trunc, b, prob.u, pool)) {
            gaps.push_back({{"n", g.n}, {"gap", g.gap.mean}, {"se", g.gap.se}});
        }
        j["truncation_gaps"] = gaps;
    }
    write_json(opts, "optimize.json", j);
    {
        auto os = open_out(opts, "phi_star.csv");
        os << "i,phi_star,b,foc,foc_se\n";
        for (std::size_t i = 0; i < prob.k; ++i) {
            os << i + 1 << ',' << format_double(r.phi_star[i]) << ',' << format_double(b[i]) << ','
               << format_double(r.foc[i]) << ',' << format_double(r.foc_se[i]) << "\n";
        }
    }
    if (get_or<bool>(sec, "export_pool", false, path)) {
        auto os = open_out(opts, "pool.csv");
        write_pool_csv(os, pool);
    }
    out << "status " << to_string(r.status) << ", value " << format_double(r.value.mean) << " +- "
        << format_double(r.value.se) << ", max FOC " << format_double(r.max_foc) << "\n";
    return status_code(r.status);
}

int cmd_sweep(const ExperimentConfig& cfg, const RunOptions& opts, std::ostream& out) {
    const auto& sec = cfg.section("sweep");
    const std::string path = "/sweep";
    std::vector<std::size_t> fallback;
    for (std::size_t k = 1; k <= cfg.market.natural_k; ++k) {
        fallback.push_back(k);
    }
    const auto k_list = index_list(sec, "k_list", fallback, path);
    ordered_json sec_k = sec;
    sec_k["k"] = k_list.back();
    const OptimizationProblem prob = make_problem(cfg, sec_k, path);
    SweepTolerances tol;
    tol.value = get_or<double>(sec, "value_tol", tol.value, path);
    tol.distance = get_or<double>(sec, "distance_tol", tol.distance, path);
    const SweepReport rep = segment_sweep(prob, k_list, tol);

    ordered_json j = header("sweep", cfg);
    j["utility"] = prob.u.describe();
    j["n"] = prob.n;
    ordered_json rows = ordered_json::array();
    int code = kExitOk;
    auto os = open_out(opts, "sweep.csv");
    os << "k,value,value_se,increment,increment_se,distance,status\n";
    for (const auto& row : rep.rows) {
        ordered_json rj;
        rj["k"] = row.k;
        rj["value"] = mean_se_json(row.result.value);
        rj["status"] = to_string(row.result.status);
        rj["max_foc"] = row.result.max_foc;
        rj["phi_star"] = row.result.phi_star;
        if (row.increment) {
            rj["increment"] = mean_se_json(*row.increment);
            rj["distance"] = *row.distance;
        }
        rows.push_back(rj);
        os << row.k << ',' << format_double(row.result.value.mean) << ',' << format_double(row.result.value.se) << ','
           << (row.increment ? format_double(row.increment->mean) : "") << ','
           << (row.increment ? format_double(row.increment->se) : "") << ','
           << (row.distance ? format_double(*row.distance) : "") << ',' << to_string(row.result.status) << "\n";
        if (code == kExitOk) {
            code = status_code(row.result.status);
        }
    }
    j["rows"] = rows;
    j["converged"] = rep.converged;
    j["verdict"] = rep.verdict;
    write_json(opts, "sweep.json", j);
    out << "sweep over " << k_list.size() << " segments: " << rep.verdict << "\n";
    return code;
}

// ---------------------------------------------------------------- density

ordered_json residual_json(const RiskNeutralReport& rep) {
    ordered_json j;
    j["pass"] = rep.pass;
    j["tolerance"] = rep.tolerance;
    ordered_json rows = ordered_json::array();
    for (const auto& r : rep.residuals) {
        rows.push_back({{"i", r.i}, {"b", r.b}, {"eq_eps", r.weighted_mean}, {"residual", r.residual},
                        {"se", r.se}, {"within", r.within}});
    }
    j["residuals"] = rows;
    ordered_json mart = ordered_json::array();
    for (const auto& m : rep.martingale) {
        mart.push_back({{"eq_value", m.eq_value.mean}, {"se", m.eq_value.se}, {"within", m.within}});
    }
    j["martingale"] = mart;
    return j;
}

ordered_json moments_json(const MomentReport& m) {
    ordered_json j;
    ordered_json rows = ordered_json::array();
    for (const auto& r : m.rows) {
        rows.push_back({{"p", r.p}, {"dq_dp", r.dq_dp}, {"dp_dq", r.dp_dq}});
    }
    j["rows"] = rows;
    j["max_weight"] = m.max_weight;
    j["min_weight"] = m.min_weight;
    j["linf_bound"] = m.linf_bound ? ordered_json(*m.linf_bound) : ordered_json(nullptr);
    j["predicted_dp_dq_exponent"] =
        m.predicted_dp_dq_exponent ? ordered_json(*m.predicted_dp_dq_exponent) : ordered_json(nullptr);
    j["caveat"] = m.caveat;
    return j;
}

int cmd_density(const ExperimentConfig& cfg, const RunOptions& opts, std::ostream& out) {
    const auto& sec = cfg.section("density");
    const std::string path = "/density";
    const auto p_list = get_or<std::vector<double>>(sec, "p_list", {1.0, 2.0, 4.0}, path);
    const double tol = get_or<double>(sec, "tolerance", 0.0, path);
    const std::string weights = get_or<std::string>(sec, "weights", "optimizer", path);

    ordered_json j = header("density", cfg);
    int code = kExitOk;
    std::size_t k = segment_k(cfg, sec, path);
    const std::vector<double> b = cfg.market.reduced.head(k);
    const SamplePool pool = SamplePool::build(cfg.shocks, k, cfg.samples, cfg.seed);
    DensityEstimate density;
    const Utility* source = nullptr;
    if (weights == "constant") {
        density = DensityEstimate::from_weights(std::vector<double>(pool.size(), 1.0));
        j["weights"] = "constant";
    } else if (weights == "optimizer") {
        const OptimizationProblem prob = make_problem(cfg, sec, path);
        const OptimizationResult r = maximize_segment(prob, pool);
        j["optimizer"] = result_json(r);
        if (r.status != SolverStatus::converged) {
            write_json(opts, "density.json", j);
            out << "optimizer did not converge: " << to_string(r.status) << "\n";
            return status_code(r.status);
        }
        density = construct_density(r.phi_star, b, *cfg.utility, pool);
        source = &*cfg.utility;
        j["weights"] = "u'(V(phi*)) / E u'(V(phi*)) with " + cfg.utility->describe();
    } else {
        throw ConfigError(path + "/weights", "expected \"optimizer\" or \"constant\"");
    }
    const RiskNeutralReport ver = verify_risk_neutral(density, pool, b, 1, k, tol, cfg.seed + 1);
    const MomentReport mom = density_moment_report(density, p_list, source);
    j["k"] = k;
    j["n"] = pool.size();
    j["verification"] = residual_json(ver);
    j["moments"] = moments_json(mom);
    if (!ver.pass) {
        code = kExitDensityFailed;
    }

    if (sec.contains("schedule_n")) {
        const auto n = get_or<std::size_t>(sec, "schedule_n", 1, path);
        const double eps = get_or<double>(sec, "epsilon", 0.05, path);
        const PSchedule s = p_schedule(n, eps);
        j["schedule"] = {{"p", s.p}, {"alpha_ceiling", s.alpha_ceiling}, {"kappa", s.kappa}};
        out << "p schedule:";
        for (double p : s.p) {
            out << " " << format_double(p);
        }
        out << "\n";
    }
    if (sec.contains("builder")) {
        const auto& bs = sec.at("builder");
        BuilderSpec spec;
        spec.b = cfg.market.reduced;
        spec.family = cfg.shocks;
        spec.k = k;
        spec.n = cfg.samples;
        spec.seed = cfg.seed;
        spec.target_alpha = get_or<double>(bs, "target_alpha", 0.8, path + "/builder");
        spec.epsilon = get_or<double>(bs, "epsilon", 0.05, path + "/builder");
        spec.options = solver_options(sec, path);
        spec.moment_p = p_list;
        const BuilderResult br = recursive_density_builder(spec);
        ordered_json bj;
        bj["target_alpha"] = spec.target_alpha;
        bj["epsilon"] = spec.epsilon;
        bj["stages_planned"] = br.stages_planned;
        ordered_json stages = ordered_json::array();
        for (const auto& st : br.stages) {
            ordered_json sj;
            sj["stage"] = st.index;
            sj["utility"] = st.utility;
            sj["optimizer"] = result_json(st.result);
            sj["verification"] = residual_json(st.verification);
            sj["moments"] = moments_json(st.moments);
            stages.push_back(sj);
        }
        bj["stages"] = stages;
        if (br.certification) {
            bj["certification"] = result_json(*br.certification);
        }
        bj["failed_stage"] = br.failed_stage ? ordered_json(*br.failed_stage) : ordered_json(nullptr);
        bj["message"] = br.message;
        j["builder"] = bj;
        out << "builder: " << br.stages.size() << " of " << br.stages_planned << " stages, " << br.message << "\n";
        if (br.failed_stage) {
            code = kExitStageBase + static_cast<int>(*br.failed_stage);
        }
    }
    write_json(opts, "density.json", j);
    {
        auto os = open_out(opts, "moments.csv");
        os << "p,dq_dp,dp_dq\n";
        for (const auto& r : mom.rows) {
            os << format_double(r.p) << ',' << format_double(r.dq_dp) << ',' << format_double(r.dp_dq) << "\n";
        }
    }
    if (get_or<bool>(sec, "export_weights", false, path)) {
        auto os = open_out(opts, "weights.csv");
        os << "sample,weight\n";
        for (std::size_t i = 0; i < density.weights.size(); ++i) {
            os << i << ',' << format_double(density.weights[i]) << "\n";
        }
    }
    out << "risk-neutral verification: " << (ver.pass ? "pass" : "fail") << "\n";
    return code;
}

// ---------------------------------------------------------------- arbitrage family

void write_trajectory_csv(const RunOptions& opts, const std::string& name, const TrajectoryReport& rep,
                          const std::string& fraction_label) {
    auto os = open_out(opts, name);
    os << "k";
    for (double q : kTrajectoryQuantiles) {
        os << ",q" << format_double(q);
    }
    os << ",mean," << fraction_label << ",analytic_mean,analytic_variance,no_jump_value,no_jump_probability\n";
    for (const auto& r : rep.rows) {
        os << r.k;
        for (double q : r.quantiles) {
            os << ',' << format_double(q);
        }
        os << ',' << format_double(r.mean) << ',' << format_double(r.fraction_above) << ','
           << format_double(r.analytic_mean) << ',' << format_double(r.analytic_variance) << ','
           << format_double(r.no_jump_value) << ',' << format_double(r.no_jump_probability) << "\n";
    }
}

ordered_json trajectory_json(const TrajectoryReport& rep, const std::string& fraction_label) {
    ordered_json rows = ordered_json::array();
    for (const auto& r : rep.rows) {
        ordered_json q = ordered_json::object();
        for (std::size_t i = 0; i < r.quantiles.size(); ++i) {
            q[format_double(kTrajectoryQuantiles[i])] = r.quantiles[i];
        }
        rows.push_back({{"k", r.k},
                        {"quantiles", q},
                        {"mean", r.mean},
                        {fraction_label, r.fraction_above},
                        {"analytic_mean", r.analytic_mean},
                        {"analytic_variance", r.analytic_variance},
                        {"no_jump_value", r.no_jump_value},
                        {"no_jump_probability", r.no_jump_probability}});
    }
    return rows;
}

std::size_t paths_for(const ExperimentConfig& cfg, const RunOptions& opts, const ordered_json& sec,
                      std::size_t fallback, const std::string& path) {
    if (opts.samples) {
        return cfg.samples;
    }
    return get_or<std::size_t>(sec, "paths", fallback, path);
}

int demo_aba(const ExperimentConfig& cfg, const RunOptions& opts, const ordered_json& sec, const std::string& path,
             std::ostream& out) {
    const auto k_grid = index_list(sec, "k_grid", {2, 10, 100, 1000, 10000}, path);
    const std::size_t paths = paths_for(cfg, opts, sec, 1000, path);
    const double m = get_or<double>(sec, "threshold", 1.0, path);
    const TrajectoryReport rep = free_lunch_demo_aba(cfg.shocks, k_grid, cfg.seed, paths, m);
    ordered_json j = header("demo-aba", cfg);
    j["paths"] = paths;
    j["threshold"] = m;
    j["sharpe_sum_b"] = cfg.market.reduced.partial_sharpe(cfg.market.natural_k);
    j["rows"] = trajectory_json(rep, "fraction_above");
    j["note"] = rep.note;
    write_json(opts, "demo_aba.json", j);
    write_trajectory_csv(opts, "demo_aba.csv", rep, "fraction_above");
    const auto& last = rep.rows.back();
    out << "k=" << last.k << ": fraction above " << format_double(m) << " = " << format_double(last.fraction_above)
        << ", median " << format_double(last.quantiles[3]) << "\n" << rep.note << "\n";
    return kExitOk;
}

int demo_closedness(const ExperimentConfig& cfg, const RunOptions& opts, const ordered_json& sec,
                    const std::string& path, std::ostream& out) {
    const auto k_grid = index_list(sec, "k_grid", {1000, 10000, 100000, 1000000}, path);
    const std::size_t paths = paths_for(cfg, opts, sec, 1001, path);
    const double band = get_or<double>(sec, "band", 0.15, path);
    const TrajectoryReport rep = closedness_failure_demo(cfg.shocks, k_grid, cfg.seed, paths, band);
    ordered_json j = header("demo-closedness", cfg);
    j["paths"] = paths;
    j["band"] = band;
    j["rows"] = trajectory_json(rep, "fraction_outside_band");
    j["note"] = rep.note;
    write_json(opts, "demo_closedness.json", j);
    write_trajectory_csv(opts, "demo_closedness.csv", rep, "fraction_outside_band");
    for (const auto& r : rep.rows) {
        out << "k=" << r.k << ": median " << format_double(r.quantiles[3]) << "\n";
    }
    out << rep.note << "\n";
    return kExitOk;
}

int clt_check(const ExperimentConfig& cfg, const RunOptions& opts, const ordered_json& sec, const std::string& path,
              std::ostream& out) {
    const std::string rule = get_or<std::string>(sec, "rule", "uniform", path);
    if (rule != "uniform") {
        throw ConfigError(path + "/rule", "only the \"uniform\" rule phi_i(n) = 1/sqrt(n) is available");
    }
    const auto n_grid = index_list(sec, "n_grid", {100, 1000, 10000}, path);
    const std::size_t samples = opts.samples ? cfg.samples : get_or<std::size_t>(sec, "samples", cfg.samples, path);
    if (!cfg.market.reduced.b().defined_at(n_grid.back())) {
        throw ConfigError("/market", "b must be defined up to n = " + std::to_string(n_grid.back()));
    }
    const CltReport rep = clt_normalized_check(uniform_rule(), rule, cfg.market.reduced, cfg.shocks, n_grid, samples,
                                               cfg.seed);
    ordered_json j = header("clt-check", cfg);
    j["rule"] = rule;
    j["samples"] = samples;
    j["d_limit"] = rep.d_limit ? ordered_json(*rep.d_limit) : ordered_json(nullptr);
    ordered_json rows = ordered_json::array();
    auto os = open_out(opts, "clt.csv");
    os << "n,d,ks,ks_band,p_negative,f_limit\n";
    for (const auto& r : rep.rows) {
        rows.push_back({{"n", r.n}, {"d", r.d}, {"ks", r.ks}, {"ks_band", r.ks_band}, {"p_negative", r.p_negative},
                        {"f_limit", r.f_limit}});
        os << r.n << ',' << format_double(r.d) << ',' << format_double(r.ks) << ',' << format_double(r.ks_band) << ','
           << format_double(r.p_negative) << ',' << format_double(r.f_limit) << "\n";
        out << "n=" << r.n << ": KS " << format_double(r.ks) << " (band " << format_double(r.ks_band) << ")\n";
    }
    j["rows"] = rows;
    j["note"] = rep.note;
    write_json(opts, "clt.json", j);
    return kExitOk;
}

int construct(const ExperimentConfig& cfg, const RunOptions& opts, const ordered_json& sec, const std::string& path,
              std::ostream& out) {
    const auto k_grid = index_list(sec, "k_grid", {1, 10, 100, 1000, 10000}, path);
    for (std::size_t k : k_grid) {
        if (!cfg.market.reduced.b().defined_at(k)) {
            throw ConfigError(path + "/k_grid", "b is undefined at k = " + std::to_string(k));
        }
    }
    const ArbitrageReport rep = asymptotic_arbitrage_construct(cfg.market.reduced, k_grid);
    ordered_json j = header("arbitrage", cfg);
    j["mode"] = "construct";
    j["verdict"] = to_string(rep.verdict);
    j["sharpe_total"] = rep.sharpe_total ? ordered_json(*rep.sharpe_total) : ordered_json(nullptr);
    j["constructed"] = rep.constructed;
    ordered_json rows = ordered_json::array();
    auto os = open_out(opts, "arbitrage.csv");
    os << "k,sharpe,ev,variance\n";
    for (const auto& r : rep.rows) {
        ordered_json rj = {{"k", r.k}, {"sharpe", r.sharpe}};
        if (r.ev) {
            rj["ev"] = *r.ev;
            rj["variance"] = *r.variance;
        }
        rows.push_back(rj);
        os << r.k << ',' << format_double(r.sharpe) << ',' << (r.ev ? format_double(*r.ev) : "") << ','
           << (r.variance ? format_double(*r.variance) : "") << "\n";
    }
    j["rows"] = rows;
    j["note"] = rep.note;
    write_json(opts, "arbitrage.json", j);
    out << "verdict " << to_string(rep.verdict);
    if (rep.sharpe_total) {
        out << ", S_inf=" << format_double(*rep.sharpe_total);
    }
    out << "\n" << rep.note << "\n";
    return kExitOk;
}

int cmd_arbitrage(const ExperimentConfig& cfg, const RunOptions& opts, std::ostream& out) {
    const auto& sec = cfg.section("arbitrage");
    const std::string path = "/arbitrage";
    const std::string mode = get_or<std::string>(sec, "mode", "construct", path);
    if (mode == "construct") {
        return construct(cfg, opts, sec, path, out);
    }
    if (mode == "free_lunch") {
        return demo_aba(cfg, opts, sec, path, out);
    }
    if (mode == "closedness") {
        return demo_closedness(cfg, opts, sec, path, out);
    }
    if (mode == "clt") {
        return clt_check(cfg, opts, sec, path, out);
    }
    throw ConfigError(path + "/mode", "expected construct, free_lunch, closedness or clt");
}

using Handler = std::function<int(const ExperimentConfig&, const RunOptions&, std::ostream&)>;

const std::map<std::string, Handler>& handlers() {
    static const std::map<std::string, Handler> h = {
        {"validate", cmd_validate},
        {"optimize", cmd_optimize},
        {"sweep", cmd_sweep},
        {"density", cmd_density},
        {"arbitrage", cmd_arbitrage},
        {"demo-aba",
         [](const ExperimentConfig& c, const RunOptions& o, std::ostream& s) {
             return demo_aba(c, o, c.section("demo_aba"), "/demo_aba", s);
         }},
        {"demo-closedness",
         [](const ExperimentConfig& c, const RunOptions& o, std::ostream& s) {
             return demo_closedness(c, o, c.section("demo_closedness"), "/demo_closedness", s);
         }},
        {"clt-check",
         [](const ExperimentConfig& c, const RunOptions& o, std::ostream& s) {
             return clt_check(c, o, c.section("clt"), "/clt", s);
         }},
    };
    return h;
}

}  // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names = {"validate", "optimize",        "sweep",    "density",
                                                   "arbitrage", "demo-aba", "demo-closedness", "clt-check"};
    return names;
}

int run_parsed(const std::string& command, ExperimentConfig cfg, const RunOptions& opts, std::ostream& out) {
    const auto it = handlers().find(command);
    if (it == handlers().end()) {
        throw std::invalid_argument("unknown command " + command);
    }
    if (opts.seed) {
        cfg.seed = *opts.seed;
    }
    if (opts.samples) {
        if (*opts.samples == 0) {
            throw ConfigError("--samples", "expected a positive sample count");
        }
        cfg.samples = *opts.samples;
    }
    if (opts.threads) {
        set_thread_limit(*opts.threads);
    }
    return it->second(cfg, opts, out);
}

int run_command(const std::string& command, const std::filesystem::path& config, const RunOptions& opts,
                std::ostream& out, std::ostream& err) {
    try {
        return run_parsed(command, load_config(config), opts, out);
    } catch (const ConfigError& e) {
        err << "config error at " << (e.path().empty() ? "/" : "") << e.what() << "\n";
        return kExitConfig;
    } catch (const WrongFamily& e) {
        err << "config error at /shocks: " << e.what() << "\n";
        return kExitConfig;
    } catch (const RejectedUtility& e) {
        err << "rejected: " << e.what() << "\n";
        return kExitRejected;
    } catch (const RejectedRule& e) {
        err << "rejected: " << e.what() << "\n";
        return kExitRejected;
    } catch (const ObjectiveOverflow& e) {
        err << "objective overflow: " << e.what() << "\n";
        return kExitOverflow;
    } catch (const InvalidDensity& e) {
        err << "density error: " << e.what() << "\n";
        return kExitDensityFailed;
    } catch (const IoError& e) {
        err << "io error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "io error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::runtime_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
}

}  // namespace apm
