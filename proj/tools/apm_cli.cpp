#include "apm/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Arbitrage Pricing Model experiments"};
    app.require_subcommand(1);

    std::string config;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    std::size_t samples = 0;
    unsigned threads = 0;

    for (const auto& name : apm::command_names()) {
        auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
        sub->add_option("--config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "directory for report files");
        sub->add_option("--seed", seed, "override the config seed");
        sub->add_option("--samples", samples, "override the pool size / path count")->check(CLI::PositiveNumber);
        sub->add_option("--threads", threads, "worker thread cap (results do not depend on it)")
            ->check(CLI::PositiveNumber);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : apm::kExitUsage;
    }

    const auto* sub = app.get_subcommands().front();
    apm::RunOptions opts;
    opts.out_dir = out_dir;
    if (sub->count("--seed") > 0) {
        opts.seed = seed;
    }
    if (sub->count("--samples") > 0) {
        opts.samples = samples;
    }
    if (sub->count("--threads") > 0) {
        opts.threads = threads;
    }
    return apm::run_command(sub->get_name(), config, opts, std::cout, std::cerr);
}
