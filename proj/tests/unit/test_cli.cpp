#include "apm/commands.hpp"

#include <json.hpp>
#include <unistd.h>
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

std::string env(const char* name) {
    const char* v = std::getenv(name);
    return v ? v : "";
}

struct Run {
    int code = -1;
    std::string out;
};

Run run_cli(const std::string& args, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    const fs::path log = out_dir / "console.txt";
    const std::string cmd = env("APM_CLI") + " " + args + " --out " + out_dir.string() + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    r.out = ss.str();
    return r;
}

std::string fixture(const std::string& name) { return env("APM_FIXTURES") + "/" + name; }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    return fs::temp_directory_path() / ("apm_cli_test_" + std::to_string(::getpid())) / name;
}

}  // namespace

TEST_CASE("environment") {
    REQUIRE_FALSE(env("APM_CLI").empty());
    REQUIRE_FALSE(env("APM_FIXTURES").empty());
    CHECK(apm::command_names().size() == 8);
}

TEST_CASE("validate reports a summable geometric market") {
    const Run r = run_cli("validate --config " + fixture("gaussian_geometric.json"), scratch("validate"));
    CHECK(r.code == 0);
    CHECK(r.out.find("summable") != std::string::npos);
    const auto j = nlohmann::json::parse(slurp(scratch("validate") / "validate.json"));
    CHECK(j["command"] == "validate");
    CHECK(j.contains("market_hash"));
}

TEST_CASE("aba market violates the relevance assumption") {
    const Run r = run_cli("validate --config " + fixture("aba.json"), scratch("aba"));
    CHECK(r.code == 3);
    CHECK(r.out.find("violated") != std::string::npos);
}

TEST_CASE("error exits") {
    CHECK(run_cli("validate --config " + fixture("empty_market.json"), scratch("empty")).code == 2);
    const Run lin = run_cli("optimize --config " + fixture("linear_rejected.json"), scratch("linear"));
    CHECK(lin.code == 6);
    CHECK(lin.out.find("linear") != std::string::npos);
    CHECK(run_cli("optimize --config /nonexistent.json", scratch("missing")).code != 0);
    CHECK(run_cli("demo-aba --config " + fixture("gaussian_exp.json"), scratch("wrong")).code == 2);
}

TEST_CASE("optimize writes phi_star and is byte reproducible") {
    const std::string args = "optimize --config " + fixture("gaussian_exp.json") + " --samples 20000";
    const Run a = run_cli(args + " --threads 1", scratch("opt1"));
    const Run b = run_cli(args + " --threads 4", scratch("opt4"));
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    for (const char* f : {"optimize.json", "phi_star.csv"}) {
        CHECK(slurp(scratch("opt1") / f) == slurp(scratch("opt4") / f));
    }
    const auto j = nlohmann::json::parse(slurp(scratch("opt1") / "optimize.json"));
    CHECK(j["n"] == 20000);
    CHECK(j["result"]["status"] == "converged");
    const std::string csv = slurp(scratch("opt1") / "phi_star.csv");
    CHECK(csv.rfind("i,phi_star,b,foc,foc_se", 0) == 0);
}

TEST_CASE("arbitrage construct on constant premia") {
    const Run r = run_cli("arbitrage --config " + fixture("arbitrage_constant.json"), scratch("arb"));
    CHECK(r.code == 0);
    CHECK(r.out.find("diverging") != std::string::npos);
    CHECK(fs::exists(scratch("arb") / "arbitrage.csv"));
}

TEST_CASE("cleanup") {
    std::error_code ec;
    fs::remove_all(scratch("").parent_path(), ec);
    CHECK_FALSE(ec);
}
