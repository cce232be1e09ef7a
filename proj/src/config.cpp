#include "apm/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace apm {

using nlohmann::ordered_json;

namespace {

const ordered_json& empty_object() {
    static const ordered_json e = ordered_json::object();
    return e;
}

double number(const ordered_json& obj, const std::string& key, const std::string& path) {
    if (!obj.contains(key)) {
        throw ConfigError(path + "/" + key, "missing required number");
    }
    if (!obj.at(key).is_number()) {
        throw ConfigError(path + "/" + key, "expected a number");
    }
    return obj.at(key).get<double>();
}

std::vector<double> number_list(const ordered_json& j, const std::string& path) {
    if (!j.is_array()) {
        throw ConfigError(path, "expected a list of numbers");
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) {
            throw ConfigError(path + "/" + std::to_string(i), "expected a number");
        }
        out.push_back(j[i].get<double>());
    }
    return out;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

const ordered_json& ExperimentConfig::section(const std::string& name) const {
    if (doc.contains(name) && doc.at(name).is_object()) {
        return doc.at(name);
    }
    return empty_object();
}

Sequence parse_sequence(const ordered_json& j, const std::string& path, bool list_is_finite) {
    if (j.is_array()) {
        auto v = number_list(j, path);
        return list_is_finite ? Sequence::finite(std::move(v)) : Sequence::truncated(std::move(v));
    }
    if (!j.is_object()) {
        throw ConfigError(path, "expected a list or an object with prefix/rule");
    }
    std::vector<double> prefix;
    if (j.contains("prefix")) {
        prefix = number_list(j.at("prefix"), path + "/prefix");
    }
    if (!j.contains("rule")) {
        const std::string tail = get_or<std::string>(j, "tail", list_is_finite ? "zero" : "unknown", path);
        if (tail == "zero") {
            return Sequence::finite(std::move(prefix));
        }
        if (tail == "unknown") {
            return Sequence::truncated(std::move(prefix));
        }
        throw ConfigError(path + "/tail", "expected \"zero\" or \"unknown\"");
    }
    const std::string rule = get_or<std::string>(j, "rule", "", path);
    const ordered_json& params = j.contains("params") ? j.at("params") : empty_object();
    const std::string ppath = path + "/params";
    TailRule r;
    if (rule == "zero") {
        return Sequence::finite(std::move(prefix));
    } else if (rule == "constant") {
        r = TailRule::constant(number(params, "value", ppath));
    } else if (rule == "geometric") {
        r = TailRule::geometric(number(params, "scale", ppath), number(params, "ratio", ppath));
    } else if (rule == "power") {
        r = TailRule::power_law(number(params, "scale", ppath), number(params, "exponent", ppath));
    } else if (rule == "geometric_power") {
        r = TailRule{number(params, "scale", ppath), number(params, "ratio", ppath), number(params, "power", ppath)};
    } else {
        throw ConfigError(path + "/rule", "unknown rule '" + rule + "' (constant, geometric, power, geometric_power, zero)");
    }
    return Sequence::with_rule(std::move(prefix), r);
}

ShockLaw parse_law(const ordered_json& j, const std::string& path) {
    if (j.is_string()) {
        return parse_law(ordered_json{{"kind", j.get<std::string>()}}, path);
    }
    if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
        throw ConfigError(path + "/kind", "missing shock kind");
    }
    const std::string kind = j.at("kind").get<std::string>();
    ShockLaw law;
    if (kind == "gaussian") {
        law = GaussianLaw{};
    } else if (kind == "student_t" || kind == "standardized_student_t") {
        law = StudentTLaw{get_or<double>(j, "df", 5.0, path)};
    } else if (kind == "rademacher") {
        law = RademacherLaw{};
    } else if (kind == "two_point_aba") {
        law = TwoPointAbaLaw{};
    } else if (kind == "bounded_tail_power") {
        law = BoundedTailPowerLaw{get_or<double>(j, "theta", 4.0, path)};
    } else {
        throw ConfigError(path + "/kind", "unsupported shock kind '" + kind + "'");
    }
    try {
        (void)ShockFamily(law);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path, e.what());
    }
    return law;
}

ShockFamily parse_shocks(const ordered_json& j, const std::string& path) {
    if (j.is_object() && j.contains("cycle")) {
        const auto& c = j.at("cycle");
        if (!c.is_array() || c.empty()) {
            throw ConfigError(path + "/cycle", "expected a nonempty list of laws");
        }
        std::vector<ShockLaw> laws;
        for (std::size_t i = 0; i < c.size(); ++i) {
            laws.push_back(parse_law(c[i], path + "/cycle/" + std::to_string(i)));
        }
        return ShockFamily(std::move(laws));
    }
    return ShockFamily(parse_law(j, path));
}

Utility parse_utility(const ordered_json& j, const std::string& path) {
    if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
        throw ConfigError(path + "/kind", "missing utility kind");
    }
    const std::string kind = j.at("kind").get<std::string>();
    const ordered_json& p = j.contains("params") ? j.at("params") : j;
    const std::string ppath = j.contains("params") ? path + "/params" : path;
    try {
        Utility u;
        if (kind == "proof_u1") {
            u = Utility::proof_u1(number(p, "epsilon", ppath));
        } else if (kind == "proof_un") {
            u = Utility::proof_un(number(p, "kappa", ppath));
        } else if (kind == "power_moderate") {
            u = Utility::power_moderate(get_or<double>(p, "alpha", 0.0, ppath), get_or<double>(p, "p", 2.0, ppath),
                                        get_or<double>(p, "lambda", 1.0, ppath));
        } else if (kind == "exponential_bounded") {
            u = Utility::exponential_bounded();
        } else if (kind == "linear") {
            u = Utility::linear(get_or<double>(p, "slope", 1.0, ppath));
        } else if (kind == "custom") {
            if (!p.contains("slopes")) {
                throw ConfigError(ppath + "/slopes", "missing slopes");
            }
            std::vector<double> bp;
            if (p.contains("breakpoints")) {
                bp = number_list(p.at("breakpoints"), ppath + "/breakpoints");
            }
            u = Utility::custom(std::move(bp), number_list(p.at("slopes"), ppath + "/slopes"));
        } else {
            throw ConfigError(path + "/kind", "unsupported utility kind '" + kind + "'");
        }
        const double scale = get_or<double>(p, "scale", 1.0, ppath);
        return scale == 1.0 ? u : u.scaled(scale);
    } catch (const InvalidUtility& e) {
        throw ConfigError(path, e.what());
    }
}

MarketSpec parse_market(const ordered_json& j, const std::string& path) {
    if (!j.is_object()) {
        throw ConfigError(path, "expected an object");
    }
    MarketSpec spec;
    if (j.contains("b")) {
        Sequence b = parse_sequence(j.at("b"), path + "/b", true);
        if (b.prefix_size() == 0 && b.tail_kind() != TailKind::rule) {
            throw ConfigError(path + "/b", "empty asset list");
        }
        spec.natural_k = std::max<std::size_t>(1, b.prefix_size());
        spec.reduced = ReducedParams(std::move(b));
        return spec;
    }
    MarketParams mp;
    const double m = number(j, "m", path);
    if (!(m >= 1.0) || m != std::floor(m)) {
        throw ConfigError(path + "/m", "expected a positive integer");
    }
    mp.m = static_cast<std::size_t>(m);
    if (!j.contains("mu") || !j.contains("bar_beta")) {
        throw ConfigError(path, "market needs mu and bar_beta (or b)");
    }
    mp.mu = parse_sequence(j.at("mu"), path + "/mu", true);
    mp.bar_beta = parse_sequence(j.at("bar_beta"), path + "/bar_beta", false);
    if (j.contains("beta")) {
        const auto& rows = j.at("beta");
        if (!rows.is_array()) {
            throw ConfigError(path + "/beta", "expected a list of lists");
        }
        for (std::size_t r = 0; r < rows.size(); ++r) {
            mp.beta.push_back(number_list(rows[r], path + "/beta/" + std::to_string(r)));
        }
    }
    if (mp.mu.prefix_size() == 0 && mp.mu.tail_kind() != TailKind::rule) {
        throw ConfigError(path + "/mu", "empty asset list");
    }
    spec.natural_k = std::max({std::size_t{1}, mp.mu.prefix_size(), mp.bar_beta.prefix_size(), mp.last_loaded_asset()});
    try {
        spec.reduced = reduce_params(mp, spec.natural_k);
    } catch (const std::exception& e) {
        throw ConfigError(path, e.what());
    }
    spec.raw = std::move(mp);
    return spec;
}

ExperimentConfig parse_config(const ordered_json& doc) {
    if (!doc.is_object()) {
        throw ConfigError("", "config must be a JSON object");
    }
    ExperimentConfig cfg;
    cfg.doc = doc;
    if (!doc.contains("market")) {
        throw ConfigError("/market", "missing market section");
    }
    cfg.market = parse_market(doc.at("market"), "/market");
    cfg.shocks = doc.contains("shocks") ? parse_shocks(doc.at("shocks"), "/shocks") : ShockFamily();
    if (doc.contains("utility")) {
        cfg.utility = parse_utility(doc.at("utility"), "/utility");
    }
    cfg.seed = get_or<std::uint64_t>(doc, "seed", 0, "");
    cfg.samples = get_or<std::size_t>(doc, "samples", 10000, "");
    if (cfg.samples == 0) {
        throw ConfigError("/samples", "expected a positive sample count");
    }
    ordered_json canon = ordered_json::object();
    canon["market"] = doc.at("market");
    canon["shocks"] = doc.contains("shocks") ? doc.at("shocks") : ordered_json("gaussian");
    cfg.hash = fnv1a(canon.dump());
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) {
        throw std::runtime_error("cannot open config " + file.string());
    }
    ordered_json doc;
    try {
        doc = ordered_json::parse(in, nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("", std::string("invalid JSON: ") + e.what());
    }
    return parse_config(doc);
}

}  // namespace apm
