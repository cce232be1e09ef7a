#pragma once

#include "apm/market_model.hpp"
#include "apm/shock_library.hpp"
#include "apm/utility.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

namespace apm {

/// Malformed config; `path` is the JSON pointer of the offending field.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string path, const std::string& what)
        : std::runtime_error(path + ": " + what), path_(std::move(path)) {}
    [[nodiscard]] const std::string& path() const { return path_; }

private:
    std::string path_;
};

struct MarketSpec {
    std::optional<MarketParams> raw;  // unset when b is given directly
    ReducedParams reduced;
    std::size_t natural_k = 1;        // longest explicit prefix
};

struct ExperimentConfig {
    nlohmann::ordered_json doc;
    MarketSpec market;
    ShockFamily shocks;
    std::optional<Utility> utility;
    std::uint64_t seed = 0;
    std::size_t samples = 10000;
    std::uint64_t hash = 0;  // FNV-1a of the canonical market + shocks sections

    /// Command section, or an empty object.
    [[nodiscard]] const nlohmann::ordered_json& section(const std::string& name) const;
};

[[nodiscard]] Sequence parse_sequence(const nlohmann::ordered_json& j, const std::string& path, bool list_is_finite);
[[nodiscard]] ShockLaw parse_law(const nlohmann::ordered_json& j, const std::string& path);
[[nodiscard]] ShockFamily parse_shocks(const nlohmann::ordered_json& j, const std::string& path);
[[nodiscard]] Utility parse_utility(const nlohmann::ordered_json& j, const std::string& path);
[[nodiscard]] MarketSpec parse_market(const nlohmann::ordered_json& j, const std::string& path);

[[nodiscard]] ExperimentConfig parse_config(const nlohmann::ordered_json& doc);
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& file);

/// Typed field access with path-qualified errors.
template <class T>
[[nodiscard]] T get_or(const nlohmann::ordered_json& obj, const std::string& key, T fallback,
                       const std::string& path) {
    if (!obj.is_object() || !obj.contains(key)) {
        return fallback;
    }
    try {
        return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + "/" + key, std::string("wrong type (") + e.what() + ")");
    }
}

}  // namespace apm
