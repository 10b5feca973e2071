// Scenario files: strict JSON ingestion into library settings.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sturm/coefficients.hpp"
#include "sturm/field.hpp"
#include "sturm/integrator.hpp"

namespace sturm {

struct ScenarioConfig {
    std::string name = "scenario";
    SpatialGrid grid;
    CoefficientSpec coeff;
    nlohmann::json coeff_source;  // the coeff object as read, rebuilt per b by sweep

    double eta_min = -10.0;
    double eta_max = 10.0;
    int scan_n = 400;
    int eig_count = 16;

    StepController ctrl;

    // Initial data: explicit mode coefficients, else an expression in x, else
    // random modes drawn from the seed.
    std::vector<double> initial_modes;
    std::optional<std::string> initial_expr;
    double random_amplitude = 1.0;
    int random_modes = 6;

    std::vector<std::uint64_t> seeds{0};

    double sphere_dt = 1e-2;
    double sphere_t_max = 50.0;

    bool verify = true;
    double verify_eps = 1e-6;
    int verify_scales = 8;

    std::optional<int> ymap_reference;  // index into the equilibria list
    std::optional<int> ymap_n;

    std::vector<double> sweep_b;

    std::string output_dir = "out";
};

/// Parses a scenario document. Unknown keys, wrong types and out-of-range values
/// throw ConfigError naming the dotted key.
ScenarioConfig parse_config(const nlohmann::json& doc);

/// Reads and parses a file; unreadable files and JSON syntax errors are ConfigErrors.
ScenarioConfig load_config(const std::string& path);

/// Builds the coefficients described by a coeff object, with b overridden when given.
CoefficientSpec build_coefficients(const nlohmann::json& coeff, std::optional<double> b = std::nullopt);

/// Uniform draw in [0, 1) from the top 53 bits of a 64-bit engine output.
inline double unit_uniform(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Initial field for a run with the given seed.
StateField initial_field(const ScenarioConfig& cfg, std::uint64_t seed);

}  // namespace sturm
