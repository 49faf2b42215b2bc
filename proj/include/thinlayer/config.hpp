#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "thinlayer/geometry.hpp"
#include "thinlayer/problem.hpp"
#include "thinlayer/transform.hpp"

namespace thinlayer {

struct ExperimentConfig {
    // [geometry]
    double H = 1.0;
    std::string width = "constant(0.5)";
    double center = 0.5;
    double margin = 0.05;
    // [transform]
    std::string transform = "pinch";
    double amplitude = 0.3;
    double band = 0.05;
    double c0 = 0.1;
    // [problem]
    int species = 1;
    std::vector<double> D_plus{1.0};
    std::vector<double> D_layer{1.0};
    std::vector<double> D_minus{1.0};
    Vec2 q_plus = Vec2::Zero();
    Vec2 q_layer = Vec2::Zero();
    Vec2 q_minus = Vec2::Zero();
    std::vector<std::string> f{"zero"};
    std::vector<std::string> g{"zero"};
    std::vector<std::string> h{"zero"};
    std::string initial = "gaussian_bump(0.5, 0.15)";
    std::string source;
    // [numerics]
    std::vector<double> eps{0.25, 0.125};
    int resolution = 4;
    double dt = 0.01;
    double T = 0.5;
    int macro_nx = 64;
    int macro_ny = 32;
    std::uint64_t seed = 1;
    std::vector<double> theta{0.5, 1.0, 2.0};
    double output_interval = 0.1;
    double tol = 1e-10;
    int audit_density = 9;
    // [output]
    std::string dir = "out";
    bool plot = false;
    bool timings = true;
};

struct ConfigKey {
    std::string name;  // section.key
    std::string unit;
    std::string default_value;
    std::string help;
};

/// Every accepted key with its unit and default.
const std::vector<ConfigKey>& config_keys();
std::string config_help();

/// Reads a TOML-style file (sections, key = number | "string" | bool | [array]) and applies
/// `section.key=value` overrides. An empty path means defaults only. Throws ConfigError.
ExperimentConfig parse_config(const std::string& path, const std::vector<std::string>& overrides = {});
ExperimentConfig parse_config_text(const std::string& text, const std::vector<std::string>& overrides = {});
void validate_config(const ExperimentConfig& cfg);

ChannelSpec make_channel(const ExperimentConfig& cfg);
ReferenceGeometry make_geometry(const ExperimentConfig& cfg);
/// Pinch ramps over [0, T]; static is the identity.
TransformSpec make_transform(const ExperimentConfig& cfg);
/// With a manufactured source the problem is the verification case for eps.
ProblemData make_problem(const ExperimentConfig& cfg, double eps = 0.0);

}  // namespace thinlayer
