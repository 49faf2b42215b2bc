#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "thinlayer/geometry.hpp"
#include "thinlayer/types.hpp"

namespace thinlayer {

/// Reaction term R^m -> R with a declared Lipschitz constant.
struct Kinetics {
    std::string key = "zero";
    std::function<double(std::span<const double>)> rate;
    double lipschitz = 0.0;
    bool is_zero = true;

    double operator()(std::span<const double> u) const { return is_zero ? 0.0 : rate(u); }
};

/// Parses zero, linear_decay(k), logistic_clipped(r,K,cap), langmuir_clipped(ka,kd,cap);
/// the result acts on component `species`. Throws ConfigError on unknown keys.
Kinetics make_kinetics(const std::string& key, int species);

struct SpeciesData {
    Mat2 D_plus = Mat2::Identity();
    Mat2 D_minus = Mat2::Identity();
    std::function<Mat2(double t, double xp, const Vec2& z)> D_layer;
    Vec2 q_plus = Vec2::Zero();
    Vec2 q_minus = Vec2::Zero();
    std::function<Vec2(double t, double xp, const Vec2& z)> q_layer;
    Kinetics f, g, h;
};

/// Initial data in limit coordinates: bulk functions on the macro half domains and a cell
/// function on Sigma x Z*. Micro data is bulk_plus(x1, x_n - eps), bulk_minus(x1, x_n + eps)
/// and layer(x1, x/eps - (k, 0)).
struct InitialData {
    std::string key = "constant(0)";
    std::function<double(const Vec2&)> bulk_plus;
    std::function<double(const Vec2&)> bulk_minus;
    std::function<double(double xp, const Vec2& z)> layer;
};

/// Parses constant(c), two_reservoir(a,b), gaussian_bump(x0,sigma).
InitialData make_initial_data(const std::string& key);

/// Manufactured source in micro coordinates. Verification-only extension of the model.
struct ManufacturedSource {
    std::string key;
    std::function<double(double t, Region region, const Vec2& x)> source;
    std::function<double(double t, Region region, const Vec2& x)> exact;
};

/// u+ = e^-t cos(pi (x_n - eps)/(H - eps)), u- mirrored, layer u = e^-t, for diffusion D (isotropic).
ManufacturedSource manufactured_cosine(double H, double eps, double D_bulk);

struct ProblemData {
    std::vector<SpeciesData> species;
    std::vector<InitialData> initial;
    std::vector<std::optional<ManufacturedSource>> sources;
    double ellipticity_floor = 1e-3;

    int num_species() const { return static_cast<int>(species.size()); }
};

/// Constant data helper: isotropic diffusion and zero reactions.
SpeciesData simple_species(double D_plus, double D_layer, double D_minus);

/// Checks ellipticity, Lipschitz quotients on 10^4 random pairs, finiteness of q.
/// Throws DataMismatch on violation.
void validate_problem(const ProblemData& data, const ReferenceGeometry& geom, double horizon, std::uint64_t seed = 7);

/// Sampled Lipschitz quotient sup |k(u) - k(v)| / |u - v| over random pairs in [-range, range]^m.
double sampled_lipschitz(const Kinetics& k, int m, int pairs, double range, std::uint64_t seed);

/// Splits `name(a, b, ...)` into name and numeric arguments. Throws ConfigError.
std::pair<std::string, std::vector<double>> parse_call(const std::string& text, const std::string& key);

}  // namespace thinlayer
