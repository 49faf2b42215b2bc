#include "thinlayer/problem.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>

#include "thinlayer/errors.hpp"

namespace thinlayer {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

void expect_args(const std::string& name, const std::vector<double>& args, size_t n, const std::string& key) {
    if (args.size() != n)
        throw ConfigError(key, name + " expects " + std::to_string(n) + " argument(s), got " + std::to_string(args.size()));
}

double lambda_min(const Mat2& D) {
    Eigen::SelfAdjointEigenSolver<Mat2> es(0.5 * (D + D.transpose()), Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

}  // namespace

std::pair<std::string, std::vector<double>> parse_call(const std::string& text, const std::string& key) {
    const std::string s = trim(text);
    const size_t open = s.find('(');
    if (open == std::string::npos) {
        if (s.empty()) throw ConfigError(key, "empty registry key");
        return {s, {}};
    }
    if (s.back() != ')') throw ConfigError(key, "missing closing parenthesis in '" + s + "'");
    const std::string name = trim(s.substr(0, open));
    std::vector<double> args;
    std::string body = s.substr(open + 1, s.size() - open - 2);
    size_t pos = 0;
    while (pos <= body.size()) {
        const size_t comma = body.find(',', pos);
        const std::string item = trim(body.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
        if (!item.empty() || comma != std::string::npos) {
            char* end = nullptr;
            const double v = std::strtod(item.c_str(), &end);
            if (item.empty() || end != item.c_str() + item.size() || !std::isfinite(v))
                throw ConfigError(key, "bad numeric argument '" + item + "' in '" + s + "'");
            args.push_back(v);
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return {name, args};
}

Kinetics make_kinetics(const std::string& key_text, int species) {
    const std::string key = "reaction";
    auto [name, args] = parse_call(key_text, key);
    Kinetics k;
    k.key = trim(key_text);
    const int j = species;
    if (name == "zero") {
        expect_args(name, args, 0, key);
        return k;
    }
    k.is_zero = false;
    if (name == "linear_decay") {
        expect_args(name, args, 1, key);
        const double rate = args[0];
        k.rate = [rate, j](std::span<const double> u) { return -rate * u[j]; };
        k.lipschitz = std::abs(rate);
        return k;
    }
    if (name == "logistic_clipped") {
        expect_args(name, args, 3, key);
        const double r = args[0], K = args[1], cap = args[2];
        if (!(K > 0.0) || !(cap > 0.0)) throw ConfigError(key, "logistic_clipped needs K > 0 and cap > 0");
        k.rate = [=](std::span<const double> u) {
            const double v = std::clamp(u[j], 0.0, cap);
            return r * v * (1.0 - v / K);
        };
        k.lipschitz = std::abs(r) * std::max(1.0, std::abs(1.0 - 2.0 * cap / K));
        return k;
    }
    if (name == "langmuir_clipped") {
        expect_args(name, args, 3, key);
        const double ka = args[0], kd = args[1], cap = args[2];
        if (!(cap > 0.0)) throw ConfigError(key, "langmuir_clipped needs cap > 0");
        k.rate = [=](std::span<const double> u) {
            const double v = std::clamp(u[j], 0.0, cap);
            return ka * v * (1.0 - v / cap) - kd * v;
        };
        k.lipschitz = std::abs(ka) + std::abs(kd);
        return k;
    }
    throw ConfigError(key, "unknown reaction '" + name + "'");
}

InitialData make_initial_data(const std::string& key_text) {
    const std::string key = "initial";
    auto [name, args] = parse_call(key_text, key);
    InitialData d;
    d.key = trim(key_text);
    if (name == "constant") {
        expect_args(name, args, 1, key);
        const double c = args[0];
        d.bulk_plus = [c](const Vec2&) { return c; };
        d.bulk_minus = d.bulk_plus;
        d.layer = [c](double, const Vec2&) { return c; };
        return d;
    }
    if (name == "two_reservoir") {
        expect_args(name, args, 2, key);
        const double a = args[0], b = args[1];
        d.bulk_plus = [a](const Vec2&) { return a; };
        d.bulk_minus = [b](const Vec2&) { return b; };
        d.layer = [a, b](double, const Vec2& z) { return 0.5 * (a + b) + 0.5 * (a - b) * z.y(); };
        return d;
    }
    if (name == "gaussian_bump") {
        expect_args(name, args, 2, key);
        const double x0 = args[0], sigma = args[1];
        if (!(sigma > 0.0)) throw ConfigError(key, "gaussian_bump needs sigma > 0");
        const double s2 = 2.0 * sigma * sigma;
        d.bulk_plus = [=](const Vec2& x) {
            return std::exp(-((x.x() - x0) * (x.x() - x0) + x.y() * x.y()) / s2);
        };
        d.bulk_minus = d.bulk_plus;
        d.layer = [=](double xp, const Vec2&) { return std::exp(-(xp - x0) * (xp - x0) / s2); };
        return d;
    }
    throw ConfigError(key, "unknown initial data '" + name + "'");
}

ManufacturedSource manufactured_cosine(double H, double eps, double D_bulk) {
    const double L = H - eps;
    const double factor = -1.0 + D_bulk * kPi * kPi / (L * L);
    ManufacturedSource m;
    m.key = "mms_cosine";
    m.exact = [=](double t, Region region, const Vec2& x) {
        const double e = std::exp(-t);
        switch (region) {
            case Region::BulkPlus: return e * std::cos(kPi * (x.y() - eps) / L);
            case Region::BulkMinus: return e * std::cos(kPi * (-x.y() - eps) / L);
            case Region::Channel: return e;
        }
        return 0.0;
    };
    m.source = [=](double t, Region region, const Vec2& x) {
        if (region == Region::Channel) return -std::exp(-t);
        return factor * m.exact(t, region, x);
    };
    return m;
}

SpeciesData simple_species(double D_plus, double D_layer, double D_minus) {
    SpeciesData s;
    s.D_plus = D_plus * Mat2::Identity();
    s.D_minus = D_minus * Mat2::Identity();
    const Mat2 Dl = D_layer * Mat2::Identity();
    s.D_layer = [Dl](double, double, const Vec2&) { return Dl; };
    s.q_layer = [](double, double, const Vec2&) { return Vec2::Zero().eval(); };
    return s;
}

double sampled_lipschitz(const Kinetics& k, int m, int pairs, double range, std::uint64_t seed) {
    if (k.is_zero) return 0.0;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-range, range);
    std::vector<double> a(m), b(m);
    double worst = 0.0;
    for (int p = 0; p < pairs; ++p) {
        double dist2 = 0.0;
        for (int i = 0; i < m; ++i) {
            a[i] = U(rng);
            b[i] = U(rng);
            dist2 += (a[i] - b[i]) * (a[i] - b[i]);
        }
        if (dist2 == 0.0) continue;
        worst = std::max(worst, std::abs(k(a) - k(b)) / std::sqrt(dist2));
    }
    return worst;
}

void validate_problem(const ProblemData& data, const ReferenceGeometry& geom, double horizon, std::uint64_t seed) {
    const int m = data.num_species();
    if (m < 1) throw DataMismatch("no species");
    if (static_cast<int>(data.initial.size()) != m) throw DataMismatch("initial data count differs from species count");
    if (!data.sources.empty() && static_cast<int>(data.sources.size()) != m)
        throw DataMismatch("source count differs from species count");
    for (int j = 0; j < m; ++j) {
        const SpeciesData& s = data.species[j];
        const InitialData& u0 = data.initial[j];
        if (!u0.bulk_plus || !u0.bulk_minus || !u0.layer) throw DataMismatch("initial data callbacks missing");
        if (!s.D_layer || !s.q_layer) throw DataMismatch("layer coefficient callbacks missing");
        for (const Mat2* D : {&s.D_plus, &s.D_minus})
            if (std::abs((*D)(0, 1) - (*D)(1, 0)) > 1e-12 || lambda_min(*D) < data.ellipticity_floor)
                throw DataMismatch("bulk diffusion of species " + std::to_string(j) + " violates ellipticity");
        if (!s.q_plus.allFinite() || !s.q_minus.allFinite()) throw DataMismatch("bulk advection not finite");
        for (int it = 0; it <= 4; ++it) {
            const double t = horizon * it / 4.0;
            for (int ix = 0; ix < 8; ++ix) {
                const double xp = ix / 8.0;
                for (int a = 0; a <= 8; ++a) {
                    const double z2 = -1.0 + a / 4.0;
                    for (int b = 0; b <= 8; ++b) {
                        const Vec2 z(geom.channel.left(z2) + geom.channel.width(z2) * b / 8.0, z2);
                        const Mat2 D = s.D_layer(t, xp, z);
                        if (std::abs(D(0, 1) - D(1, 0)) > 1e-12 || lambda_min(D) < data.ellipticity_floor)
                            throw DataMismatch("layer diffusion of species " + std::to_string(j) + " violates ellipticity");
                        if (!s.q_layer(t, xp, z).allFinite()) throw DataMismatch("layer advection not finite");
                    }
                }
            }
        }
        for (const Kinetics* k : {&s.f, &s.g, &s.h}) {
            const double q = sampled_lipschitz(*k, m, 10000, 5.0, seed + j);
            if (q > 1.05 * k->lipschitz + 1e-14)
                throw DataMismatch("reaction '" + k->key + "' exceeds its declared Lipschitz constant");
        }
    }
}

}  // namespace thinlayer
