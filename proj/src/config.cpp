#include "thinlayer/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <variant>

#include "thinlayer/errors.hpp"

namespace thinlayer {

namespace {

struct Value;
using Array = std::vector<Value>;
struct Value {
    std::variant<double, std::string, bool, Array> v;
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') quoted = !quoted;
        if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

class ValueParser {
public:
    ValueParser(const std::string& text, const std::string& key) : s_(text), key_(key) {}

    Value parse_all() {
        Value v = parse();
        skip_ws();
        if (pos_ != s_.size()) fail("trailing characters after value");
        return v;
    }

private:
    [[noreturn]] void fail(const std::string& why) const { throw ConfigError(key_, why + " in '" + s_ + "'"); }

    void skip_ws() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
    }

    Value parse() {
        skip_ws();
        if (pos_ >= s_.size()) fail("missing value");
        const char c = s_[pos_];
        if (c == '"') {
            const auto end = s_.find('"', pos_ + 1);
            if (end == std::string::npos) fail("unterminated string");
            Value v{s_.substr(pos_ + 1, end - pos_ - 1)};
            pos_ = end + 1;
            return v;
        }
        if (c == '[') {
            ++pos_;
            Array a;
            skip_ws();
            if (pos_ < s_.size() && s_[pos_] == ']') {
                ++pos_;
                return Value{a};
            }
            while (true) {
                a.push_back(parse());
                skip_ws();
                if (pos_ >= s_.size()) fail("unterminated array");
                if (s_[pos_] == ',') {
                    ++pos_;
                    skip_ws();
                    if (pos_ < s_.size() && s_[pos_] == ']') {
                        ++pos_;
                        return Value{a};
                    }
                    continue;
                }
                if (s_[pos_] == ']') {
                    ++pos_;
                    return Value{a};
                }
                fail("expected ',' or ']'");
            }
        }
        size_t end = pos_;
        while (end < s_.size() && s_[end] != ',' && s_[end] != ']' && s_[end] != ' ' && s_[end] != '\t') ++end;
        const std::string tok = s_.substr(pos_, end - pos_);
        pos_ = end;
        if (tok == "true") return Value{true};
        if (tok == "false") return Value{false};
        size_t used = 0;
        double d = 0.0;
        try {
            d = std::stod(tok, &used);
        } catch (const std::exception&) {
            fail("expected a number, string, boolean or array");
        }
        if (used != tok.size()) fail("malformed number");
        return Value{d};
    }

    std::string s_;
    std::string key_;
    size_t pos_ = 0;
};

double as_number(const Value& v, const std::string& key) {
    if (const auto* d = std::get_if<double>(&v.v)) return *d;
    throw ConfigError(key, "expected a number");
}

int as_int(const Value& v, const std::string& key) {
    const double d = as_number(v, key);
    if (d != std::floor(d) || std::abs(d) > 1e9) throw ConfigError(key, "expected an integer");
    return static_cast<int>(d);
}

std::string as_string(const Value& v, const std::string& key) {
    if (const auto* s = std::get_if<std::string>(&v.v)) return *s;
    throw ConfigError(key, "expected a string");
}

bool as_bool(const Value& v, const std::string& key) {
    if (const auto* b = std::get_if<bool>(&v.v)) return *b;
    throw ConfigError(key, "expected true or false");
}

std::vector<double> as_numbers(const Value& v, const std::string& key) {
    if (std::holds_alternative<double>(v.v)) return {std::get<double>(v.v)};
    const auto* a = std::get_if<Array>(&v.v);
    if (!a) throw ConfigError(key, "expected a number or an array of numbers");
    std::vector<double> out;
    for (const Value& x : *a) out.push_back(as_number(x, key));
    return out;
}

std::vector<std::string> as_strings(const Value& v, const std::string& key) {
    if (std::holds_alternative<std::string>(v.v)) return {std::get<std::string>(v.v)};
    const auto* a = std::get_if<Array>(&v.v);
    if (!a) throw ConfigError(key, "expected a string or an array of strings");
    std::vector<std::string> out;
    for (const Value& x : *a) out.push_back(as_string(x, key));
    return out;
}

Vec2 as_vec2(const Value& v, const std::string& key) {
    const auto n = as_numbers(v, key);
    if (n.size() != 2) throw ConfigError(key, "expected a two-component array");
    return {n[0], n[1]};
}

using Setter = void (*)(ExperimentConfig&, const Value&, const std::string&);

struct KeyEntry {
    ConfigKey info;
    Setter set;
};

const std::vector<KeyEntry>& key_entries() {
    static const std::vector<KeyEntry> table = {
        {{"geometry.H", "length", "1.0", "height of each bulk half domain"},
         [](ExperimentConfig& c, const Value& v, const std::string& k) { c.H = as_number(v, k); }},
        {{"geometry.width", "cell units", "\"constant(0.5)\"",
          "channel width: constant(w), linear(w_bottom, w_top) or cosine(w0, a)"},
         [](ExperimentConfig& c, const Value& v, const std::string& k) { c.width = as_string(v, k); }},
        {{"geometry.center", "cell units", "0.5", "channel centerline z1"},
         [](ExperimentConfig& c, const Value& v, const std::string& k) { c.center = as_number(v, k); }},
        {{"geometry.margin", "cell units", "0.05", "minimal distance of the channel to the cell sides"},
         [](ExperimentConfig& c, const Value& v, const std::string& k) { c.margin = as_number(v, k); }},
        {{"transform.kind", "-", "\"pinch\"", "cell evolution: pinch or static"},
         [](ExperimentConfig& c, const Value& v, const std::string& k) { c.transform = as_string(v, k); }},
        {{"transform.amplitude", "-", "0.3", "relative pinch strength"},
         [](ExperimentConfig& c, const Value& v, const std::string& k) { c.amplitude = as_number(v, k); }},
        {{"transform.band", "cell units", "0.05", "identity band next to the faces"},
         [](ExperimentConfig& c, const Value& v, const std::string& k) { c.band = as_number(v, k); }},
        {{"transform.c0", "-", "0.1", "determinant floor"},
         [](ExperimentConfig& c, const Value& v, const std::string& k) { c.c0 = as_number(v, k); }},
        {{"problem.species", "count", "1", "number of species"},
         [](ExperimentConfig& c, const Value& v, const std::string& k) { c.species = as_int(v, k); }},
        {{"problem.D_plus", "length^2/time", "1.0", "upper bulk diffusivity, scalar or one per species"},
         [](ExperimentConfig& c, const Value& v, const std::string& k) { c.D_plus = as_numbers(v, k); }},
        {{"problem.D_layer", "length^2/time", "1.0", "layer diffusivity, scalar or one per species"},
         [](ExperimentConfig& c, const Value& v, const std::string& k) { c.D_layer = as_numbers(v, k); }},
        {{"problem.D_minus", "length^2/time", "1.0", "lower bulk diffusivity, scalar or one per species"},
         [](ExperimentConfig& c, const Value& v, const std::string& k) { c.D_minus = as_numbers(v, k); }},
        {{"problem.q_plus", "length/time", "[0.0, 0.0]", "upper bulk advection velocity"},
         [](ExperimentConfig& c, const Value& v, const std::string& k) { c.q_plus = as_vec2(v, k); }},
        {{"problem.q_layer", "length/time", "[0.0, 0.0]", "layer advection velocity"},
         [](ExperimentConfig& c, const Value& v, const std::string& k) { c.q_layer = as_vec2(v, k); }},
        {{"problem.q_minus", "length/time", "[0.0, 0.0]", "lower bulk advection velocity"},
         [](ExperimentConfig& c, const Value& v, const std::string& k) { c.q_minus = as_vec2(v, k); }},
        {{"problem.f", "1/time", "\"zero\"", "bulk reaction key, one or one per species"},
         [](ExperimentConfig& c, const Value& v, const std::string& k) { c.f = as_strings(v, k); }},
        {{"problem.g", "1/time", "\"zero\"", "layer reaction key"},
         [](ExperimentConfig& c, const Value& v, const std::string& k) { c.g = as_strings(v, k); }},
        {{"problem.h", "length/time", "\"zero\"", "wall reaction key"},
         [](ExperimentConfig& c, const Value& v, const std::string& k) { c.h = as_strings(v, k); }},
        {{"problem.initial", "-", "\"gaussian_bump(0.5, 0.15)\"",
          "initial data: constant(c), two_reservoir(a, b) or gaussian_bump(x0, sigma)"},
         [](ExperimentConfig& c, const Value& v, const std::string& k) { c.initial = as_string(v, k); }},
        {{"problem.source", "-", "\"\"", "manufactured source: empty or mms_cosine"},
         [](ExperimentConfig& c, const Value& v, const std::string& k) { c.source = as_string(v, k); }},
        {{"numerics.eps", "length", "[0.25, 0.125]", "strictly decreasing scales with integer 1/eps"},
         [](ExperimentConfig& c, const Value& v, const std::string& k) { c.eps = as_numbers(v, k); }},
        {{"numerics.resolution", "count", "4", "cell mesh subdivisions r"},
         [](ExperimentConfig& c, const Value& v, const std::string& k) { c.resolution = as_int(v, k); }},
        {{"numerics.dt", "time", "0.01", "time step"},
         [](ExperimentConfig& c, const Value& v, const std::string& k) { c.dt = as_number(v, k); }},
        {{"numerics.T", "time", "0.5", "final time"},
         [](ExperimentConfig& c, const Value& v, const std::string& k) { c.T = as_number(v, k); }},
        {{"numerics.macro_nx", "count", "64", "macro bulk intervals along the interface"},
         [](ExperimentConfig& c, const Value& v, const std::string& k) { c.macro_nx = as_int(v, k); }},
        {{"numerics.macro_ny", "count", "32", "macro bulk intervals across each half domain"},
         [](ExperimentConfig& c, const Value& v, const std::string& k) { c.macro_ny = as_int(v, k); }},
        {{"numerics.seed", "-", "1", "random seed for sampled diagnostics"},
         [](ExperimentConfig& c, const Value& v, const std::string& k) {
             const int s = as_int(v, k);
             if (s < 0) throw ConfigError(k, "seed must be nonnegative");
             c.seed = static_cast<std::uint64_t>(s);
         }},
        {{"numerics.theta", "-", "[0.5, 1.0, 2.0]", "trace inequality parameters"},
         [](ExperimentConfig& c, const Value& v, const std::string& k) { c.theta = as_numbers(v, k); }},
        {{"numerics.output_interval", "time", "0.1", "snapshot spacing, a multiple of dt"},
         [](ExperimentConfig& c, const Value& v, const std::string& k) { c.output_interval = as_number(v, k); }},
        {{"numerics.tol", "-", "1e-10", "relative linear solver tolerance"},
         [](ExperimentConfig& c, const Value& v, const std::string& k) { c.tol = as_number(v, k); }},
        {{"numerics.audit_density", "count", "9", "samples per direction in the transform audit"},
         [](ExperimentConfig& c, const Value& v, const std::string& k) { c.audit_density = as_int(v, k); }},
        {{"output.dir", "path", "\"out\"", "output directory"},
         [](ExperimentConfig& c, const Value& v, const std::string& k) { c.dir = as_string(v, k); }},
        {{"output.plot", "-", "false", "write convergence.svg"},
         [](ExperimentConfig& c, const Value& v, const std::string& k) { c.plot = as_bool(v, k); }},
        {{"output.timings", "-", "true", "record wall-clock seconds (false writes 0)"},
         [](ExperimentConfig& c, const Value& v, const std::string& k) { c.timings = as_bool(v, k); }},
    };
    return table;
}

void apply(ExperimentConfig& cfg, const std::string& name, const Value& v) {
    for (const KeyEntry& e : key_entries())
        if (e.info.name == name) {
            const auto dot = name.find('.');
            e.set(cfg, v, name.substr(dot + 1));
            return;
        }
    throw ConfigError(name, "unknown key");
}

void apply_override(ExperimentConfig& cfg, const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError(text, "override must look like section.key=value");
    const std::string name = trim(text.substr(0, eq));
    const std::string raw = trim(text.substr(eq + 1));
    if (name.find('.') == std::string::npos) throw ConfigError(name, "override key needs a section prefix");
    Value v;
    try {
        v = ValueParser(raw, name).parse_all();
    } catch (const ConfigError&) {
        v = Value{raw};
    }
    apply(cfg, name, v);
}

void fail_if(bool bad, const std::string& key, const std::string& why) {
    if (bad) throw ConfigError(key, why);
}

template <class T>
T per_species(const std::vector<T>& v, int s, const std::string& key) {
    if (v.size() == 1) return v[0];
    if (static_cast<int>(v.size()) <= s) throw ConfigError(key, "needs one entry per species");
    return v[s];
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys = [] {
        std::vector<ConfigKey> out;
        for (const KeyEntry& e : key_entries()) out.push_back(e.info);
        return out;
    }();
    return keys;
}

std::string config_help() {
    std::ostringstream os;
    os << "Config keys (TOML sections [geometry] [transform] [problem] [numerics] [output]):\n";
    for (const ConfigKey& k : config_keys()) {
        os << "  " << k.name;
        for (size_t i = k.name.size(); i < 26; ++i) os << ' ';
        os << "[" << k.unit << "] default " << k.default_value << "\n";
        os << "      " << k.help << "\n";
    }
    return os.str();
}

ExperimentConfig parse_config_text(const std::string& text, const std::vector<std::string>& overrides) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno), "malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "geometry" && section != "transform" && section != "problem" && section != "numerics" &&
                section != "output")
                throw ConfigError(section, "unknown section");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno), "expected key = value");
        if (section.empty()) throw ConfigError(trim(line.substr(0, eq)), "key outside of a section");
        const std::string name = section + "." + trim(line.substr(0, eq));
        apply(cfg, name, ValueParser(trim(line.substr(eq + 1)), name).parse_all());
    }
    for (const std::string& o : overrides) apply_override(cfg, o);
    validate_config(cfg);
    return cfg;
}

ExperimentConfig parse_config(const std::string& path, const std::vector<std::string>& overrides) {
    if (path.empty()) return parse_config_text("", overrides);
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return parse_config_text(os.str(), overrides);
}

void validate_config(const ExperimentConfig& c) {
    fail_if(!(c.H > 0.0), "H", "must be positive");
    fail_if(!(c.margin > 0.0 && c.margin < 0.5), "margin", "must lie in (0, 0.5)");
    fail_if(c.transform != "pinch" && c.transform != "static", "kind", "must be pinch or static");
    fail_if(!(c.amplitude >= 0.0), "amplitude", "must be nonnegative");
    fail_if(!(c.band > 0.0 && c.band < 1.0), "band", "must lie in (0, 1)");
    fail_if(!(c.c0 > 0.0), "c0", "must be positive");
    fail_if(c.species < 1, "species", "must be at least 1");
    for (const auto* v : {&c.D_plus, &c.D_layer, &c.D_minus})
        for (double d : *v) fail_if(!(d > 0.0), "D", "diffusivities must be positive");
    fail_if(c.eps.empty(), "eps", "needs at least one value");
    for (size_t i = 0; i < c.eps.size(); ++i) {
        try {
            cells_per_unit(c.eps[i]);
        } catch (const InvalidScale&) {
            throw ConfigError("eps", "1/ε must be an integer");
        }
        fail_if(c.eps[i] >= c.H, "eps", "must be smaller than H");
        fail_if(i > 0 && !(c.eps[i] < c.eps[i - 1]), "eps", "must be strictly decreasing");
    }
    fail_if(c.resolution < 2, "resolution", "must be at least 2");
    fail_if(!(c.T > 0.0), "T", "must be positive");
    fail_if(!(c.dt > 0.0) || c.dt > c.T * (1.0 + 1e-12), "dt", "must lie in (0, T]");
    const double steps = c.T / c.dt;
    fail_if(std::abs(steps - std::round(steps)) > 1e-9 * steps, "dt", "must divide T");
    const double outs = c.output_interval / c.dt;
    fail_if(!(c.output_interval > 0.0) || std::abs(outs - std::round(outs)) > 1e-9 * outs, "output_interval",
            "must be a positive multiple of dt");
    fail_if(c.macro_nx < 2 || c.macro_ny < 1, "macro_nx", "macro mesh too coarse");
    fail_if(c.theta.empty(), "theta", "needs at least one value");
    for (double t : c.theta) fail_if(!(t > 0.0), "theta", "must be positive");
    fail_if(!(c.tol > 0.0 && c.tol < 1.0), "tol", "must lie in (0, 1)");
    fail_if(c.audit_density < 3, "audit_density", "must be at least 3");
    fail_if(!c.source.empty() && c.source != "mms_cosine", "source", "unknown manufactured source");
    fail_if(!c.source.empty() && c.transform != "static", "source",
            "the manufactured solution needs transform.kind = \"static\"");
    fail_if(!c.source.empty() && c.D_plus != c.D_minus, "source", "the manufactured solution needs D_plus = D_minus");
    for (int s = 0; s < c.species; ++s) {
        per_species(c.D_plus, s, "D_plus");
        per_species(c.D_layer, s, "D_layer");
        per_species(c.D_minus, s, "D_minus");
        make_kinetics(per_species(c.f, s, "f"), s);
        make_kinetics(per_species(c.g, s, "g"), s);
        make_kinetics(per_species(c.h, s, "h"), s);
    }
    make_initial_data(c.initial);
    make_channel(c);
}

ChannelSpec make_channel(const ExperimentConfig& c) {
    auto [name, args] = parse_call(c.width, "width");
    ChannelSpec ch;
    ch.center = c.center;
    ch.boundary_margin = c.margin;
    if (name == "constant" && args.size() == 1) {
        const double w = args[0];
        ch.width = [w](double) { return w; };
    } else if (name == "linear" && args.size() == 2) {
        const double w0 = args[0], w1 = args[1];
        ch.width = [w0, w1](double z2) { return w0 + 0.5 * (z2 + 1.0) * (w1 - w0); };
    } else if (name == "cosine" && args.size() == 2) {
        const double w0 = args[0], a = args[1];
        ch.width = [w0, a](double z2) { return w0 + a * std::cos(M_PI * z2); };
    } else {
        throw ConfigError("width", "expected constant(w), linear(w_bottom, w_top) or cosine(w0, a)");
    }
    return ch;
}

ReferenceGeometry make_geometry(const ExperimentConfig& c) {
    try {
        return build_reference_geometry(make_channel(c), c.H);
    } catch (const ShapeViolation& e) {
        throw ConfigError("width", e.what());
    }
}

TransformSpec make_transform(const ExperimentConfig& c) {
    if (c.transform == "static") return static_transform(c.T);
    PinchParams p;
    p.amplitude = c.amplitude;
    p.band = c.band;
    p.center = c.center;
    p.horizon = c.T;
    p.det_floor = c.c0;
    return pinch_transform(p);
}

ProblemData make_problem(const ExperimentConfig& c, double eps) {
    ProblemData data;
    for (int s = 0; s < c.species; ++s) {
        SpeciesData sd = simple_species(per_species(c.D_plus, s, "D_plus"), per_species(c.D_layer, s, "D_layer"),
                                        per_species(c.D_minus, s, "D_minus"));
        sd.q_plus = c.q_plus;
        sd.q_minus = c.q_minus;
        const Vec2 ql = c.q_layer;
        sd.q_layer = [ql](double, double, const Vec2&) { return ql; };
        sd.f = make_kinetics(per_species(c.f, s, "f"), s);
        sd.g = make_kinetics(per_species(c.g, s, "g"), s);
        sd.h = make_kinetics(per_species(c.h, s, "h"), s);
        data.species.push_back(std::move(sd));
        if (c.source.empty()) {
            data.initial.push_back(make_initial_data(c.initial));
            data.sources.push_back(std::nullopt);
            continue;
        }
        if (!(eps > 0.0)) throw ConfigError("source", "manufactured problems need a scale eps");
        const double L = c.H - eps;
        InitialData init;
        init.key = "mms_cosine";
        init.bulk_plus = [L](const Vec2& x) { return std::cos(M_PI * x.y() / L); };
        init.bulk_minus = [L](const Vec2& x) { return std::cos(-M_PI * x.y() / L); };
        init.layer = [](double, const Vec2&) { return 1.0; };
        data.initial.push_back(init);
        data.sources.push_back(manufactured_cosine(c.H, eps, per_species(c.D_plus, s, "D_plus")));
    }
    return data;
}

}  // namespace thinlayer
