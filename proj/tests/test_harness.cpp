#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "thinlayer/errors.hpp"
#include "thinlayer/harness.hpp"

using namespace thinlayer;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int count_lines(const fs::path& p) {
    std::ifstream in(p);
    int n = 0;
    for (std::string line; std::getline(in, line);) ++n;
    return n;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("thinlayer_harness_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

ExperimentConfig small(const std::vector<std::string>& extra = {}) {
    std::vector<std::string> o{"numerics.T=0.1", "numerics.dt=0.02", "numerics.output_interval=0.02",
                               "numerics.macro_nx=16", "numerics.macro_ny=8", "output.timings=false"};
    o.insert(o.end(), extra.begin(), extra.end());
    return parse_config("", o);
}

}  // namespace

TEST(Config, Defaults) {
    const ExperimentConfig c = parse_config("");
    EXPECT_EQ(c.transform, "pinch");
    EXPECT_EQ(c.eps, (std::vector<double>{0.25, 0.125}));
    EXPECT_EQ(c.dt, 0.01);
    EXPECT_EQ(c.T, 0.5);
    EXPECT_FALSE(config_keys().empty());
    EXPECT_NE(config_help().find("numerics.dt"), std::string::npos);
}

TEST(Config, FileAndOverrides) {
    const std::string text =
        "# comment\n[numerics]\neps = [0.5, 0.25]\nT = 0.2\n[transform]\nkind = \"static\"\n[output]\nplot = true\n";
    const ExperimentConfig c = parse_config_text(text, {"numerics.dt=0.005"});
    EXPECT_EQ(c.eps, (std::vector<double>{0.5, 0.25}));
    EXPECT_EQ(c.dt, 0.005);
    EXPECT_EQ(c.transform, "static");
    EXPECT_TRUE(c.plot);
}

TEST(Config, Rejections) {
    auto key_of = [](auto&& f) {
        try {
            f();
        } catch (const ConfigError& e) {
            return e.key();
        }
        return std::string("none");
    };
    EXPECT_EQ(key_of([] { parse_config("", {"numerics.eps=[0.3]"}); }), "eps");
    EXPECT_EQ(key_of([] { parse_config("", {"numerics.eps=[0.125, 0.25]"}); }), "eps");
    EXPECT_EQ(key_of([] { parse_config("", {"numerics.bogus=1"}); }), "numerics.bogus");
    EXPECT_EQ(key_of([] { parse_config("", {"numerics.dt=0.03"}); }), "dt");
    EXPECT_EQ(key_of([] { parse_config("", {"problem.initial=\"nonsense(1)\""}); }), "initial");
    EXPECT_EQ(key_of([] { parse_config_text("[nowhere]\nx = 1\n"); }), "nowhere");
    EXPECT_THROW(parse_config("/nonexistent/config.toml"), ConfigError);
}

TEST(Harness, RatesFromRows) {
    std::vector<ConvergenceRow> rows(3);
    for (int i = 0; i < 3; ++i) {
        rows[i].eps = 0.25 / (1 << i);
        rows[i].err_bulk_plus = 0.1 / (1 << i);
        rows[i].err_bulk_minus = 0.1 / (1 << (2 * i));
        rows[i].err_layer_2s = 0.3 / (1 << i);
    }
    const auto rates = compute_rates(rows);
    ASSERT_EQ(rates.size(), 2u);
    EXPECT_NEAR(rates[0].rate_bulk_plus, 1.0, 1e-14);
    EXPECT_NEAR(rates[1].rate_bulk_minus, 2.0, 1e-14);
    EXPECT_TRUE(rates[1].defined);
    rows[2].err_layer_2s = 0.0;
    EXPECT_FALSE(compute_rates(rows)[1].defined);
    EXPECT_TRUE(std::isnan(compute_rates(rows)[1].rate_layer_2s));
}

TEST(Harness, ThreeEpsBookkeeping) {
    const ExperimentReport rep = run_convergence_study(small({"numerics.eps=[0.25, 0.125, 0.0625]"}));
    ASSERT_EQ(rep.rows.size(), 3u);
    ASSERT_EQ(rep.final_rows.size(), 3u);
    ASSERT_EQ(rep.rates.size(), 2u);
    EXPECT_EQ(rep.rates[1].eps_fine, 0.0625);
    EXPECT_FALSE(rep.audit.empty());
    EXPECT_FALSE(rep.flux.empty());
    for (const auto& r : rep.rows) {
        EXPECT_GT(r.err_layer_2s, 0.0);
        EXPECT_LE(r.mass_drift, 1e-8);
    }
}

TEST(Harness, ZeroDataGivesUndefinedRates) {
    const ExperimentReport rep = run_convergence_study(small({"problem.initial=\"constant(0)\""}));
    for (const auto& r : rep.rows) {
        EXPECT_EQ(r.err_bulk_plus, 0.0);
        EXPECT_EQ(r.err_bulk_minus, 0.0);
        EXPECT_EQ(r.err_layer_2s, 0.0);
    }
    ASSERT_EQ(rep.rates.size(), 1u);
    EXPECT_FALSE(rep.rates[0].defined);
}

TEST(Harness, StaticLayerErrorDecays) {
    const ExperimentReport rep =
        run_convergence_study(small({"transform.kind=\"static\"", "numerics.eps=[0.25, 0.125, 0.0625]"}));
    for (size_t i = 1; i < rep.rows.size(); ++i)
        EXPECT_LE(rep.rows[i].err_layer_2s, 0.8 * rep.rows[i - 1].err_layer_2s);
}

TEST(Harness, EmptyReportWritesHeaders) {
    const fs::path dir = scratch("empty");
    write_report(ExperimentReport{}, dir.string());
    for (const char* f : {"convergence.csv", "rates.csv", "fluxjump.csv", "audit.csv"}) EXPECT_EQ(count_lines(dir / f), 1) << f;
    EXPECT_EQ(slurp(dir / "convergence.csv"),
              "eps,err_bulk_plus,err_bulk_minus,err_layer_2s,mass_drift,norm_L_sup,norm_H_l2,trace_C,seconds\n");
    EXPECT_FALSE(fs::exists(dir / "convergence.svg"));
}

TEST(Harness, RoundTripAndDeterminism) {
    const ExperimentConfig cfg = small();
    const ExperimentReport a = run_convergence_study(cfg);
    const fs::path d1 = scratch("rt1"), d2 = scratch("rt2"), d3 = scratch("rt3");
    write_report(a, d1.string(), true);
    EXPECT_TRUE(fs::exists(d1 / "convergence.svg"));
    EXPECT_EQ(count_lines(d1 / "convergence.csv"), 1 + static_cast<int>(cfg.eps.size()));

    const ExperimentReport back = read_report(d1.string());
    ASSERT_EQ(back.rows.size(), a.rows.size());
    for (size_t i = 0; i < a.rows.size(); ++i) {
        EXPECT_EQ(back.rows[i].eps, a.rows[i].eps);
        EXPECT_EQ(back.rows[i].err_bulk_plus, a.rows[i].err_bulk_plus);
        EXPECT_EQ(back.rows[i].err_layer_2s, a.rows[i].err_layer_2s);
        EXPECT_EQ(back.rows[i].norm_H_l2, a.rows[i].norm_H_l2);
    }
    ASSERT_EQ(back.flux.size(), a.flux.size());
    for (size_t i = 0; i < a.flux.size(); ++i) EXPECT_EQ(back.flux[i].residual, a.flux[i].residual);
    write_report(back, d2.string());

    write_report(run_convergence_study(cfg), d3.string());
    for (const char* f : {"convergence.csv", "convergence_final.csv", "rates.csv", "fluxjump.csv", "audit.csv", "trace.csv"}) {
        EXPECT_EQ(slurp(d1 / f), slurp(d2 / f)) << f;
        EXPECT_EQ(slurp(d1 / f), slurp(d3 / f)) << f;
    }
}

TEST(Harness, DoubleFormatting) {
    for (double x : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0, 5e-324})
        EXPECT_EQ(parse_double(format_double(x)), x);
    EXPECT_TRUE(std::isnan(parse_double(format_double(std::nan("")))));
    EXPECT_EQ(parse_double(format_double(INFINITY)), INFINITY);
}

TEST(Harness, MmsNeedsSource) {
    EXPECT_THROW(run_mms_study(small()), ConfigError);
    EXPECT_THROW(run_convergence_study(small({"transform.kind=\"static\"", "problem.source=\"mms_cosine\""})),
                 ConfigError);
}
