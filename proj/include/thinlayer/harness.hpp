#pragma once

#include <string>
#include <vector>

#include "thinlayer/config.hpp"
#include "thinlayer/macro_solver.hpp"
#include "thinlayer/micro_solver.hpp"
#include "thinlayer/unfolding.hpp"

namespace thinlayer {

/// One row per eps. Errors are summed in quadrature over species.
struct ConvergenceRow {
    double eps = 0.0;
    double err_bulk_plus = 0.0;   // L2(0,T; L2)
    double err_bulk_minus = 0.0;
    double err_layer_2s = 0.0;
    double mass_drift = 0.0;      // largest relative drift over species
    double norm_L_sup = 0.0;
    double norm_H_l2 = 0.0;
    double trace_C = 0.0;         // largest C(theta)
    double seconds = 0.0;
};

struct FinalRow {
    double eps = 0.0;
    double err_bulk_plus = 0.0;
    double err_bulk_minus = 0.0;
    double err_layer_2s = 0.0;
};

/// log2 error ratios between consecutive eps; nan with defined = false when an error vanishes.
struct RateRow {
    double eps_coarse = 0.0;
    double eps_fine = 0.0;
    double rate_bulk_plus = 0.0;
    double rate_bulk_minus = 0.0;
    double rate_layer_2s = 0.0;
    bool defined = true;
};

struct FluxRow {
    double t = 0.0;
    int node = 0;
    int species = 0;
    double flux_plus = 0.0;
    double flux_minus = 0.0;
    double jump = 0.0;
    double residual = 0.0;  // r_jump
    double cell_plus = 0.0;
    double cell_minus = 0.0;
    double r_plus = 0.0;
    double r_minus = 0.0;
};

struct AuditCsvRow {
    AssumptionRow row;
    double identity_band_defect = 0.0;
    double derivative_mismatch = 0.0;
    double piola_defect = 0.0;
    std::string flags;  // ';'-joined row and global flags
};

struct TraceRow {
    double eps = 0.0;
    double theta = 0.0;
    double C = 0.0;
};

struct ExperimentReport {
    std::vector<ConvergenceRow> rows;
    std::vector<FinalRow> final_rows;
    std::vector<RateRow> rates;
    std::vector<FluxRow> flux;
    std::vector<AuditCsvRow> audit;
    std::vector<TraceRow> trace;
    double macro_seconds = 0.0;
};

/// Macro once, micro per eps, errors against the macro trajectory at every step.
/// With flush_partial the rows finished before a failure are written to cfg.dir.
ExperimentReport run_convergence_study(const ExperimentConfig& cfg, bool flush_partial = false);

std::vector<RateRow> compute_rates(const std::vector<ConvergenceRow>& rows);

struct MmsRow {
    std::string kind;  // spatial or temporal
    double param = 0.0;  // mesh size or dt
    double error = 0.0;
    double order = 0.0;  // nan on the first row
};

struct MmsReport {
    double eps = 0.0;
    std::vector<MmsRow> rows;
    double spatial_order = 0.0;
    double temporal_order = 0.0;
};

/// Spatial sweep r, 2r, 4r against the exact solution at small dt; temporal sweep
/// dt in {1/25, 1/50, 1/100} by differences of successive solutions, on the first eps.
MmsReport run_mms_study(const ExperimentConfig& cfg);

/// L2 error of a micro state against the manufactured solution (7-point rule).
double mms_error(const MicroMesh& mesh, const MicroState& state, const ManufacturedSource& src, int species = 0);

/// Writes convergence.csv, convergence_final.csv, rates.csv, fluxjump.csv, audit.csv, trace.csv
/// and convergence.svg when plot is set.
void write_report(const ExperimentReport& report, const std::string& dir, bool plot = false);
ExperimentReport read_report(const std::string& dir);
void write_mms_report(const MmsReport& report, const std::string& dir);

void write_trajectory(const std::vector<MicroState>& states, const std::string& path);
void write_diagnostics(const std::vector<MicroDiagnostics>& diag, const std::string& path);
void write_unfolded(const UnfoldedField& field, const std::string& path);
void write_evolved_cells(const Mesh& cell, const std::vector<EvolvedCell>& cells, double t, const std::string& path);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double x);
double parse_double(const std::string& s);

}  // namespace thinlayer
