#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "thinlayer/linear_solver.hpp"
#include "thinlayer/mesh.hpp"
#include "thinlayer/problem.hpp"
#include "thinlayer/transform.hpp"

namespace thinlayer {

struct MicroState {
    double t = 0.0;
    std::vector<Vector> u;   // one vector per species
    std::vector<double> jw;  // J at channel quadrature points, element-major
};

struct MicroDiagnostics {
    double t = 0.0;
    int species = 0;
    double mass = 0.0;
    double norm_L = 0.0;
    double norm_H = 0.0;
};

/// Semi-implicit Euler for the transformed micro system on the fixed reference mesh.
class MicroSolver {
public:
    MicroSolver(const MicroMesh& mesh, const ReferenceGeometry& geom, const ProblemData& data,
                const TransformSpec& spec, SolveOptions opt = {});
    ~MicroSolver();

    MicroState init() const;
    MicroState step(const MicroState& state, double dt);
    /// States at t = 0 and every output_interval up to T; on_step sees every state.
    std::vector<MicroState> solve(double dt, double T, double output_interval,
                                  std::vector<MicroDiagnostics>* diagnostics = nullptr,
                                  const std::function<void(const MicroState&)>& on_step = {});

    /// (|u|_L, |u|_H) with layer weights 1/eps on masses and eps on gradients.
    std::pair<double, double> scaled_norms(const MicroState& state, int species) const;
    /// sum_bulk int u + eps^-1 int_layer J u.
    double total_mass(const MicroState& state, int species);

    const MicroMesh& mesh() const { return mesh_; }
    double eps() const { return mesh_.eps; }
    int last_iterations() const { return last_iterations_; }

private:
    struct Level;
    const Level& level(double t, double keep = -1.0);
    MicroState step_to(const MicroState& state, double t1);
    Level make_level(double t) const;
    SparseMatrix channel_operator(int species, const Level& lv) const;
    Vector loads(const MicroState& state, int species, const Level& lv) const;

    const MicroMesh& mesh_;
    const ReferenceGeometry& geom_;
    const ProblemData& data_;
    TransformSpec spec_;
    SolveOptions opt_;
    SparseMatrix mass_bulk_;
    std::vector<SparseMatrix> op_bulk_;
    SparseMatrix norm_mass_;
    SparseMatrix norm_grad_;
    std::vector<int> slot_;        // element -> channel element ordinal
    std::vector<int> cell_index_;  // micro vertex -> layer cell, -1 in the bulk
    std::vector<std::unique_ptr<Level>> levels_;
    int last_iterations_ = 0;
};

/// For each theta, the largest ratio int_N v^2 / (theta eps int |grad v|^2 + (theta eps)^-1 int v^2)
/// over the layer fields; null fields are skipped.
std::vector<double> verify_trace_inequality(const MicroMesh& mesh, const std::vector<double>& thetas,
                                            const std::vector<Vector>& fields);

/// Constants, cell linears, random cell-periodic P1 fields and random two-scale fields.
std::vector<Vector> trace_sample_fields(const MicroMesh& mesh, std::uint64_t seed, int random_count = 4);

}  // namespace thinlayer
