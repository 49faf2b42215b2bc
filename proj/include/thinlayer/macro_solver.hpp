#pragma once

#include <functional>
#include <vector>

#include "thinlayer/linear_solver.hpp"
#include "thinlayer/mesh.hpp"
#include "thinlayer/problem.hpp"
#include "thinlayer/transform.hpp"

namespace thinlayer {

/// Interface nodes x'_i with trapezoid weights, plus the bulk vertices they sit on.
struct InterfaceQuadrature {
    std::vector<double> nodes;
    std::vector<double> weights;
    std::vector<int> plus_vertex;
    std::vector<int> minus_vertex;
};

struct MacroMesh {
    Mesh bulk_plus;   // (0,1) x (0,H)
    Mesh bulk_minus;  // mirror image on (0,1) x (-H,0)
    Mesh cell;        // Z*, shared by all nodes
    InterfaceQuadrature interface;
    int nx = 0;
    int ny = 0;
};

MacroMesh mesh_macro(const ReferenceGeometry& geom, int nx, int ny, int cell_resolution);

struct MacroState {
    double t = 0.0;
    std::vector<Vector> plus;                 // [species]
    std::vector<Vector> minus;                // [species]
    std::vector<std::vector<Vector>> cells;   // [species][node]
};

struct FluxResidual {
    int node = 0;
    double x = 0.0;
    double flux_plus = 0.0;   // bulk total flux dotted with n+ = (0, 1)
    double flux_minus = 0.0;  // bulk total flux dotted with n- = (0, -1)
    double cell_plus = 0.0;   // int_{S+} cell flux . n+
    double cell_minus = 0.0;  // int_{S-} cell flux . n-
    double r_plus = 0.0;
    double r_minus = 0.0;
    double r_jump = 0.0;
    double jump = 0.0;  // (F+ - F-) . n+
};

struct EvolvedCell {
    int node = 0;
    std::vector<Vec2> vertices;  // psi_0(t, x'_i, z) for every cell vertex
    std::vector<double> values;  // carried dof values, per species concatenated
    double area = 0.0;           // int_{Z*} J0 dz
    double mesh_area = 0.0;      // sum of mapped triangle areas
};

/// Monolithic limit solver: bulk P1 on both half domains, one cell problem per interface node,
/// cell dofs on S*^+/- identified with the bulk interface dof.
class MacroSolver {
public:
    MacroSolver(const MacroMesh& mesh, const ReferenceGeometry& geom, const ProblemData& data,
                const LimitTransform& limit, SolveOptions opt = {});

    MacroState init() const;
    SparseSystem assemble(int species, const MacroState& prev, double t_new) const;
    MacroState step(const MacroState& state, double dt) const;
    std::vector<MacroState> solve(double dt, double T, double output_interval,
                                  const std::function<void(const MacroState&)>& on_step = {}) const;

    /// sum_bulk int u + sum_i w_i int_{Z*} J0 u.
    double total_mass(const MacroState& state, int species) const;
    std::vector<FluxResidual> flux_jump_residual(const MacroState& state, int species) const;
    /// Largest |cell value - tied bulk value| on S*^+/-.
    double coupling_defect(const MacroState& state) const;
    std::vector<EvolvedCell> push_forward(const MacroState& state) const;

    int num_unknowns() const { return n_total_; }
    const MacroMesh& mesh() const { return mesh_; }
    /// Global unknown of cell vertex d at node i.
    int cell_unknown(int node, int d) const;

private:
    Vector gather(const MacroState& state, int species) const;
    void scatter(const Vector& x, MacroState& state, int species) const;
    SparseMatrix cell_mass(int node, double t) const;
    SparseMatrix cell_operator(int species, int node, double t) const;

    const MacroMesh& mesh_;
    const ReferenceGeometry& geom_;
    const ProblemData& data_;
    LimitTransform limit_;
    SolveOptions opt_;
    int n_plus_ = 0, n_minus_ = 0, n_total_ = 0;
    std::vector<int> cell_side_;          // cell vertex -> +1 on S+, -1 on S-, 0 inside
    std::vector<int> cell_interior_;      // cell vertex -> interior ordinal or -1
    int n_cell_interior_ = 0;
    SparseMatrix bulk_mass_plus_, bulk_mass_minus_;
    std::vector<SparseMatrix> bulk_op_plus_, bulk_op_minus_;
};

}  // namespace thinlayer
