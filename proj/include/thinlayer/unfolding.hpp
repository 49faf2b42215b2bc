#pragma once

#include <memory>
#include <vector>

#include "thinlayer/macro_solver.hpp"
#include "thinlayer/mesh.hpp"
#include "thinlayer/micro_solver.hpp"

namespace thinlayer {

/// Values indexed by (layer cell k, cell-mesh dof).
struct UnfoldedField {
    double eps = 0.0;
    int num_cells = 0;
    int cell_dofs = 0;
    std::vector<double> values;

    double& at(int k, int d) { return values[static_cast<size_t>(k) * cell_dofs + d]; }
    double at(int k, int d) const { return values[static_cast<size_t>(k) * cell_dofs + d]; }
};

/// Discrete unfolding T_eps and averaging U_eps between a micro layer and a cell mesh on Z*.
/// When the cell mesh is the micro mesh's own cell mesh, unfolding is a re-indexing;
/// otherwise micro values are interpolated at the mapped cell vertices.
class Unfolder {
public:
    Unfolder(const MicroMesh& micro, const Mesh& cell_mesh);

    bool matched() const { return matched_; }
    UnfoldedField unfold(const Vector& field) const;
    /// Adjoint of eps T_eps for the discrete L2 products; zero outside the layer.
    Vector average(const UnfoldedField& phi) const;

    double unfolded_inner(const UnfoldedField& a, const UnfoldedField& b) const;
    double layer_inner(const Vector& a, const Vector& b) const;
    double unfolded_norm(const UnfoldedField& a) const;
    double layer_norm(const Vector& a) const;

    /// max over cells and cell elements of |grad_z(T v) - eps T(grad_x v)|.
    double gradient_commutation_defect(const Vector& field) const;

    const Mesh& cell_mesh() const { return *cell_; }

private:
    const MicroMesh& micro_;
    const Mesh* cell_;
    bool matched_ = false;
    SparseMatrix P_;         // (cells * cell dofs) x micro dofs
    SparseMatrix cell_mass_;
    SparseMatrix layer_mass_;
    std::vector<int> layer_vertices_;
    struct Factor;
    std::shared_ptr<Factor> factor_;
    std::vector<std::vector<int>> cell_elements_;  // [k] -> micro channel elements in cell order
};

UnfoldedField unfold(const MicroMesh& micro, const Vector& field, const Mesh& cell_mesh);
Vector average(const MicroMesh& micro, const UnfoldedField& phi, const Mesh& cell_mesh);
double gradient_commutation_check(const MicroMesh& micro, const Vector& field, const Mesh& cell_mesh);

struct TwoScaleErrors {
    double bulk_plus = 0.0;
    double bulk_minus = 0.0;
    double layer = 0.0;
};

/// Compares micro bulk values at (x1, x_n) with macro values at (x1, x_n -+ eps), and the unfolded
/// micro layer with the cell solution at the interface node nearest to eps k.
class TwoScaleComparator {
public:
    TwoScaleComparator(const MicroMesh& micro, const MacroMesh& macro);
    TwoScaleErrors errors(const MicroState& micro, const MacroState& macro, int species) const;

private:
    struct Sample {
        int micro_element;
        std::array<double, 3> micro_bary;
        double weight;
        Location macro;
    };
    const MicroMesh& micro_;
    const MacroMesh& macro_;
    std::vector<Sample> plus_, minus_;
    Unfolder unfolder_;
    std::vector<int> node_of_cell_;
};

TwoScaleErrors two_scale_error(const MicroMesh& micro, const MicroState& micro_state, const MacroMesh& macro,
                               const MacroState& macro_state, int species = 0);

}  // namespace thinlayer
