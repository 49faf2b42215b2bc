#pragma once

#include <string>
#include <utility>
#include <vector>

#include "thinlayer/types.hpp"

namespace thinlayer {

struct SparseSystem {
    SparseMatrix A;
    Vector b;
    std::vector<std::pair<int, double>> constraints;  // fixed dof values
};

/// Symmetric elimination of the constraint list; clears it afterwards.
void apply_constraints(SparseSystem& sys);

struct SolveOptions {
    double tol = 1e-10;
    int max_iter = 4000;
};

struct SolveStats {
    int iterations = 0;
    double residual = 0.0;
    std::string method;
};

/// BiCGSTAB with a diagonal preconditioner; dense LU below 2000 unknowns and sparse LU above
/// as fallbacks. Throws NoConvergence when the relative residual stays above tol.
Vector solve_linear(const SparseSystem& sys, const SolveOptions& opt = {}, const Vector* guess = nullptr,
                    SolveStats* stats = nullptr);

}  // namespace thinlayer
