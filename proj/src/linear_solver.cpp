#include "thinlayer/linear_solver.hpp"

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#include <cmath>

#include "thinlayer/errors.hpp"

namespace thinlayer {

void apply_constraints(SparseSystem& sys) {
    if (sys.constraints.empty()) return;
    const int n = static_cast<int>(sys.A.rows());
    std::vector<char> fixed(n, 0);
    Vector g = Vector::Zero(n);
    for (auto [dof, value] : sys.constraints) {
        if (dof < 0 || dof >= n) throw DataMismatch("constraint dof out of range");
        fixed[dof] = 1;
        g[dof] = value;
    }
    sys.b -= sys.A * g;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(sys.A.nonZeros());
    for (int r = 0; r < n; ++r)
        for (SparseMatrix::InnerIterator it(sys.A, r); it; ++it)
            if (!fixed[r] && !fixed[it.col()]) trip.emplace_back(r, static_cast<int>(it.col()), it.value());
    for (int r = 0; r < n; ++r)
        if (fixed[r]) {
            trip.emplace_back(r, r, 1.0);
            sys.b[r] = g[r];
        }
    SparseMatrix A(n, n);
    A.setFromTriplets(trip.begin(), trip.end());
    sys.A = std::move(A);
    sys.constraints.clear();
}

Vector solve_linear(const SparseSystem& sys, const SolveOptions& opt, const Vector* guess, SolveStats* stats) {
    if (!sys.constraints.empty()) {
        SparseSystem copy = sys;
        apply_constraints(copy);
        return solve_linear(copy, opt, guess, stats);
    }
    const int n = static_cast<int>(sys.A.rows());
    if (sys.A.cols() != n || sys.b.size() != n) throw DataMismatch("system dimensions inconsistent");
    SolveStats local;
    SolveStats& st = stats ? *stats : local;
    const double bnorm = sys.b.norm();
    if (bnorm == 0.0) {
        st = {0, 0.0, "zero"};
        return Vector::Zero(n);
    }
    auto rel_residual = [&](const Vector& x) { return (sys.A * x - sys.b).norm() / bnorm; };

    Eigen::BiCGSTAB<SparseMatrix, Eigen::DiagonalPreconditioner<double>> it;
    it.setTolerance(opt.tol * 0.1);
    it.setMaxIterations(opt.max_iter);
    it.compute(sys.A);
    Vector x;
    if (guess && guess->size() == n)
        x = it.solveWithGuess(sys.b, *guess);
    else
        x = it.solve(sys.b);
    double res = x.allFinite() ? rel_residual(x) : INFINITY;
    st = {static_cast<int>(it.iterations()), res, "bicgstab"};
    if (res <= opt.tol) return x;

    if (n <= 2000) {
        const Eigen::MatrixXd dense = Eigen::MatrixXd(sys.A);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(dense);
        if (lu.rank() < n) throw NoConvergence(st.iterations, res);
        x = lu.solve(sys.b);
        st.method = "dense-lu";
    } else {
        Eigen::SparseMatrix<double> A = sys.A;
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.compute(A);
        if (lu.info() != Eigen::Success) throw NoConvergence(st.iterations, res);
        x = lu.solve(sys.b);
        st.method = "sparse-lu";
    }
    res = x.allFinite() ? rel_residual(x) : INFINITY;
    st.residual = res;
    if (!(res <= opt.tol)) throw NoConvergence(st.iterations, res);
    return x;
}

}  // namespace thinlayer
