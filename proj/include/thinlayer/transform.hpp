#pragma once

#include <functional>
#include <string>
#include <vector>

#include "thinlayer/geometry.hpp"
#include "thinlayer/types.hpp"

namespace thinlayer {

/// Per-cell evolution psi_*(t, x', z) with its analytic derivatives.
struct TransformSpec {
    std::string name;
    std::function<Vec2(double t, double xp, const Vec2& z)> psi;
    std::function<Mat2(double t, double xp, const Vec2& z)> grad;      // D_z psi_*
    std::function<Vec2(double t, double xp, const Vec2& z)> velocity;  // d/dt psi_*
    double identity_band = 0.05;
    double horizon = 1.0;
    double det_floor = 0.1;
    bool is_identity = false;
    /// Abscissae where psi_* is only piecewise smooth, used to split quadrature panels.
    std::vector<double> z1_breaks;
    std::vector<double> z2_breaks;
};

TransformSpec static_transform(double horizon);

struct PinchParams {
    double amplitude = 0.3;
    double band = 0.05;
    double center = 0.5;
    double core_inner = 0.3;  // full strength for |z1 - c| below this
    double core_outer = 0.45; // zero for |z1 - c| above this
    double horizon = 0.5;
    double det_floor = 0.1;
};

/// psi_* = (c + (z1 - c) rho, z2) with rho = 1 - a s(t) m(x') B1(z1) B2(z2).
TransformSpec pinch_transform(const PinchParams& p);

/// Smooth step: 1 below r0, 0 above r1, quintic in between.
double bump(double r, double r0, double r1);
double bump_derivative(double r, double r0, double r1);

struct JacobianData {
    Mat2 F = Mat2::Identity();
    Mat2 F_inv = Mat2::Identity();
    double J = 1.0;
    Vec2 psi_dot = Vec2::Zero();
    Vec2 b_tilde = Vec2::Zero();
};

/// Jacobian data of psi_eps at cell k, cell coordinate z. No determinant check.
JacobianData jacobian_at(const TransformSpec& spec, double eps, double t, int k, const Vec2& z);

/// psi_eps(t, x) by the local construction.
Vec2 eval_psi_eps(const TransformSpec& spec, double eps, double t, const Vec2& x);

/// Jacobian data at layer points; throws SingularJacobian when |J| < det_floor.
std::vector<JacobianData> jacobian_data(const TransformSpec& spec, double eps, double t,
                                        const std::vector<Vec2>& points);

struct TransformedCoefficients {
    Mat2 D;
    Vec2 q;
};

/// D~ = F^-1 D F^-T, q~ = F^-1 q. Throws NotSPD for a non-symmetric or indefinite D.
TransformedCoefficients transformed_coefficients(const Mat2& D, const Vec2& q, const JacobianData& jd);

/// Symmetric to tol and positive semidefinite (definite when strict).
void require_spd(const Mat2& D, bool strict, const char* what);

struct LimitTransform {
    TransformSpec spec;

    Vec2 psi0(double t, double xp, const Vec2& z) const;
    /// F0, J0, d/dt psi0 and b0 = F0^-1 d/dt psi0.
    JacobianData at(double t, double xp, const Vec2& z) const;
    /// Integral of J0 over the exact channel by tensor Gauss quadrature.
    double cell_volume(double t, double xp, const ChannelSpec& channel, int order = 24) const;
};

LimitTransform limit_transform(const TransformSpec& spec, const ReferenceGeometry& geom);

struct AuditCeilings {
    double displacement = 1.0;
    double velocity = 10.0;
    double gradient = 10.0;
    double shift = 10.0;
};

struct AssumptionRow {
    double eps = 0.0;
    double displacement = 0.0;  // sup eps^-1 |psi_eps - id|
    double velocity = 0.0;      // sup eps^-1 |d/dt psi_eps|
    double gradient = 0.0;      // sup |F_eps| (operator norm)
    double J_min = 1.0;
    double J_max = 1.0;
    double dtJ_sup = 0.0;       // pointwise surrogate for the dual-norm bound
    double gradJ_scaled = 0.0;  // sup eps |grad_x J_eps|
    double shift1 = 0.0;        // sup |F(x + eps e1) - F(x)| / eps
    double shift2 = 0.0;        // sup |F(x + 2 eps e1) - F(x)| / (2 eps)
    std::vector<std::string> flags;
};

struct AssumptionReport {
    std::string spec_name;
    std::vector<AssumptionRow> rows;
    double identity_band_defect = 0.0;
    double derivative_mismatch = 0.0;
    double piola_defect = 0.0;
    std::vector<std::string> flags;

    bool flagged() const;
};

AssumptionReport check_assumptions(const TransformSpec& spec, const ReferenceGeometry& geom,
                                   const std::vector<double>& eps_list, int sample_density,
                                   const AuditCeilings& ceilings = {});

/// Largest deviation of analytic derivatives from central differences (step 1e-5) on a grid.
double derivative_mismatch(const TransformSpec& spec, const ReferenceGeometry& geom, int density);

/// Largest |d/dt J - div_z(J F^-1 d/dt psi)| by finite differences at interior channel samples.
double piola_defect(const TransformSpec& spec, const ReferenceGeometry& geom, int density);

}  // namespace thinlayer
