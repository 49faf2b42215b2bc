#include "thinlayer/transform.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "thinlayer/errors.hpp"

namespace thinlayer {

namespace {

constexpr double kPi = 3.14159265358979323846;

double op_norm(const Mat2& A) {
    Eigen::SelfAdjointEigenSolver<Mat2> es(A.transpose() * A, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues()(1)));
}

// Gauss-Legendre nodes/weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double r = std::cos(kPi * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = r;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * r * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            const double dp = n * (r * p1 - p0) / (r * r - 1.0);
            const double dr = p1 / dp;
            r -= dr;
            if (std::abs(dr) < 1e-16) break;
        }
        double p0 = 1.0, p1 = r;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * r * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        const double dp = n * (r * p1 - p0) / (r * r - 1.0);
        x[i] = r;
        w[i] = 2.0 / ((1.0 - r * r) * dp * dp);
    }
}

std::vector<double> panels(double a, double b, const std::vector<double>& breaks, int split) {
    std::vector<double> pts{a};
    for (double c : breaks)
        if (c > a && c < b) pts.push_back(c);
    pts.push_back(b);
    std::sort(pts.begin(), pts.end());
    std::vector<double> out;
    for (size_t i = 0; i + 1 < pts.size(); ++i)
        for (int s = 0; s < split; ++s) out.push_back(pts[i] + (pts[i + 1] - pts[i]) * s / split);
    out.push_back(b);
    return out;
}

void check_time(const TransformSpec& spec, double t) {
    if (t < -1e-12 || t > spec.horizon + 1e-12)
        throw TimeOutOfRange("t=" + std::to_string(t) + " outside [0, " + std::to_string(spec.horizon) + "]");
}

double jacobian_det(const TransformSpec& spec, double t, double xp, const Vec2& z) {
    return spec.grad(t, xp, z).determinant();
}

}  // namespace

double bump(double r, double r0, double r1) {
    if (r <= r0) return 1.0;
    if (r >= r1) return 0.0;
    const double s = (r - r0) / (r1 - r0);
    return 1.0 - s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
}

double bump_derivative(double r, double r0, double r1) {
    if (r <= r0 || r >= r1) return 0.0;
    const double s = (r - r0) / (r1 - r0);
    return -30.0 * s * s * (1.0 - s) * (1.0 - s) / (r1 - r0);
}

TransformSpec static_transform(double horizon) {
    TransformSpec s;
    s.name = "static";
    s.psi = [](double, double, const Vec2& z) { return z; };
    s.grad = [](double, double, const Vec2&) { return Mat2::Identity().eval(); };
    s.velocity = [](double, double, const Vec2&) { return Vec2::Zero().eval(); };
    s.horizon = horizon;
    s.is_identity = true;
    return s;
}

TransformSpec pinch_transform(const PinchParams& p) {
    struct Parts {
        double s, ds, m, b1, db1, b2, db2, d;
    };
    const double r2 = 1.0 - p.band;
    auto parts = [p, r2](double t, double xp, const Vec2& z) {
        Parts q{};
        const double tau = p.horizon;
        if (t >= tau) {
            q.s = 1.0;
            q.ds = 0.0;
        } else {
            q.s = 0.5 * (1.0 - std::cos(kPi * t / tau));
            q.ds = 0.5 * kPi / tau * std::sin(kPi * t / tau);
        }
        q.m = 1.0 + 0.5 * std::sin(2.0 * kPi * xp);
        q.d = z.x() - p.center;
        const double ad = std::abs(q.d);
        q.b1 = bump(ad, p.core_inner, p.core_outer);
        q.db1 = bump_derivative(ad, p.core_inner, p.core_outer) * (q.d < 0 ? -1.0 : 1.0);
        const double az = std::abs(z.y());
        q.b2 = bump(az, 0.0, r2);
        q.db2 = bump_derivative(az, 0.0, r2) * (z.y() < 0 ? -1.0 : 1.0);
        return q;
    };
    const double a = p.amplitude;
    const double c = p.center;
    TransformSpec s;
    s.name = "pinch";
    s.psi = [=](double t, double xp, const Vec2& z) {
        const Parts q = parts(t, xp, z);
        const double rho = 1.0 - a * q.s * q.m * q.b1 * q.b2;
        return Vec2(c + q.d * rho, z.y());
    };
    s.grad = [=](double t, double xp, const Vec2& z) {
        const Parts q = parts(t, xp, z);
        const double rho = 1.0 - a * q.s * q.m * q.b1 * q.b2;
        Mat2 F;
        F << rho - q.d * a * q.s * q.m * q.db1 * q.b2, -q.d * a * q.s * q.m * q.b1 * q.db2, 0.0, 1.0;
        return F;
    };
    s.velocity = [=](double t, double xp, const Vec2& z) {
        const Parts q = parts(t, xp, z);
        return Vec2(-q.d * a * q.ds * q.m * q.b1 * q.b2, 0.0);
    };
    s.identity_band = p.band;
    s.horizon = p.horizon;
    s.det_floor = p.det_floor;
    s.z1_breaks = {c - p.core_outer, c - p.core_inner, c, c + p.core_inner, c + p.core_outer};
    s.z2_breaks = {-r2, 0.0, r2};
    return s;
}

JacobianData jacobian_at(const TransformSpec& spec, double eps, double t, int k, const Vec2& z) {
    JacobianData jd;
    if (spec.is_identity) return jd;
    const double xp = eps * k;
    jd.F = spec.grad(t, xp, z);
    jd.J = jd.F.determinant();
    jd.F_inv = jd.F.inverse();
    jd.psi_dot = eps * spec.velocity(t, xp, z);
    jd.b_tilde = jd.F_inv * jd.psi_dot;
    return jd;
}

Vec2 eval_psi_eps(const TransformSpec& spec, double eps, double t, const Vec2& x) {
    check_time(spec, t);
    const int n = cells_per_unit(eps);
    const double tol = 1e-12;
    if (x.x() < -tol || x.x() > 1.0 + tol || std::abs(x.y()) > eps + tol)
        throw OutOfDomain("point outside the layer");
    const int k = std::clamp(static_cast<int>(std::floor(x.x() / eps)), 0, n - 1);
    const Vec2 z(x.x() / eps - k, x.y() / eps);
    const Vec2 p = spec.psi(t, eps * k, z);
    return Vec2(eps * (k + p.x()), eps * p.y());
}

std::vector<JacobianData> jacobian_data(const TransformSpec& spec, double eps, double t,
                                        const std::vector<Vec2>& points) {
    check_time(spec, t);
    const int n = cells_per_unit(eps);
    std::vector<JacobianData> out;
    out.reserve(points.size());
    for (const Vec2& x : points) {
        if (x.x() < -1e-12 || x.x() > 1.0 + 1e-12 || std::abs(x.y()) > eps + 1e-12)
            throw OutOfDomain("point outside the layer");
        const int k = std::clamp(static_cast<int>(std::floor(x.x() / eps)), 0, n - 1);
        const Vec2 z(x.x() / eps - k, x.y() / eps);
        JacobianData jd = jacobian_at(spec, eps, t, k, z);
        if (std::abs(jd.J) < spec.det_floor)
            throw SingularJacobian("J=" + std::to_string(jd.J) + " below floor " + std::to_string(spec.det_floor));
        out.push_back(jd);
    }
    return out;
}

void require_spd(const Mat2& D, bool strict, const char* what) {
    if (!D.allFinite()) throw NotSPD(std::string(what) + " has non-finite entries");
    const double scale = std::max(1.0, D.cwiseAbs().maxCoeff());
    if (std::abs(D(0, 1) - D(1, 0)) > 1e-12 * scale) throw NotSPD(std::string(what) + " is not symmetric");
    const double tr = D.trace();
    const double det = D.determinant();
    if (strict ? (det <= 0.0 || tr <= 0.0) : (det < -1e-14 * scale * scale || tr < 0.0 || D(0, 0) < 0.0 || D(1, 1) < 0.0))
        throw NotSPD(std::string(what) + " is not positive definite");
}

TransformedCoefficients transformed_coefficients(const Mat2& D, const Vec2& q, const JacobianData& jd) {
    require_spd(D, true, "diffusion tensor");
    TransformedCoefficients tc;
    tc.D = jd.F_inv * D * jd.F_inv.transpose();
    tc.D = 0.5 * (tc.D + tc.D.transpose()).eval();
    tc.q = jd.F_inv * q;
    return tc;
}

Vec2 LimitTransform::psi0(double t, double xp, const Vec2& z) const {
    return Vec2(xp, 0.0) + spec.psi(t, xp, z);
}

JacobianData LimitTransform::at(double t, double xp, const Vec2& z) const {
    JacobianData jd;
    if (spec.is_identity) return jd;
    jd.F = spec.grad(t, xp, z);
    jd.J = jd.F.determinant();
    jd.F_inv = jd.F.inverse();
    jd.psi_dot = spec.velocity(t, xp, z);
    jd.b_tilde = jd.F_inv * jd.psi_dot;
    return jd;
}

double LimitTransform::cell_volume(double t, double xp, const ChannelSpec& channel, int order) const {
    std::vector<double> gx, gw;
    gauss_legendre(order, gx, gw);
    const std::vector<double> p2 = panels(-1.0, 1.0, spec.z2_breaks, 4);
    double total = 0.0;
    for (size_t i = 0; i + 1 < p2.size(); ++i) {
        const double a2 = p2[i], b2 = p2[i + 1];
        for (int q2 = 0; q2 < order; ++q2) {
            const double z2 = 0.5 * (a2 + b2) + 0.5 * (b2 - a2) * gx[q2];
            const double w2 = 0.5 * (b2 - a2) * gw[q2];
            const std::vector<double> p1 = panels(channel.left(z2), channel.right(z2), spec.z1_breaks, 2);
            for (size_t j = 0; j + 1 < p1.size(); ++j) {
                const double a1 = p1[j], b1 = p1[j + 1];
                for (int q1 = 0; q1 < order; ++q1) {
                    const double z1 = 0.5 * (a1 + b1) + 0.5 * (b1 - a1) * gx[q1];
                    const double w1 = 0.5 * (b1 - a1) * gw[q1];
                    total += w1 * w2 * (spec.is_identity ? 1.0 : jacobian_det(spec, t, xp, Vec2(z1, z2)));
                }
            }
        }
    }
    return total;
}

LimitTransform limit_transform(const TransformSpec& spec, const ReferenceGeometry& geom) {
    if (!spec.psi || !spec.grad || !spec.velocity) throw InvalidTransform("transform callbacks missing");
    LimitTransform lt{spec};
    const int nt = 5, nx = 8, nz = 16;
    for (int it = 0; it < nt; ++it) {
        const double t = spec.horizon * it / (nt - 1);
        for (int ix = 0; ix < nx; ++ix) {
            const double xp = static_cast<double>(ix) / nx;
            for (int side = -1; side <= 1; side += 2) {
                const double z2 = side;
                for (int iz = 0; iz <= nz; ++iz) {
                    const double z1 = geom.channel.left(z2) + geom.channel.width(z2) * iz / nz;
                    const JacobianData jd = lt.at(t, xp, Vec2(z1, z2));
                    if (std::abs(jd.J - 1.0) > 1e-12)
                        throw InvalidTransform("J0 differs from 1 on the channel faces");
                }
            }
            for (int i2 = 0; i2 <= nz; ++i2) {
                const double z2 = -1.0 + 2.0 * i2 / nz;
                for (int iz = 0; iz <= nz; ++iz) {
                    const double z1 = geom.channel.left(z2) + geom.channel.width(z2) * iz / nz;
                    const double J = lt.at(t, xp, Vec2(z1, z2)).J;
                    if (J < spec.det_floor)
                        throw SingularJacobian("J0=" + std::to_string(J) + " below floor in the cell");
                }
            }
        }
    }
    return lt;
}

bool AssumptionReport::flagged() const {
    if (!flags.empty()) return true;
    for (const auto& r : rows)
        if (!r.flags.empty()) return true;
    return false;
}

double derivative_mismatch(const TransformSpec& spec, const ReferenceGeometry& geom, int density) {
    (void)geom;
    const double h = 1e-5;
    double worst = 0.0;
    const int n = std::max(density, 4);
    for (int it = 1; it < 4; ++it) {
        const double t = spec.horizon * it / 4.0;
        for (int ix = 0; ix < 4; ++ix) {
            const double xp = 0.25 * ix + 0.1;
            for (int i = 0; i <= n; ++i) {
                for (int j = 0; j <= n; ++j) {
                    const Vec2 z(0.01 + 0.98 * i / n, -0.99 + 1.98 * j / n);
                    const Mat2 F = spec.grad(t, xp, z);
                    Mat2 Ffd;
                    for (int c = 0; c < 2; ++c) {
                        Vec2 e = Vec2::Zero();
                        e(c) = h;
                        Ffd.col(c) = (spec.psi(t, xp, z + e) - spec.psi(t, xp, z - e)) / (2 * h);
                    }
                    const Vec2 v = spec.velocity(t, xp, z);
                    const Vec2 vfd = (spec.psi(t + h, xp, z) - spec.psi(t - h, xp, z)) / (2 * h);
                    worst = std::max(worst, (F - Ffd).cwiseAbs().maxCoeff());
                    worst = std::max(worst, (v - vfd).cwiseAbs().maxCoeff());
                    const double Jfd = Ffd.determinant();
                    worst = std::max(worst, std::abs(F.determinant() - Jfd));
                }
            }
        }
    }
    return worst;
}

double piola_defect(const TransformSpec& spec, const ReferenceGeometry& geom, int density) {
    const double h = 1e-5;
    auto flux = [&](double t, double xp, const Vec2& z) {
        const Mat2 F = spec.grad(t, xp, z);
        return Vec2(F.determinant() * (F.inverse() * spec.velocity(t, xp, z)));
    };
    double worst = 0.0;
    const int n = std::max(density, 4);
    for (int it = 1; it < 4; ++it) {
        const double t = spec.horizon * it / 4.0;
        for (int ix = 0; ix < 4; ++ix) {
            const double xp = 0.25 * ix + 0.1;
            for (int j = 1; j < n; ++j) {
                const double z2 = -1.0 + 2.0 * j / n;
                for (int i = 1; i < n; ++i) {
                    const double z1 = geom.channel.left(z2) + geom.channel.width(z2) * i / n;
                    const Vec2 z(z1, z2);
                    const double dtJ = (jacobian_det(spec, t + h, xp, z) - jacobian_det(spec, t - h, xp, z)) / (2 * h);
                    const Vec2 e1(h, 0.0), e2(0.0, h);
                    const double div = (flux(t, xp, z + e1).x() - flux(t, xp, z - e1).x()) / (2 * h) +
                                       (flux(t, xp, z + e2).y() - flux(t, xp, z - e2).y()) / (2 * h);
                    worst = std::max(worst, std::abs(dtJ - div));
                }
            }
        }
    }
    return worst;
}

AssumptionReport check_assumptions(const TransformSpec& spec, const ReferenceGeometry& geom,
                                   const std::vector<double>& eps_list, int sample_density,
                                   const AuditCeilings& ceilings) {
    AssumptionReport rep;
    rep.spec_name = spec.name;
    const int nz = std::max(sample_density, 2);
    const int nt = std::max(sample_density / 2, 2);
    const double h = 1e-5;

    // Identity band: points within the band around the cell boundary.
    for (int it = 0; it < nt; ++it) {
        const double t = spec.horizon * it / (nt - 1);
        for (double xp : {0.0, 0.25, 0.5, 0.75}) {
            for (int i = 0; i <= 4 * nz; ++i) {
                const double s = static_cast<double>(i) / (4 * nz);
                for (double d : {0.0, 0.5 * spec.identity_band, 0.99 * spec.identity_band}) {
                    const Vec2 pts[4] = {{s, -1.0 + d}, {s, 1.0 - d}, {d, -1.0 + 2 * s}, {1.0 - d, -1.0 + 2 * s}};
                    for (const Vec2& z : pts) {
                        rep.identity_band_defect = std::max(rep.identity_band_defect, (spec.psi(t, xp, z) - z).norm());
                        rep.identity_band_defect =
                            std::max(rep.identity_band_defect, (spec.grad(t, xp, z) - Mat2::Identity()).cwiseAbs().maxCoeff());
                    }
                }
            }
        }
    }
    if (rep.identity_band_defect > 1e-12) rep.flags.push_back("IdentityBand");

    rep.derivative_mismatch = derivative_mismatch(spec, geom, sample_density);
    if (rep.derivative_mismatch > 1e-6) rep.flags.push_back("DerivativeMismatch");
    rep.piola_defect = piola_defect(spec, geom, sample_density);
    if (rep.piola_defect > 1e-4) rep.flags.push_back("PiolaDefect");

    for (double eps : eps_list) {
        AssumptionRow row;
        row.eps = eps;
        row.J_min = std::numeric_limits<double>::infinity();
        row.J_max = -std::numeric_limits<double>::infinity();
        const int ncell = cells_per_unit(eps);
        for (int it = 0; it < nt; ++it) {
            const double t = spec.horizon * it / (nt - 1);
            const double tp = std::min(spec.horizon, t + h), tm = std::max(0.0, t - h);
            for (int k = 0; k < ncell; ++k) {
                const double xp = eps * k;
                for (int j = 0; j <= nz; ++j) {
                    const double z2 = -1.0 + 2.0 * j / nz;
                    for (int i = 0; i <= nz; ++i) {
                        const double z1 = geom.channel.left(z2) + geom.channel.width(z2) * i / nz;
                        const Vec2 z(z1, z2);
                        const Mat2 F = spec.grad(t, xp, z);
                        const double J = F.determinant();
                        row.displacement = std::max(row.displacement, (spec.psi(t, xp, z) - z).norm());
                        row.velocity = std::max(row.velocity, spec.velocity(t, xp, z).norm());
                        row.gradient = std::max(row.gradient, op_norm(F));
                        row.J_min = std::min(row.J_min, J);
                        row.J_max = std::max(row.J_max, J);
                        const double dtJ = (jacobian_det(spec, tp, xp, z) - jacobian_det(spec, tm, xp, z)) / (tp - tm);
                        row.dtJ_sup = std::max(row.dtJ_sup, std::abs(dtJ));
                        const Vec2 e1(h, 0.0), e2(0.0, h);
                        const Vec2 gJ((jacobian_det(spec, t, xp, z + e1) - jacobian_det(spec, t, xp, z - e1)) / (2 * h),
                                      (jacobian_det(spec, t, xp, z + e2) - jacobian_det(spec, t, xp, z - e2)) / (2 * h));
                        row.gradJ_scaled = std::max(row.gradJ_scaled, gJ.norm());
                        if (k + 1 < ncell)
                            row.shift1 = std::max(row.shift1, op_norm(spec.grad(t, eps * (k + 1), z) - F) / eps);
                        if (k + 2 < ncell)
                            row.shift2 = std::max(row.shift2, op_norm(spec.grad(t, eps * (k + 2), z) - F) / (2 * eps));
                    }
                }
            }
        }
        if (row.J_min < spec.det_floor) row.flags.push_back("SingularJacobian");
        if (row.J_min <= 0.0) row.flags.push_back("Folding");
        if (row.displacement > ceilings.displacement) row.flags.push_back("DisplacementCeiling");
        if (row.velocity > ceilings.velocity) row.flags.push_back("VelocityCeiling");
        if (row.gradient > ceilings.gradient) row.flags.push_back("GradientCeiling");
        if (std::max(row.shift1, row.shift2) > ceilings.shift) row.flags.push_back("ShiftCeiling");
        rep.rows.push_back(row);
    }
    return rep;
}

}  // namespace thinlayer
