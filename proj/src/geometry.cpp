#include "thinlayer/geometry.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "thinlayer/errors.hpp"

namespace thinlayer {

namespace {

constexpr double kGeomTol = 1e-12;
constexpr int kShapeSamples = 2001;

double integrate(const std::function<double(double)>& f, double a, double b) {
    using boost::math::quadrature::gauss_kronrod;
    return gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-14);
}

double width_slope(const ChannelSpec& ch, double z2) {
    const double h = 1e-6;
    if (z2 + h > 1.0) return (3.0 * ch.width(z2) - 4.0 * ch.width(z2 - h) + ch.width(z2 - 2 * h)) / (2 * h);
    if (z2 - h < -1.0) return (-3.0 * ch.width(z2) + 4.0 * ch.width(z2 + h) - ch.width(z2 + 2 * h)) / (2 * h);
    return (ch.width(z2 + h) - ch.width(z2 - h)) / (2 * h);
}

}  // namespace

ChannelSpec straight_channel(double w, double center, double margin) {
    ChannelSpec ch;
    ch.width = [w](double) { return w; };
    ch.center = center;
    ch.boundary_margin = margin;
    return ch;
}

bool ReferenceGeometry::in_channel(const Vec2& z, double tol) const {
    if (z.y() < -1.0 - tol || z.y() > 1.0 + tol) return false;
    const double z2 = std::clamp(z.y(), -1.0, 1.0);
    return z.x() >= channel.left(z2) - tol && z.x() <= channel.right(z2) + tol;
}

ReferenceGeometry build_reference_geometry(const ChannelSpec& channel, double H) {
    if (!channel.width) throw ShapeViolation("channel width callback missing");
    if (!(H > 0.0)) throw ShapeViolation("half height must be positive");
    if (!(channel.boundary_margin > 0.0)) throw ShapeViolation("boundary margin must be positive");
    ReferenceGeometry g;
    g.channel = channel;
    g.half_height = H;
    double prev = 0.0;
    for (int i = 0; i < kShapeSamples; ++i) {
        const double z2 = -1.0 + 2.0 * i / (kShapeSamples - 1);
        const double w = channel.width(z2);
        if (!(w > 0.0) || !std::isfinite(w))
            throw ShapeViolation("width not positive at z2=" + std::to_string(z2));
        if (channel.left(z2) < channel.boundary_margin - kGeomTol ||
            channel.right(z2) > 1.0 - channel.boundary_margin + kGeomTol)
            throw ShapeViolation("channel closer than the margin to the lateral cell boundary at z2=" +
                                 std::to_string(z2));
        if (i > 0) g.width_lipschitz = std::max(g.width_lipschitz, std::abs(w - prev) * (kShapeSamples - 1) / 2.0);
        prev = w;
    }
    g.channel_area = integrate(channel.width, -1.0, 1.0);
    g.wall_length = 2.0 * integrate(
                              [&](double z2) {
                                  const double s = 0.5 * width_slope(channel, z2);
                                  return std::sqrt(1.0 + s * s);
                              },
                              -1.0, 1.0);
    g.face_plus = channel.width(1.0);
    g.face_minus = channel.width(-1.0);
    return g;
}

int cells_per_unit(double eps) {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw InvalidScale("eps must be positive");
    const double inv = 1.0 / eps;
    const double n = std::round(inv);
    if (n < 1.0 || std::abs(inv - n) > 1e-9 * n) throw InvalidScale("1/eps must be an integer, got eps=" + std::to_string(eps));
    return static_cast<int>(n);
}

std::pair<int, Vec2> TilingIndex::global_to_cell(const Vec2& x) const {
    int k = static_cast<int>(std::floor(x.x() / eps));
    k = std::clamp(k, 0, num_cells - 1);
    return {k, Vec2(x.x() / eps - k, x.y() / eps)};
}

TilingIndex tile_layer(const ReferenceGeometry& geom, double eps) {
    const int n = cells_per_unit(eps);
    if (eps >= geom.half_height) throw InvalidScale("eps must be smaller than the half height");
    TilingIndex t;
    t.eps = 1.0 / n;
    t.num_cells = n;
    t.cells.resize(n);
    for (int k = 0; k < n; ++k) t.cells[k] = k;
    return t;
}

std::string to_string(PointTag tag) {
    switch (tag) {
        case PointTag::BulkPlus: return "bulk+";
        case PointTag::BulkMinus: return "bulk-";
        case PointTag::Channel: return "channel";
        case PointTag::Hole: return "hole";
        case PointTag::InterfacePlus: return "S+";
        case PointTag::InterfaceMinus: return "S-";
        case PointTag::Wall: return "N";
        case PointTag::Exterior: return "exterior";
    }
    return "?";
}

PointTag classify_point(const ReferenceGeometry& geom, double eps, const Vec2& x) {
    const double H = geom.half_height;
    const double tol = kGeomTol;
    if (x.x() < -tol || x.x() > 1.0 + tol || x.y() < -H - tol || x.y() > H + tol)
        throw OutOfDomain("point outside the closure of the domain");
    const TilingIndex tiling = tile_layer(geom, eps);
    const auto [k, z] = tiling.global_to_cell(x);
    const ChannelSpec& ch = geom.channel;
    const double ay = std::abs(x.y());

    if (std::abs(ay - eps) <= tol) {
        const double z2 = x.y() > 0 ? 1.0 : -1.0;
        const double xl = eps * (k + ch.left(z2));
        const double xr = eps * (k + ch.right(z2));
        if (x.x() >= xl - tol && x.x() <= xr + tol)
            return x.y() > 0 ? PointTag::InterfacePlus : PointTag::InterfaceMinus;
        return PointTag::Exterior;
    }
    if (ay < eps) {
        const double z2 = std::clamp(z.y(), -1.0, 1.0);
        const double xl = eps * (k + ch.left(z2));
        const double xr = eps * (k + ch.right(z2));
        if (std::abs(x.x() - xl) <= tol || std::abs(x.x() - xr) <= tol) return PointTag::Wall;
        if (x.x() > xl && x.x() < xr) return PointTag::Channel;
        if (x.x() <= tol || x.x() >= 1.0 - tol) return PointTag::Exterior;
        return PointTag::Hole;
    }
    if (x.x() <= tol || x.x() >= 1.0 - tol || ay >= H - tol) return PointTag::Exterior;
    return x.y() > 0 ? PointTag::BulkPlus : PointTag::BulkMinus;
}

}  // namespace thinlayer
