#include "thinlayer/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <unordered_map>

#include "thinlayer/errors.hpp"

namespace thinlayer {

namespace {

using EdgeKey = std::pair<int, int>;

struct EdgeHash {
    size_t operator()(const EdgeKey& e) const {
        return std::hash<long long>()((static_cast<long long>(e.first) << 32) ^ static_cast<unsigned>(e.second));
    }
};

Vec2 cell_vertex(const ReferenceGeometry& geom, int r, int i, int j) {
    const double z2 = -1.0 + 2.0 * j / r;
    return Vec2(geom.channel.left(z2) + geom.channel.width(z2) * i / r, z2);
}

// Quad (v00, v10, v01, v11) split by a diagonal chosen from the sign of the row center.
void split_quad(std::vector<std::array<int, 3>>& tris, int v00, int v10, int v01, int v11, bool rising) {
    if (rising) {
        tris.push_back({v00, v10, v11});
        tris.push_back({v00, v11, v01});
    } else {
        tris.push_back({v00, v10, v01});
        tris.push_back({v10, v11, v01});
    }
}

// Adds Exterior facets for every boundary edge not yet tagged.
void tag_remaining_boundary(Mesh& m, BoundaryTag default_tag) {
    std::unordered_map<EdgeKey, int, EdgeHash> directed;
    std::unordered_map<EdgeKey, int, EdgeHash> count;
    for (int e = 0; e < m.num_elements(); ++e) {
        const auto& t = m.triangles[e];
        for (int s = 0; s < 3; ++s) {
            const int a = t[s], b = t[(s + 1) % 3];
            directed[{a, b}] = e;
            ++count[{std::min(a, b), std::max(a, b)}];
        }
    }
    std::unordered_map<EdgeKey, int, EdgeHash> tagged;
    for (const Facet& f : m.facets) tagged[{std::min(f.a, f.b), std::max(f.a, f.b)}] = 1;
    for (int e = 0; e < m.num_elements(); ++e) {
        const auto& t = m.triangles[e];
        for (int s = 0; s < 3; ++s) {
            const int a = t[s], b = t[(s + 1) % 3];
            const EdgeKey key{std::min(a, b), std::max(a, b)};
            if (count[key] == 1 && !tagged.count(key)) {
                m.facets.push_back({a, b, default_tag, e});
                tagged[key] = 1;
            }
        }
    }
}

int owner_of(const std::unordered_map<EdgeKey, int, EdgeHash>& directed, int a, int b) {
    auto it = directed.find({a, b});
    if (it == directed.end()) throw MeshFailure("facet without owner element");
    return it->second;
}

// Horizontal cell coordinates of one bulk face row: hole, channel face nodes, hole.
std::vector<double> face_row(const ReferenceGeometry& geom, int r, int j, int& n_left) {
    const Vec2 first = cell_vertex(geom, r, 0, j);
    const Vec2 last = cell_vertex(geom, r, r, j);
    const double h = (last.x() - first.x()) / r;
    n_left = std::max(1, static_cast<int>(std::lround(first.x() / h)));
    const int n_right = std::max(1, static_cast<int>(std::lround((1.0 - last.x()) / h)));
    std::vector<double> z;
    for (int s = 0; s < n_left; ++s) z.push_back(first.x() * s / n_left);
    for (int i = 0; i <= r; ++i) z.push_back(cell_vertex(geom, r, i, j).x());
    for (int s = 1; s < n_right; ++s) z.push_back(last.x() + (1.0 - last.x()) * s / n_right);
    return z;  // excludes z1 = 1
}

struct BulkBlock {
    std::vector<Vec2> vertices;
    std::vector<std::array<int, 3>> triangles;
    int row_len = 0;
    int per_cell = 0;
    int n_left = 0;
};

// Bulk region above the face row j of the cell (j = r for the top face), in the x_n > 0 orientation.
BulkBlock build_bulk(const ReferenceGeometry& geom, const TilingIndex& tiling, int r, int j) {
    BulkBlock b;
    const std::vector<double> zrow = face_row(geom, r, j, b.n_left);
    b.per_cell = static_cast<int>(zrow.size());
    const double eps = tiling.eps;
    const double H = geom.half_height;
    std::vector<double> xs;
    for (int k = 0; k < tiling.num_cells; ++k)
        for (double z1 : zrow) xs.push_back(tiling.cell_to_global(k, Vec2(z1, 1.0)).x());
    xs.push_back(1.0);
    b.row_len = static_cast<int>(xs.size());
    const double hy = 2.0 * eps / r;
    const int ny = std::max(1, static_cast<int>(std::ceil((H - eps) / hy - 1e-9)));
    for (int jy = 0; jy <= ny; ++jy) {
        const double y = jy == 0 ? eps : (jy == ny ? H : eps + (H - eps) * jy / ny);
        for (double x : xs) b.vertices.emplace_back(x, y);
    }
    for (int jy = 0; jy < ny; ++jy)
        for (int ix = 0; ix + 1 < b.row_len; ++ix) {
            const int v00 = jy * b.row_len + ix;
            split_quad(b.triangles, v00, v00 + 1, v00 + b.row_len, v00 + b.row_len + 1, true);
        }
    return b;
}

}  // namespace

double Mesh::signed_area(int e) const {
    const auto& t = triangles[e];
    const Vec2 a = vertices[t[1]] - vertices[t[0]];
    const Vec2 b = vertices[t[2]] - vertices[t[0]];
    return 0.5 * (a.x() * b.y() - a.y() * b.x());
}

bool Mesh::has_tag(BoundaryTag tag) const {
    return std::any_of(facets.begin(), facets.end(), [tag](const Facet& f) { return f.tag == tag; });
}

Vec2 Mesh::facet_normal(int f) const {
    const Vec2 d = vertices[facets[f].b] - vertices[facets[f].a];
    return Vec2(d.y(), -d.x()).normalized();
}

double Mesh::facet_length(int f) const { return (vertices[facets[f].b] - vertices[facets[f].a]).norm(); }

Mesh mesh_cell(const ReferenceGeometry& geom, int r) {
    if (r < 2) throw MeshFailure("resolution must be at least 2");
    Mesh m;
    const int n = r + 1;
    for (int j = 0; j <= r; ++j)
        for (int i = 0; i <= r; ++i) m.vertices.push_back(cell_vertex(geom, r, i, j));
    for (int j = 0; j < r; ++j) {
        const double zc = -1.0 + (2.0 * j + 1.0) / r;
        for (int i = 0; i < r; ++i) {
            const int v00 = j * n + i;
            split_quad(m.triangles, v00, v00 + 1, v00 + n, v00 + n + 1, zc <= 0.0);
        }
    }
    m.regions.assign(m.triangles.size(), Region::Channel);
    m.cell_of.assign(m.triangles.size(), -1);
    std::unordered_map<EdgeKey, int, EdgeHash> directed;
    for (int e = 0; e < m.num_elements(); ++e)
        for (int s = 0; s < 3; ++s) directed[{m.triangles[e][s], m.triangles[e][(s + 1) % 3]}] = e;
    for (int i = 0; i < r; ++i) {
        m.facets.push_back({i, i + 1, BoundaryTag::InterfaceMinus, owner_of(directed, i, i + 1)});
        const int a = r * n + i + 1, b = r * n + i;
        m.facets.push_back({a, b, BoundaryTag::InterfacePlus, owner_of(directed, a, b)});
    }
    for (int j = 0; j < r; ++j) {
        const int la = (j + 1) * n, lb = j * n;
        m.facets.push_back({la, lb, BoundaryTag::Wall, owner_of(directed, la, lb)});
        const int ra = j * n + r, rb = (j + 1) * n + r;
        m.facets.push_back({ra, rb, BoundaryTag::Wall, owner_of(directed, ra, rb)});
    }
    check_mesh(m);
    return m;
}

MicroMesh mesh_micro(const ReferenceGeometry& geom, const TilingIndex& tiling, int r) {
    if (r < 2) throw MeshFailure("resolution must be at least 2");
    MicroMesh mm;
    mm.eps = tiling.eps;
    mm.resolution = r;
    mm.cell = mesh_cell(geom, r);
    const int n = r + 1;

    const BulkBlock top = build_bulk(geom, tiling, r, r);
    const BulkBlock bot = build_bulk(geom, tiling, r, 0);
    Mesh& m = mm.mesh;
    const int np = static_cast<int>(top.vertices.size());
    m.vertices = top.vertices;
    for (const Vec2& v : bot.vertices) m.vertices.emplace_back(v.x(), -v.y());
    for (const auto& t : top.triangles) {
        m.triangles.push_back(t);
        m.regions.push_back(Region::BulkPlus);
        m.cell_of.push_back(-1);
    }
    for (const auto& t : bot.triangles) {
        m.triangles.push_back({np + t[0], np + t[2], np + t[1]});
        m.regions.push_back(Region::BulkMinus);
        m.cell_of.push_back(-1);
    }

    mm.cell_dofs.assign(tiling.num_cells, std::vector<int>(mm.cell.vertices.size(), -1));
    for (int k = 0; k < tiling.num_cells; ++k) {
        auto& map = mm.cell_dofs[k];
        for (int i = 0; i <= r; ++i) {
            map[r * n + i] = k * top.per_cell + top.n_left + i;
            map[i] = np + k * bot.per_cell + bot.n_left + i;
        }
        for (int j = 1; j < r; ++j)
            for (int i = 0; i <= r; ++i) {
                map[j * n + i] = m.num_dofs();
                m.vertices.push_back(tiling.cell_to_global(k, mm.cell.vertices[j * n + i]));
            }
        for (size_t d = 0; d < map.size(); ++d) {
            const Vec2 expect = tiling.cell_to_global(k, mm.cell.vertices[d]);
            if ((m.vertices[map[d]] - expect).norm() > 1e-14)
                throw MeshFailure("channel face vertex does not match the bulk row");
        }
        const int first_tri = m.num_elements();
        for (const auto& t : mm.cell.triangles) {
            m.triangles.push_back({map[t[0]], map[t[1]], map[t[2]]});
            m.regions.push_back(Region::Channel);
            m.cell_of.push_back(k);
        }
        for (const Facet& f : mm.cell.facets)
            m.facets.push_back({map[f.a], map[f.b], f.tag, first_tri + f.element});
    }
    tag_remaining_boundary(m, BoundaryTag::Exterior);
    check_mesh(m);

    std::vector<char> used(m.num_dofs(), 0);
    for (int e = 0; e < m.num_elements(); ++e)
        if (m.regions[e] == Region::Channel)
            for (int v : m.triangles[e]) used[v] = 1;
    for (int v = 0; v < m.num_dofs(); ++v)
        if (used[v]) mm.channel_vertices.push_back(v);
    return mm;
}

Mesh mesh_rectangle(double x0, double x1, double y0, double y1, int nx, int ny, Region region,
                    BoundaryTag bottom_tag) {
    if (nx < 1 || ny < 1) throw MeshFailure("rectangle needs at least one cell per direction");
    Mesh m;
    for (int j = 0; j <= ny; ++j) {
        const double y = j == ny ? y1 : y0 + (y1 - y0) * j / ny;
        for (int i = 0; i <= nx; ++i) {
            const double x = i == nx ? x1 : x0 + (x1 - x0) * i / nx;
            m.vertices.emplace_back(x, y);
        }
    }
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const int v00 = j * (nx + 1) + i;
            split_quad(m.triangles, v00, v00 + 1, v00 + nx + 1, v00 + nx + 2, true);
        }
    m.regions.assign(m.triangles.size(), region);
    m.cell_of.assign(m.triangles.size(), -1);
    std::unordered_map<EdgeKey, int, EdgeHash> directed;
    for (int e = 0; e < m.num_elements(); ++e)
        for (int s = 0; s < 3; ++s) directed[{m.triangles[e][s], m.triangles[e][(s + 1) % 3]}] = e;
    for (int i = 0; i < nx; ++i) m.facets.push_back({i, i + 1, bottom_tag, owner_of(directed, i, i + 1)});
    tag_remaining_boundary(m, BoundaryTag::Exterior);
    check_mesh(m);
    return m;
}

Mesh mirror_mesh(const Mesh& src, Region region) {
    Mesh m;
    for (const Vec2& v : src.vertices) m.vertices.emplace_back(v.x(), -v.y());
    for (const auto& t : src.triangles) m.triangles.push_back({t[0], t[2], t[1]});
    m.regions.assign(src.triangles.size(), region);
    m.cell_of = src.cell_of;
    for (const Facet& f : src.facets) {
        BoundaryTag tag = f.tag;
        if (tag == BoundaryTag::InterfacePlus)
            tag = BoundaryTag::InterfaceMinus;
        else if (tag == BoundaryTag::InterfaceMinus)
            tag = BoundaryTag::InterfacePlus;
        m.facets.push_back({f.b, f.a, tag, f.element});
    }
    return m;
}

void check_mesh(const Mesh& m) {
    if (m.regions.size() != m.triangles.size() || m.cell_of.size() != m.triangles.size())
        throw MeshFailure("per-element arrays do not match the triangle count");
    for (int e = 0; e < m.num_elements(); ++e) {
        for (int v : m.triangles[e])
            if (v < 0 || v >= m.num_dofs()) throw MeshFailure("triangle references a missing vertex");
        if (!(m.signed_area(e) > 0.0)) throw MeshFailure("degenerate or inverted element " + std::to_string(e));
    }
    for (const Facet& f : m.facets) {
        if (f.element < 0 || f.element >= m.num_elements()) throw MeshFailure("facet owner out of range");
        const auto& t = m.triangles[f.element];
        bool ok = false;
        for (int s = 0; s < 3; ++s) ok = ok || (t[s] == f.a && t[(s + 1) % 3] == f.b);
        if (!ok) throw MeshFailure("facet orientation does not match its owner");
    }
}

void write_mesh(const Mesh& m, std::ostream& os) {
    os.precision(17);
    for (const Vec2& v : m.vertices) os << "v " << v.x() << ' ' << v.y() << '\n';
    for (int e = 0; e < m.num_elements(); ++e) {
        const auto& t = m.triangles[e];
        os << "t " << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << to_string(m.regions[e]) << '\n';
    }
    for (const Facet& f : m.facets) os << "f " << f.a << ' ' << f.b << ' ' << to_string(f.tag) << '\n';
}

PointLocator::PointLocator(const Mesh& mesh, int buckets_per_side) : mesh_(&mesh) {
    lo_ = Vec2::Constant(std::numeric_limits<double>::infinity());
    hi_ = -lo_;
    for (const Vec2& v : mesh.vertices) {
        lo_ = lo_.cwiseMin(v);
        hi_ = hi_.cwiseMax(v);
    }
    const int n = buckets_per_side > 0
                      ? buckets_per_side
                      : std::max(1, static_cast<int>(std::sqrt(static_cast<double>(mesh.num_elements()) / 2.0)));
    nx_ = ny_ = n;
    buckets_.assign(static_cast<size_t>(nx_) * ny_, {});
    const Vec2 span = (hi_ - lo_).cwiseMax(Vec2::Constant(1e-300));
    for (int e = 0; e < mesh.num_elements(); ++e) {
        Vec2 a = mesh.vertices[mesh.triangles[e][0]], b = a;
        for (int s = 1; s < 3; ++s) {
            a = a.cwiseMin(mesh.vertices[mesh.triangles[e][s]]);
            b = b.cwiseMax(mesh.vertices[mesh.triangles[e][s]]);
        }
        const int i0 = std::clamp(static_cast<int>((a.x() - lo_.x()) / span.x() * nx_), 0, nx_ - 1);
        const int i1 = std::clamp(static_cast<int>((b.x() - lo_.x()) / span.x() * nx_), 0, nx_ - 1);
        const int j0 = std::clamp(static_cast<int>((a.y() - lo_.y()) / span.y() * ny_), 0, ny_ - 1);
        const int j1 = std::clamp(static_cast<int>((b.y() - lo_.y()) / span.y() * ny_), 0, ny_ - 1);
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i) buckets_[static_cast<size_t>(j) * nx_ + i].push_back(e);
    }
}

std::array<double, 3> PointLocator::barycentric(int e, const Vec2& x) const {
    const auto& t = mesh_->triangles[e];
    const Vec2& p0 = mesh_->vertices[t[0]];
    const Vec2& p1 = mesh_->vertices[t[1]];
    const Vec2& p2 = mesh_->vertices[t[2]];
    const double det = (p1.x() - p0.x()) * (p2.y() - p0.y()) - (p2.x() - p0.x()) * (p1.y() - p0.y());
    const double l1 = ((x.x() - p0.x()) * (p2.y() - p0.y()) - (p2.x() - p0.x()) * (x.y() - p0.y())) / det;
    const double l2 = ((p1.x() - p0.x()) * (x.y() - p0.y()) - (x.x() - p0.x()) * (p1.y() - p0.y())) / det;
    return {1.0 - l1 - l2, l1, l2};
}

Location PointLocator::locate(const Vec2& x) const {
    const Vec2 span = (hi_ - lo_).cwiseMax(Vec2::Constant(1e-300));
    const int ci = std::clamp(static_cast<int>((x.x() - lo_.x()) / span.x() * nx_), 0, nx_ - 1);
    const int cj = std::clamp(static_cast<int>((x.y() - lo_.y()) / span.y() * ny_), 0, ny_ - 1);
    Location best;
    double best_min = -std::numeric_limits<double>::infinity();
    for (int ring = 0; ring <= std::max(nx_, ny_); ++ring) {
        for (int j = cj - ring; j <= cj + ring; ++j)
            for (int i = ci - ring; i <= ci + ring; ++i) {
                if (i < 0 || j < 0 || i >= nx_ || j >= ny_) continue;
                if (std::max(std::abs(i - ci), std::abs(j - cj)) != ring) continue;
                for (int e : buckets_[static_cast<size_t>(j) * nx_ + i]) {
                    const auto l = barycentric(e, x);
                    const double mn = std::min({l[0], l[1], l[2]});
                    if (mn > best_min || (mn == best_min && e < best.element)) {
                        best_min = mn;
                        best.element = e;
                        best.bary = l;
                    }
                }
            }
        if (best_min >= -1e-12) break;
    }
    return best;
}

std::string to_string(Region r) {
    switch (r) {
        case Region::BulkPlus: return "bulk+";
        case Region::Channel: return "channel";
        case Region::BulkMinus: return "bulk-";
    }
    return "?";
}

std::string to_string(BoundaryTag t) {
    switch (t) {
        case BoundaryTag::Exterior: return "exterior";
        case BoundaryTag::Wall: return "N";
        case BoundaryTag::InterfacePlus: return "S+";
        case BoundaryTag::InterfaceMinus: return "S-";
    }
    return "?";
}

BoundaryTag boundary_tag_from_string(const std::string& name) {
    if (name == "exterior") return BoundaryTag::Exterior;
    if (name == "N" || name == "wall") return BoundaryTag::Wall;
    if (name == "S+") return BoundaryTag::InterfacePlus;
    if (name == "S-") return BoundaryTag::InterfaceMinus;
    throw UnknownTag("unknown boundary tag '" + name + "'");
}

}  // namespace thinlayer
