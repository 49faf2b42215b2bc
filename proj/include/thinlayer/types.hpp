#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <array>
#include <string>

namespace thinlayer {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class Region : int { BulkPlus = 0, Channel = 1, BulkMinus = 2 };

enum class BoundaryTag : int { Exterior = 0, Wall = 1, InterfacePlus = 2, InterfaceMinus = 3 };

/// Per-region multiplier used by every assembly routine.
struct RegionScale {
    double plus = 1.0;
    double channel = 1.0;
    double minus = 1.0;

    double operator[](Region r) const {
        switch (r) {
            case Region::BulkPlus: return plus;
            case Region::Channel: return channel;
            case Region::BulkMinus: return minus;
        }
        return 0.0;
    }
    static RegionScale uniform(double s) { return {s, s, s}; }
    static RegionScale layer_only(double s) { return {0.0, s, 0.0}; }
    static RegionScale bulk_only(double s) { return {s, 0.0, s}; }
};

std::string to_string(Region r);
std::string to_string(BoundaryTag t);
/// Accepts "exterior", "N", "wall", "S+", "S-". Throws UnknownTag otherwise.
BoundaryTag boundary_tag_from_string(const std::string& name);

}  // namespace thinlayer
