#pragma once

#include <vector>

#include "octarl/mesh.hpp"

namespace octarl {

struct Vec2 {
    double x = 0, y = 0;
};

// Counter-clockwise convex vertex loop; collinear points are not retained.
// Degenerate inputs yield 1-point or 2-point hulls.
struct Hull2D {
    std::vector<Vec2> points;
};

// xy of every vertex with z <= z_min + tol_fraction * (z_max - z_min).
// A zero-height mesh returns all vertices.
std::vector<Vec2> support_footprint(const TriMesh& mesh, double tol_fraction = 0.02);

// Monotone chain over >= 1 input points.
Hull2D convex_hull_2d(std::vector<Vec2> points);

// Euclidean distance from p to the hull boundary, negative when p lies inside.
// Point and segment hulls have no interior, so the result is never negative.
double point_hull_distance(const Vec2& p, const Hull2D& hull);

}  // namespace octarl
