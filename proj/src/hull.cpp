#include "octarl/hull.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace octarl {

std::vector<Vec2> support_footprint(const TriMesh& mesh, double tol_fraction) {
    require(!mesh.vertices.empty(), "support_footprint: empty mesh");
    double z_min = std::numeric_limits<double>::infinity();
    double z_max = -std::numeric_limits<double>::infinity();
    for (const auto& v : mesh.vertices) {
        z_min = std::min(z_min, v.z);
        z_max = std::max(z_max, v.z);
    }
    const double band = z_min + tol_fraction * (z_max - z_min);
    std::vector<Vec2> pts;
    for (const auto& v : mesh.vertices)
        if (v.z <= band) pts.push_back({v.x, v.y});
    return pts;
}

namespace {

double cross2(const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

double seg_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    const double vx = b.x - a.x, vy = b.y - a.y;
    const double len2 = vx * vx + vy * vy;
    double t = 0.0;
    if (len2 > 0.0) t = std::clamp(((p.x - a.x) * vx + (p.y - a.y) * vy) / len2, 0.0, 1.0);
    const double dx = p.x - (a.x + t * vx), dy = p.y - (a.y + t * vy);
    return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

Hull2D convex_hull_2d(std::vector<Vec2> points) {
    require(!points.empty(), "convex_hull_2d: empty input");
    std::sort(points.begin(), points.end(), [](const Vec2& a, const Vec2& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    points.erase(std::unique(points.begin(), points.end(),
                             [](const Vec2& a, const Vec2& b) { return a.x == b.x && a.y == b.y; }),
                 points.end());
    const size_t n = points.size();
    if (n <= 2) return Hull2D{std::move(points)};

    std::vector<Vec2> hull(2 * n);
    size_t k = 0;
    for (size_t i = 0; i < n; ++i) {  // lower chain
        while (k >= 2 && cross2(hull[k - 2], hull[k - 1], points[i]) <= 0.0) --k;
        hull[k++] = points[i];
    }
    const size_t lower = k + 1;
    for (size_t i = n - 1; i-- > 0;) {  // upper chain
        while (k >= lower && cross2(hull[k - 2], hull[k - 1], points[i]) <= 0.0) --k;
        hull[k++] = points[i];
    }
    hull.resize(k - 1);  // last point repeats the first
    return Hull2D{std::move(hull)};
}

double point_hull_distance(const Vec2& p, const Hull2D& hull) {
    require(!hull.points.empty(), "point_hull_distance: empty hull");
    const auto& h = hull.points;
    if (h.size() == 1) {
        const double dx = p.x - h[0].x, dy = p.y - h[0].y;
        return std::sqrt(dx * dx + dy * dy);
    }
    if (h.size() == 2) return seg_distance(p, h[0], h[1]);

    double boundary = std::numeric_limits<double>::infinity();
    bool inside = true;
    for (size_t i = 0; i < h.size(); ++i) {
        const Vec2& a = h[i];
        const Vec2& b = h[(i + 1) % h.size()];
        boundary = std::min(boundary, seg_distance(p, a, b));
        if (cross2(a, b, p) < 0.0) inside = false;  // CCW loop keeps interior on the left
    }
    return inside ? -boundary : boundary;
}

}  // namespace octarl
