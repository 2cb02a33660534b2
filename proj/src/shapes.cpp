#include "octarl/shapes.hpp"

#include <algorithm>
#include <cmath>

namespace octarl {

ShapeKind shape_kind_from_name(const std::string& name) {
    if (name == "sphere") return ShapeKind::Sphere;
    if (name == "box") return ShapeKind::Box;
    if (name == "l_bracket") return ShapeKind::LBracket;
    if (name == "table") return ShapeKind::Table;
    if (name == "two_blobs") return ShapeKind::TwoBlobs;
    if (name == "floating_pair") return ShapeKind::FloatingPair;
    if (name == "overhang") return ShapeKind::Overhang;
    fail("unknown shape kind: " + name);
}

std::string shape_kind_name(ShapeKind kind) {
    switch (kind) {
        case ShapeKind::Sphere: return "sphere";
        case ShapeKind::Box: return "box";
        case ShapeKind::LBracket: return "l_bracket";
        case ShapeKind::Table: return "table";
        case ShapeKind::TwoBlobs: return "two_blobs";
        case ShapeKind::FloatingPair: return "floating_pair";
        case ShapeKind::Overhang: return "overhang";
    }
    fail("bad shape kind");
}

namespace {

void check_range(bool ok, const std::string& what) {
    if (!ok) fail("shape-exceeds-bounds: " + what);
}

// Integer-cell box [x0,x0+ex) x [y0,y0+ey) x [z0,z0+ez). Zero extents are a
// legal no-op.
void fill_box(VoxelGrid& g, int x0, int y0, int z0, int ex, int ey, int ez) {
    if (ex <= 0 || ey <= 0 || ez <= 0) return;
    check_range(x0 >= 0 && y0 >= 0 && z0 >= 0 && x0 + ex <= g.dx() && y0 + ey <= g.dy() &&
                    z0 + ez <= g.dz(),
                "box extent outside grid");
    for (int z = z0; z < z0 + ez; ++z)
        for (int y = y0; y < y0 + ey; ++y)
            for (int x = x0; x < x0 + ex; ++x) g.set(x, y, z, true);
}

// Cells whose center lies within radius of (cx,cy,cz), coordinates in cells.
void fill_sphere(VoxelGrid& g, double cx, double cy, double cz, double r) {
    check_range(r >= 0, "negative radius");
    check_range(cx - r >= 0 && cx + r <= g.dx() && cy - r >= 0 && cy + r <= g.dy() &&
                    cz - r >= 0 && cz + r <= g.dz(),
                "sphere outside grid");
    const double r2 = r * r;
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - r)) - 1);
    const int x1 = std::min(g.dx(), static_cast<int>(std::ceil(cx + r)) + 1);
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - r)) - 1);
    const int y1 = std::min(g.dy(), static_cast<int>(std::ceil(cy + r)) + 1);
    const int z0 = std::max(0, static_cast<int>(std::floor(cz - r)) - 1);
    const int z1 = std::min(g.dz(), static_cast<int>(std::ceil(cz + r)) + 1);
    for (int z = z0; z < z1; ++z)
        for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x) {
                const double ddx = x + 0.5 - cx;
                const double ddy = y + 0.5 - cy;
                const double ddz = z + 0.5 - cz;
                if (ddx * ddx + ddy * ddy + ddz * ddz <= r2) g.set(x, y, z, true);
            }
}

int iround(double v) { return static_cast<int>(std::lround(v)); }

}  // namespace

VoxelGrid gen_primitive(const ShapeSpec& spec, int dx, int dy, int dz) {
    VoxelGrid g(dx, dy, dz);
    const double cx = dx / 2.0, cy = dy / 2.0, cz = dz / 2.0;
    switch (spec.kind) {
        case ShapeKind::Sphere: {
            const double r = spec.param("radius", 0.375 * dx);
            fill_sphere(g, cx + spec.param("ox", 0), cy + spec.param("oy", 0),
                        cz + spec.param("oz", 0), r);
            break;
        }
        case ShapeKind::Box: {
            const int ex = iround(spec.param("ex", dx / 2.0));
            const int ey = iround(spec.param("ey", dy / 2.0));
            const int ez = iround(spec.param("ez", dz / 2.0));
            const int x0 = iround(spec.param("x0", (dx - ex) / 2.0));
            const int y0 = iround(spec.param("y0", (dy - ey) / 2.0));
            const int z0 = iround(spec.param("z0", (dz - ez) / 2.0));
            fill_box(g, x0, y0, z0, ex, ey, ez);
            break;
        }
        case ShapeKind::LBracket: {
            // Two equal-volume boxes: a 2s x s x s foot and an s x s x 2s post
            // on top of its first s cells.
            const int s = iround(spec.param("arm", dx / 4.0));
            check_range(s > 0, "l_bracket arm must be positive");
            const int x0 = iround(spec.param("x0", (dx - 2.0 * s) / 2.0));
            const int y0 = iround(spec.param("y0", (dy - s) / 2.0));
            const int z0 = iround(spec.param("z0", 0));
            fill_box(g, x0, y0, z0, 2 * s, s, s);
            fill_box(g, x0, y0, z0 + s, s, s, 2 * s);
            break;
        }
        case ShapeKind::Table: {
            const int w = iround(spec.param("width", 0.625 * dx));
            const int h = iround(spec.param("height", dz / 2.0));
            const int top = iround(spec.param("top", 4));
            const int leg = iround(spec.param("leg", 4));
            check_range(h > top && w > 2 * leg, "table proportions");
            const int x0 = iround((dx - w) / 2.0);
            const int y0 = iround((dy - w) / 2.0);
            fill_box(g, x0, y0, h - top, w, w, top);
            for (int lx : {x0, x0 + w - leg})
                for (int ly : {y0, y0 + w - leg}) fill_box(g, lx, ly, 0, leg, leg, h - top);
            break;
        }
        case ShapeKind::TwoBlobs: {
            const double r = spec.param("radius", dx / 6.0);
            const double gap = spec.param("gap", 4);
            check_range(gap >= 1, "two_blobs gap must be >= 1 cell");
            fill_sphere(g, cx - r - gap / 2.0, cy, cz, r);
            fill_sphere(g, cx + r + gap / 2.0, cy, cz, r);
            break;
        }
        case ShapeKind::FloatingPair: {
            // Grounded cube plus an identical cube floating gap cells above it.
            const int s = iround(spec.param("size", dx / 4.0));
            const int gap = iround(spec.param("gap", dz / 8.0));
            check_range(gap >= 1, "floating_pair gap must be >= 1 cell");
            const int x0 = iround((dx - s) / 2.0);
            const int y0 = iround((dy - s) / 2.0);
            fill_box(g, x0, y0, 0, s, s, s);
            fill_box(g, x0, y0, s + gap, s, s, s);
            break;
        }
        case ShapeKind::Overhang: {
            // Small pedestal with a much larger block on top, shifted in +x so
            // the combined center of mass projects beyond the pedestal footprint.
            const int p = iround(spec.param("pedestal", dx / 8.0));
            const int hp = iround(spec.param("pedestal_height", 0.1875 * dz));
            const int m = iround(spec.param("mass", 0.375 * dx));
            const int hm = iround(spec.param("mass_height", 0.1875 * dz));
            const int off = iround(spec.param("offset", dx / 5.0));
            const int px0 = iround(cx - p / 2.0);
            const int py0 = iround(cy - p / 2.0);
            fill_box(g, px0, py0, 0, p, p, hp);
            const int mx0 = iround(cx - m / 2.0 + off);
            const int my0 = iround(cy - m / 2.0);
            check_range(mx0 < px0 + p && mx0 + m > px0, "overhang mass detached from pedestal");
            fill_box(g, mx0, my0, hp, m, m, hm);
            break;
        }
    }
    return g;
}

std::vector<ShapeSpec> standard_corpus(int count, int side, uint64_t seed) {
    require(count > 0 && side >= 16, "standard_corpus: need count > 0 and side >= 16");
    Rng rng(seed);
    std::vector<ShapeSpec> specs;
    specs.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) {
        ShapeSpec s;
        s.seed = seed + static_cast<uint64_t>(i);
        switch (i % 5) {
            case 0:
                s.kind = ShapeKind::Sphere;
                s.params["radius"] = rng.uniform(0.15 * side, 0.4 * side);
                s.params["ox"] = rng.uniform(-0.05 * side, 0.05 * side);
                s.params["oy"] = rng.uniform(-0.05 * side, 0.05 * side);
                s.params["oz"] = rng.uniform(-0.05 * side, 0.05 * side);
                break;
            case 1:
                s.kind = ShapeKind::Box;
                s.params["ex"] = std::floor(rng.uniform(0.2 * side, 0.8 * side));
                s.params["ey"] = std::floor(rng.uniform(0.2 * side, 0.8 * side));
                s.params["ez"] = std::floor(rng.uniform(0.2 * side, 0.8 * side));
                break;
            case 2:
                s.kind = ShapeKind::LBracket;
                s.params["arm"] = std::floor(rng.uniform(0.15 * side, 0.3 * side));
                break;
            case 3:
                s.kind = ShapeKind::Table;
                s.params["width"] = std::floor(rng.uniform(0.4 * side, 0.8 * side));
                s.params["height"] = std::floor(rng.uniform(0.4 * side, 0.8 * side));
                break;
            default:
                s.kind = ShapeKind::TwoBlobs;
                s.params["radius"] = rng.uniform(0.1 * side, 0.2 * side);
                s.params["gap"] = std::floor(rng.uniform(2, 0.1 * side));
                break;
        }
        specs.push_back(std::move(s));
    }
    return specs;
}

}  // namespace octarl
