#pragma once

#include <map>
#include <string>
#include <vector>

#include "octarl/voxel_grid.hpp"

namespace octarl {

enum class ShapeKind {
    Sphere,
    Box,
    LBracket,
    Table,
    TwoBlobs,
    FloatingPair,
    Overhang,
};

ShapeKind shape_kind_from_name(const std::string& name);
std::string shape_kind_name(ShapeKind kind);

// Procedural test shape. Parameters are real scalars in cell units; any
// parameter left out falls back to a kind-specific default scaled to the grid.
struct ShapeSpec {
    ShapeKind kind = ShapeKind::Sphere;
    std::map<std::string, double> params;
    uint64_t seed = 0;

    double param(const std::string& name, double fallback) const {
        auto it = params.find(name);
        return it == params.end() ? fallback : it->second;
    }
};

// Deterministic generator: identical (spec, dims) yields bit-identical grids.
//
// Guarantees used by the critics tests:
//   floating_pair  -> exactly two disjoint occupied components
//   overhang       -> center of mass projects outside the support footprint
VoxelGrid gen_primitive(const ShapeSpec& spec, int dx, int dy, int dz);

// Fixed mixed-shape corpus (spheres, boxes, brackets, tables, blob pairs) with
// seeded parameter jitter; used for codebook training and regression baselines.
std::vector<ShapeSpec> standard_corpus(int count, int side, uint64_t seed);

}  // namespace octarl
