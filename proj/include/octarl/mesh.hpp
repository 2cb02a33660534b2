#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "octarl/voxel_grid.hpp"

namespace octarl {

struct Vec3 {
    double x = 0, y = 0, z = 0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

// Triangle mesh with +z as the up axis. Faces with a repeated vertex index are
// dropped at construction.
struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces;

    size_t face_count() const { return faces.size(); }
    bool empty() const { return faces.empty(); }
    void validate() const;  // index bounds + no degenerate faces
};

// Block surface extraction: two triangles per voxel face whose neighbor is
// empty or out of bounds, shared lattice vertices deduplicated, outward
// winding. Vertex coordinates are lattice corners scaled by cell_size.
TriMesh extract_surface(const VoxelGrid& grid);

// Mean of occupied cell centers, in meters. Uniform density.
Vec3 center_of_mass(const VoxelGrid& grid);

// Signed-tetrahedron volume centroid of a closed mesh. Falls back to the
// area-weighted face centroid when the enclosed volume is numerically zero
// (open or flat input).
Vec3 center_of_mass(const TriMesh& mesh);

// Per-component face counts, descending. Faces are adjacent iff they share an
// edge (both vertex ids); vertex-pinched parts count as separate components.
std::vector<int64_t> connected_components(const TriMesh& mesh);

// OBJ restricted to `v` and `f` records; polygonal faces are fan-triangulated
// on import.
void save_obj(const std::string& path, const TriMesh& mesh);
TriMesh load_obj(const std::string& path);

}  // namespace octarl
