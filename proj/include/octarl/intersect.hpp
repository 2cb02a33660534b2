#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "octarl/mesh.hpp"

namespace octarl {

// Triangle-triangle intersection (interval method with a coplanar branch).
bool tri_tri_intersect(const Vec3& v0, const Vec3& v1, const Vec3& v2, const Vec3& u0,
                       const Vec3& u1, const Vec3& u2);

struct Aabb {
    Vec3 lo{1e300, 1e300, 1e300};
    Vec3 hi{-1e300, -1e300, -1e300};

    void grow(const Vec3& p);
    void grow(const Aabb& box);
    bool overlaps(const Aabb& other) const;
    int longest_axis() const;
};

// Axis-aligned bounding box tree over mesh faces, leaf size <= 4. Immutable
// after build; queries are pure.
class Bvh {
public:
    explicit Bvh(const TriMesh& mesh);

    // Face pairs (a < b) whose triangles properly intersect, excluding pairs
    // that share a vertex id. Identical to the brute-force pair set.
    std::vector<std::pair<int, int>> self_intersections() const;

private:
    struct Node {
        Aabb box;
        int left = -1, right = -1;  // internal children
        int first = 0, count = 0;   // leaf face range
        bool leaf() const { return count > 0; }
    };

    int build(int first, int count);
    void collide(int a, int b, std::vector<std::pair<int, int>>& out) const;
    void test_faces(int fa, int fb, std::vector<std::pair<int, int>>& out) const;

    const TriMesh& mesh_;
    std::vector<int> face_ids_;   // leaf ranges index into this
    std::vector<Aabb> face_box_;  // per face id
    std::vector<Vec3> centroid_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

// Pairs of faces in proper intersection, shared-vertex pairs excluded. The
// BVH path and the O(F^2) scan return the same set.
std::vector<std::pair<int, int>> intersecting_face_pairs(const TriMesh& mesh, bool use_bvh);
int64_t intersecting_pairs(const TriMesh& mesh, bool use_bvh = true);

}  // namespace octarl
