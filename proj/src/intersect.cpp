#include "octarl/intersect.hpp"

#include <algorithm>
#include <cmath>

namespace octarl {

namespace {

constexpr double kEps = 1e-12;

// 2D helpers for the coplanar branch; i0/i1 select the projection plane.
bool edge_edge_test(const Vec3& v0, const Vec3& u0, const Vec3& u1, int i0, int i1, double ax,
                    double ay) {
    const double bx = u0[i0] - u1[i0];
    const double by = u0[i1] - u1[i1];
    const double cx = v0[i0] - u0[i0];
    const double cy = v0[i1] - u0[i1];
    const double f = ay * bx - ax * by;
    const double d = by * cx - bx * cy;
    if ((f > 0 && d >= 0 && d <= f) || (f < 0 && d <= 0 && d >= f)) {
        const double e = ax * cy - ay * cx;
        if (f > 0) {
            if (e >= 0 && e <= f) return true;
        } else {
            if (e <= 0 && e >= f) return true;
        }
    }
    return false;
}

bool edge_against_tri_edges(const Vec3& v0, const Vec3& v1, const Vec3& u0, const Vec3& u1,
                            const Vec3& u2, int i0, int i1) {
    const double ax = v1[i0] - v0[i0];
    const double ay = v1[i1] - v0[i1];
    return edge_edge_test(v0, u0, u1, i0, i1, ax, ay) ||
           edge_edge_test(v0, u1, u2, i0, i1, ax, ay) ||
           edge_edge_test(v0, u2, u0, i0, i1, ax, ay);
}

bool point_in_tri(const Vec3& p, const Vec3& u0, const Vec3& u1, const Vec3& u2, int i0, int i1) {
    double a = u1[i1] - u0[i1];
    double b = -(u1[i0] - u0[i0]);
    double c = -a * u0[i0] - b * u0[i1];
    const double d0 = a * p[i0] + b * p[i1] + c;

    a = u2[i1] - u1[i1];
    b = -(u2[i0] - u1[i0]);
    c = -a * u1[i0] - b * u1[i1];
    const double d1 = a * p[i0] + b * p[i1] + c;

    a = u0[i1] - u2[i1];
    b = -(u0[i0] - u2[i0]);
    c = -a * u2[i0] - b * u2[i1];
    const double d2 = a * p[i0] + b * p[i1] + c;

    return d0 * d1 > 0 && d0 * d2 > 0;
}

bool coplanar_tri_tri(const Vec3& n, const Vec3& v0, const Vec3& v1, const Vec3& v2,
                      const Vec3& u0, const Vec3& u1, const Vec3& u2) {
    const double ax = std::abs(n.x), ay = std::abs(n.y), az = std::abs(n.z);
    int i0, i1;
    if (ax > ay) {
        if (ax > az) {
            i0 = 1;
            i1 = 2;
        } else {
            i0 = 0;
            i1 = 1;
        }
    } else {
        if (az > ay) {
            i0 = 0;
            i1 = 1;
        } else {
            i0 = 0;
            i1 = 2;
        }
    }
    if (edge_against_tri_edges(v0, v1, u0, u1, u2, i0, i1)) return true;
    if (edge_against_tri_edges(v1, v2, u0, u1, u2, i0, i1)) return true;
    if (edge_against_tri_edges(v2, v0, u0, u1, u2, i0, i1)) return true;
    if (point_in_tri(v0, u0, u1, u2, i0, i1)) return true;
    if (point_in_tri(u0, v0, v1, v2, i0, i1)) return true;
    return false;
}

// Projected interval of one triangle on the intersection line.
// Returns false when the triangle is coplanar with the other's plane.
bool compute_intervals(double vv0, double vv1, double vv2, double d0, double d1, double d2,
                       double d0d1, double d0d2, double& a, double& b, double& c, double& x0,
                       double& x1) {
    if (d0d1 > 0) {
        a = vv2;
        b = (vv0 - vv2) * d2;
        c = (vv1 - vv2) * d2;
        x0 = d2 - d0;
        x1 = d2 - d1;
    } else if (d0d2 > 0) {
        a = vv1;
        b = (vv0 - vv1) * d1;
        c = (vv2 - vv1) * d1;
        x0 = d1 - d0;
        x1 = d1 - d2;
    } else if (d1 * d2 > 0 || d0 != 0) {
        a = vv0;
        b = (vv1 - vv0) * d0;
        c = (vv2 - vv0) * d0;
        x0 = d0 - d1;
        x1 = d0 - d2;
    } else if (d1 != 0) {
        a = vv1;
        b = (vv0 - vv1) * d1;
        c = (vv2 - vv1) * d1;
        x0 = d1 - d0;
        x1 = d1 - d2;
    } else if (d2 != 0) {
        a = vv2;
        b = (vv0 - vv2) * d2;
        c = (vv1 - vv2) * d2;
        x0 = d2 - d0;
        x1 = d2 - d1;
    } else {
        return false;  // coplanar
    }
    return true;
}

}  // namespace

bool tri_tri_intersect(const Vec3& v0, const Vec3& v1, const Vec3& v2, const Vec3& u0,
                       const Vec3& u1, const Vec3& u2) {
    const Vec3 n1 = cross(v1 - v0, v2 - v0);
    const double d1 = -dot(n1, v0);
    double du0 = dot(n1, u0) + d1;
    double du1 = dot(n1, u1) + d1;
    double du2 = dot(n1, u2) + d1;
    if (std::abs(du0) < kEps) du0 = 0;
    if (std::abs(du1) < kEps) du1 = 0;
    if (std::abs(du2) < kEps) du2 = 0;
    const double du0du1 = du0 * du1;
    const double du0du2 = du0 * du2;
    if (du0du1 > 0 && du0du2 > 0) return false;

    const Vec3 n2 = cross(u1 - u0, u2 - u0);
    const double d2 = -dot(n2, u0);
    double dv0 = dot(n2, v0) + d2;
    double dv1 = dot(n2, v1) + d2;
    double dv2 = dot(n2, v2) + d2;
    if (std::abs(dv0) < kEps) dv0 = 0;
    if (std::abs(dv1) < kEps) dv1 = 0;
    if (std::abs(dv2) < kEps) dv2 = 0;
    const double dv0dv1 = dv0 * dv1;
    const double dv0dv2 = dv0 * dv2;
    if (dv0dv1 > 0 && dv0dv2 > 0) return false;

    const Vec3 dir = cross(n1, n2);
    int index = 0;
    double max = std::abs(dir.x);
    if (std::abs(dir.y) > max) {
        max = std::abs(dir.y);
        index = 1;
    }
    if (std::abs(dir.z) > max) index = 2;

    const double vp0 = v0[index], vp1 = v1[index], vp2 = v2[index];
    const double up0 = u0[index], up1 = u1[index], up2 = u2[index];

    double a, b, c, x0, x1;
    if (!compute_intervals(vp0, vp1, vp2, dv0, dv1, dv2, dv0dv1, dv0dv2, a, b, c, x0, x1))
        return coplanar_tri_tri(n1, v0, v1, v2, u0, u1, u2);
    double d, e, f, y0, y1;
    if (!compute_intervals(up0, up1, up2, du0, du1, du2, du0du1, du0du2, d, e, f, y0, y1))
        return coplanar_tri_tri(n1, v0, v1, v2, u0, u1, u2);

    const double xx = x0 * x1;
    const double yy = y0 * y1;
    const double xxyy = xx * yy;

    double isect1[2], isect2[2];
    double tmp = a * xxyy;
    isect1[0] = tmp + b * x1 * yy;
    isect1[1] = tmp + c * x0 * yy;
    tmp = d * xxyy;
    isect2[0] = tmp + e * xx * y1;
    isect2[1] = tmp + f * xx * y0;

    if (isect1[0] > isect1[1]) std::swap(isect1[0], isect1[1]);
    if (isect2[0] > isect2[1]) std::swap(isect2[0], isect2[1]);
    return !(isect1[1] < isect2[0] || isect2[1] < isect1[0]);
}

void Aabb::grow(const Vec3& p) {
    lo.x = std::min(lo.x, p.x);
    lo.y = std::min(lo.y, p.y);
    lo.z = std::min(lo.z, p.z);
    hi.x = std::max(hi.x, p.x);
    hi.y = std::max(hi.y, p.y);
    hi.z = std::max(hi.z, p.z);
}

void Aabb::grow(const Aabb& box) {
    grow(box.lo);
    grow(box.hi);
}

bool Aabb::overlaps(const Aabb& other) const {
    return lo.x <= other.hi.x && other.lo.x <= hi.x && lo.y <= other.hi.y && other.lo.y <= hi.y &&
           lo.z <= other.hi.z && other.lo.z <= hi.z;
}

int Aabb::longest_axis() const {
    const double ex = hi.x - lo.x, ey = hi.y - lo.y, ez = hi.z - lo.z;
    if (ex >= ey && ex >= ez) return 0;
    return ey >= ez ? 1 : 2;
}

Bvh::Bvh(const TriMesh& mesh) : mesh_(mesh) {
    const int f = static_cast<int>(mesh.face_count());
    face_ids_.resize(f);
    face_box_.resize(f);
    centroid_.resize(f);
    for (int i = 0; i < f; ++i) {
        face_ids_[i] = i;
        Aabb box;
        Vec3 c{};
        for (int v : mesh.faces[i]) {
            box.grow(mesh.vertices[v]);
            c = c + mesh.vertices[v];
        }
        face_box_[i] = box;
        centroid_[i] = c * (1.0 / 3.0);
    }
    if (f > 0) root_ = build(0, f);
}

int Bvh::build(int first, int count) {
    Node node;
    for (int i = first; i < first + count; ++i) node.box.grow(face_box_[face_ids_[i]]);
    if (count <= 4) {
        node.first = first;
        node.count = count;
        nodes_.push_back(node);
        return static_cast<int>(nodes_.size()) - 1;
    }
    const int axis = node.box.longest_axis();
    const int mid = first + count / 2;
    std::nth_element(face_ids_.begin() + first, face_ids_.begin() + mid,
                     face_ids_.begin() + first + count, [&](int a, int b) {
                         return centroid_[a][axis] < centroid_[b][axis] ||
                                (centroid_[a][axis] == centroid_[b][axis] && a < b);
                     });
    const int node_index = static_cast<int>(nodes_.size());
    nodes_.push_back(node);  // children filled in below
    const int left = build(first, mid - first);
    const int right = build(mid, first + count - mid);
    nodes_[node_index].left = left;
    nodes_[node_index].right = right;
    return node_index;
}

void Bvh::test_faces(int fa, int fb, std::vector<std::pair<int, int>>& out) const {
    if (fa == fb) return;
    if (!face_box_[fa].overlaps(face_box_[fb])) return;
    const auto& a = mesh_.faces[fa];
    const auto& b = mesh_.faces[fb];
    for (int i : a)
        for (int j : b)
            if (i == j) return;  // shared vertex
    if (tri_tri_intersect(mesh_.vertices[a[0]], mesh_.vertices[a[1]], mesh_.vertices[a[2]],
                          mesh_.vertices[b[0]], mesh_.vertices[b[1]], mesh_.vertices[b[2]]))
        out.emplace_back(std::min(fa, fb), std::max(fa, fb));
}

void Bvh::collide(int a, int b, std::vector<std::pair<int, int>>& out) const {
    const Node& na = nodes_[a];
    const Node& nb = nodes_[b];
    if (a == b) {
        if (na.leaf()) {
            for (int i = na.first; i < na.first + na.count; ++i)
                for (int j = i + 1; j < na.first + na.count; ++j)
                    test_faces(face_ids_[i], face_ids_[j], out);
            return;
        }
        collide(na.left, na.left, out);
        collide(na.right, na.right, out);
        collide(na.left, na.right, out);
        return;
    }
    if (!na.box.overlaps(nb.box)) return;
    if (na.leaf() && nb.leaf()) {
        for (int i = na.first; i < na.first + na.count; ++i)
            for (int j = nb.first; j < nb.first + nb.count; ++j)
                test_faces(face_ids_[i], face_ids_[j], out);
        return;
    }
    if (!na.leaf()) {
        collide(na.left, b, out);
        collide(na.right, b, out);
    } else {
        collide(a, nb.left, out);
        collide(a, nb.right, out);
    }
}

std::vector<std::pair<int, int>> Bvh::self_intersections() const {
    std::vector<std::pair<int, int>> out;
    if (root_ >= 0) collide(root_, root_, out);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::pair<int, int>> intersecting_face_pairs(const TriMesh& mesh, bool use_bvh) {
    if (use_bvh) {
        Bvh bvh(mesh);
        return bvh.self_intersections();
    }
    std::vector<std::pair<int, int>> out;
    const int f = static_cast<int>(mesh.face_count());
    std::vector<Aabb> boxes(f);
    for (int i = 0; i < f; ++i)
        for (int v : mesh.faces[i]) boxes[i].grow(mesh.vertices[v]);
    for (int i = 0; i < f; ++i) {
        const auto& a = mesh.faces[i];
        for (int j = i + 1; j < f; ++j) {
            if (!boxes[i].overlaps(boxes[j])) continue;
            const auto& b = mesh.faces[j];
            bool shared = false;
            for (int p : a)
                for (int q : b) shared |= (p == q);
            if (shared) continue;
            if (tri_tri_intersect(mesh.vertices[a[0]], mesh.vertices[a[1]], mesh.vertices[a[2]],
                                  mesh.vertices[b[0]], mesh.vertices[b[1]], mesh.vertices[b[2]]))
                out.emplace_back(i, j);
        }
    }
    return out;
}

int64_t intersecting_pairs(const TriMesh& mesh, bool use_bvh) {
    return static_cast<int64_t>(intersecting_face_pairs(mesh, use_bvh).size());
}

}  // namespace octarl
