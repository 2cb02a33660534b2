#include "octarl/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace octarl {

void TriMesh::validate() const {
    const int n = static_cast<int>(vertices.size());
    for (const auto& f : faces) {
        require(f[0] >= 0 && f[0] < n && f[1] >= 0 && f[1] < n && f[2] >= 0 && f[2] < n,
                "mesh face index out of range");
        require(f[0] != f[1] && f[1] != f[2] && f[0] != f[2], "degenerate face");
    }
}

namespace {

// Corner order per face direction, counter-clockwise seen from outside.
// Each entry is a (dx,dy,dz) corner offset from the cell origin.
struct FacePattern {
    int nx, ny, nz;               // neighbor offset
    std::array<int, 3> quad[4];   // CCW corners
};

constexpr FacePattern kFaces[6] = {
    {+1, 0, 0, {{{1, 0, 0}}, {{1, 1, 0}}, {{1, 1, 1}}, {{1, 0, 1}}}},
    {-1, 0, 0, {{{0, 0, 0}}, {{0, 0, 1}}, {{0, 1, 1}}, {{0, 1, 0}}}},
    {0, +1, 0, {{{0, 1, 0}}, {{0, 1, 1}}, {{1, 1, 1}}, {{1, 1, 0}}}},
    {0, -1, 0, {{{0, 0, 0}}, {{1, 0, 0}}, {{1, 0, 1}}, {{0, 0, 1}}}},
    {0, 0, +1, {{{0, 0, 1}}, {{1, 0, 1}}, {{1, 1, 1}}, {{0, 1, 1}}}},
    {0, 0, -1, {{{0, 0, 0}}, {{0, 1, 0}}, {{1, 1, 0}}, {{1, 0, 0}}}},
};

}  // namespace

TriMesh extract_surface(const VoxelGrid& grid) {
    TriMesh mesh;
    std::unordered_map<int64_t, int> corner_ids;
    const int64_t stride_y = grid.dx() + 1;
    const int64_t stride_z = stride_y * (grid.dy() + 1);
    const double s = grid.cell_size();

    auto corner = [&](int x, int y, int z) {
        const int64_t key = x + stride_y * y + stride_z * z;
        auto [it, inserted] = corner_ids.try_emplace(key, static_cast<int>(mesh.vertices.size()));
        if (inserted) mesh.vertices.push_back({x * s, y * s, z * s});
        return it->second;
    };

    for (int z = 0; z < grid.dz(); ++z)
        for (int y = 0; y < grid.dy(); ++y)
            for (int x = 0; x < grid.dx(); ++x) {
                if (!grid.at(x, y, z)) continue;
                for (const auto& fp : kFaces) {
                    const int nx = x + fp.nx, ny = y + fp.ny, nz = z + fp.nz;
                    if (grid.in_bounds(nx, ny, nz) && grid.at(nx, ny, nz)) continue;
                    int q[4];
                    for (int i = 0; i < 4; ++i)
                        q[i] = corner(x + fp.quad[i][0], y + fp.quad[i][1], z + fp.quad[i][2]);
                    mesh.faces.push_back({q[0], q[1], q[2]});
                    mesh.faces.push_back({q[0], q[2], q[3]});
                }
            }
    return mesh;
}

Vec3 center_of_mass(const VoxelGrid& grid) {
    require(grid.occupied_count() > 0, "empty-input: grid has no occupied cells");
    double sx = 0, sy = 0, sz = 0;
    int64_t n = 0;
    for (int z = 0; z < grid.dz(); ++z)
        for (int y = 0; y < grid.dy(); ++y)
            for (int x = 0; x < grid.dx(); ++x)
                if (grid.at(x, y, z)) {
                    sx += x + 0.5;
                    sy += y + 0.5;
                    sz += z + 0.5;
                    ++n;
                }
    const double s = grid.cell_size();
    return {sx / n * s, sy / n * s, sz / n * s};
}

Vec3 center_of_mass(const TriMesh& mesh) {
    require(!mesh.empty(), "empty-input: mesh has no faces");
    double volume = 0.0;
    Vec3 moment{};
    for (const auto& f : mesh.faces) {
        const Vec3& a = mesh.vertices[f[0]];
        const Vec3& b = mesh.vertices[f[1]];
        const Vec3& c = mesh.vertices[f[2]];
        const double v = dot(a, cross(b, c)) / 6.0;  // signed tet (origin,a,b,c)
        volume += v;
        moment = moment + (a + b + c) * (v / 4.0);
    }
    if (std::abs(volume) > 1e-12) return moment * (1.0 / volume);
    // Open or flat mesh: fall back to the area-weighted face centroid.
    double area = 0.0;
    Vec3 centroid{};
    for (const auto& f : mesh.faces) {
        const Vec3& a = mesh.vertices[f[0]];
        const Vec3& b = mesh.vertices[f[1]];
        const Vec3& c = mesh.vertices[f[2]];
        const Vec3 n = cross(b - a, c - a);
        const double w = 0.5 * std::sqrt(dot(n, n));
        area += w;
        centroid = centroid + (a + b + c) * (w / 3.0);
    }
    require(area > 0.0, "empty-input: mesh has zero surface area");
    return centroid * (1.0 / area);
}

namespace {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[b] = a;
    }
};

}  // namespace

std::vector<int64_t> connected_components(const TriMesh& mesh) {
    if (mesh.empty()) return {};
    UnionFind uf(mesh.face_count());
    std::unordered_map<int64_t, int> edge_owner;
    edge_owner.reserve(mesh.face_count() * 3);
    const int64_t nv = static_cast<int64_t>(mesh.vertices.size());
    for (size_t fi = 0; fi < mesh.face_count(); ++fi) {
        const auto& f = mesh.faces[fi];
        for (int e = 0; e < 3; ++e) {
            const int a = std::min(f[e], f[(e + 1) % 3]);
            const int b = std::max(f[e], f[(e + 1) % 3]);
            const int64_t key = a * nv + b;
            auto [it, inserted] = edge_owner.try_emplace(key, static_cast<int>(fi));
            if (!inserted) uf.unite(it->second, static_cast<int>(fi));
        }
    }
    std::unordered_map<int, int64_t> sizes;
    for (size_t fi = 0; fi < mesh.face_count(); ++fi) ++sizes[uf.find(static_cast<int>(fi))];
    std::vector<int64_t> counts;
    counts.reserve(sizes.size());
    for (const auto& [root, count] : sizes) counts.push_back(count);
    std::sort(counts.rbegin(), counts.rend());
    return counts;
}

void save_obj(const std::string& path, const TriMesh& mesh) {
    std::ofstream out(path);
    require(out.good(), "cannot open for writing: " + path);
    out.precision(9);
    for (const auto& v : mesh.vertices) out << "v " << v.x << ' ' << v.y << ' ' << v.z << '\n';
    for (const auto& f : mesh.faces)
        out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
    require(out.good(), "write failed: " + path);
}

TriMesh load_obj(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open: " + path);
    TriMesh mesh;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string tag;
        if (!(ss >> tag)) continue;
        if (tag == "v") {
            Vec3 v;
            require(static_cast<bool>(ss >> v.x >> v.y >> v.z), "malformed v record: " + line);
            mesh.vertices.push_back(v);
        } else if (tag == "f") {
            std::vector<int> ids;
            std::string tok;
            while (ss >> tok) {
                // accept i, i/j, i/j/k; only the vertex index matters
                const size_t slash = tok.find('/');
                const std::string head = slash == std::string::npos ? tok : tok.substr(0, slash);
                int idx = 0;
                try {
                    idx = std::stoi(head);
                } catch (const std::exception&) {
                    fail("malformed f record: " + line);
                }
                require(idx != 0, "malformed f record: zero index");
                if (idx < 0) idx = static_cast<int>(mesh.vertices.size()) + idx + 1;
                require(idx >= 1 && idx <= static_cast<int>(mesh.vertices.size()),
                        "f record index out of range: " + line);
                ids.push_back(idx - 1);
            }
            require(ids.size() >= 3, "f record needs at least 3 vertices: " + line);
            for (size_t i = 1; i + 1 < ids.size(); ++i) {
                if (ids[0] == ids[i] || ids[i] == ids[i + 1] || ids[0] == ids[i + 1])
                    continue;  // drop degenerate fan triangles
                mesh.faces.push_back({ids[0], static_cast<int>(ids[i]), static_cast<int>(ids[i + 1])});
            }
        }
        // all other records ignored
    }
    mesh.validate();
    return mesh;
}

}  // namespace octarl
