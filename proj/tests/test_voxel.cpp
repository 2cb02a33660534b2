#include <doctest.h>

#include <cmath>
#include <fstream>

#include "octarl/voxel_grid.hpp"
#include "test_support.hpp"

using namespace octarl;
using octarl::test::TempDir;

namespace {

VoxelGrid make(ShapeKind kind, std::map<std::string, double> params = {}, int side = 64) {
    ShapeSpec spec;
    spec.kind = kind;
    spec.params = std::move(params);
    return gen_primitive(spec, side, side, side);
}

}  // namespace

TEST_CASE("sphere occupancy matches the cell-center enumeration oracle") {
    const VoxelGrid g = make(ShapeKind::Sphere, {{"radius", 24.0}});
    // Oracle: enumerate cells whose center lies inside the sphere.
    int64_t expected = 0;
    for (int z = 0; z < 64; ++z)
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 64; ++x) {
                const double dx = x + 0.5 - 32.0, dy = y + 0.5 - 32.0, dz = z + 0.5 - 32.0;
                if (dx * dx + dy * dy + dz * dz <= 24.0 * 24.0) {
                    ++expected;
                    CHECK(g.at(x, y, z));
                }
            }
    CHECK(g.occupied_count() == expected);
    const double analytic = 4.0 / 3.0 * 3.14159265358979 * 24 * 24 * 24;  // ~57906
    CHECK(std::abs(static_cast<double>(expected) - analytic) / analytic < 0.01);
}

TEST_CASE("zero-extent box is empty") {
    const VoxelGrid g = make(ShapeKind::Box, {{"ex", 0.0}, {"ey", 0.0}, {"ez", 0.0}});
    CHECK(g.occupied_count() == 0);
}

TEST_CASE("two_blobs with gap 4 has exactly two voxel components") {
    const VoxelGrid g = make(ShapeKind::TwoBlobs, {{"gap", 4.0}});
    CHECK(octarl::test::count_voxel_components(g) == 2);
}

TEST_CASE("floating_pair has exactly two disjoint components") {
    const VoxelGrid g = make(ShapeKind::FloatingPair);
    CHECK(octarl::test::count_voxel_components(g) == 2);
}

TEST_CASE("gen_primitive is a pure function of spec and dims") {
    for (const auto& spec : standard_corpus(10, 64, 7)) {
        const VoxelGrid a = gen_primitive(spec, 64, 64, 64);
        const VoxelGrid b = gen_primitive(spec, 64, 64, 64);
        CHECK(a == b);
    }
}

TEST_CASE("shape exceeding bounds is rejected") {
    CHECK_THROWS_AS(make(ShapeKind::Sphere, {{"radius", 40.0}}), Error);
}

TEST_CASE("iou identities") {
    const VoxelGrid g = make(ShapeKind::Sphere, {{"radius", 12.0}});
    CHECK(iou(g, g) == doctest::Approx(1.0));

    VoxelGrid full(16, 16, 16), empty(16, 16, 16);
    for (int z = 0; z < 16; ++z)
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 16; ++x) full.set(x, y, z, true);
    CHECK(iou(full, empty) == 0.0);
    CHECK(iou(empty, empty) == 1.0);  // empty-vs-empty convention
}

TEST_CASE("iou of a shifted box is 1/3") {
    const VoxelGrid a = make(ShapeKind::Box, {{"ex", 32}, {"ey", 32}, {"ez", 32},
                                              {"x0", 0}, {"y0", 0}, {"z0", 0}});
    const VoxelGrid b = make(ShapeKind::Box, {{"ex", 32}, {"ey", 32}, {"ez", 32},
                                              {"x0", 16}, {"y0", 0}, {"z0", 0}});
    CHECK(iou(a, b) == doctest::Approx(16.0 / 48.0).epsilon(1e-12));
}

TEST_CASE("iou is symmetric and zero for disjoint grids") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        VoxelGrid a(16, 16, 16), b(16, 16, 16);
        for (int i = 0; i < 200; ++i) {
            a.set(static_cast<int>(rng.uniform_index(16)), static_cast<int>(rng.uniform_index(16)),
                  static_cast<int>(rng.uniform_index(8)), true);
            b.set(static_cast<int>(rng.uniform_index(16)), static_cast<int>(rng.uniform_index(16)),
                  8 + static_cast<int>(rng.uniform_index(8)), true);
        }
        CHECK(iou(a, b) == iou(b, a));
        CHECK(iou(a, b) == 0.0);  // z-ranges disjoint by construction
    }
}

TEST_CASE("iou rejects dimension mismatch") {
    VoxelGrid a(16, 16, 16), b(16, 16, 32);
    CHECK_THROWS_AS(iou(a, b), Error);
}

TEST_CASE("grid file round-trip is bit exact") {
    TempDir tmp("grid_io");
    for (const auto& spec : standard_corpus(8, 32, 3)) {
        const VoxelGrid g = gen_primitive(spec, 32, 32, 32);
        save_grid(tmp.file("g.crvx"), g);
        CHECK(load_grid(tmp.file("g.crvx")) == g);
    }
}

TEST_CASE("all-occupied 4x4x4 grid serializes to 8 bytes of 0xFF") {
    TempDir tmp("grid_ff");
    VoxelGrid g(4, 4, 4);
    for (int z = 0; z < 4; ++z)
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) g.set(x, y, z, true);
    const std::string path = tmp.file("full.crvx");
    save_grid(path, g);
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    REQUIRE(bytes.size() == 4 + 4 + 12 + 8);  // magic + version + dims + payload
    for (size_t i = bytes.size() - 8; i < bytes.size(); ++i)
        CHECK(static_cast<unsigned char>(bytes[i]) == 0xFF);
}

TEST_CASE("grid loader rejects bad magic and truncation") {
    TempDir tmp("grid_bad");
    {
        std::ofstream out(tmp.file("bad.crvx"), std::ios::binary);
        out << "XXXXjunkjunkjunk";
    }
    CHECK_THROWS_WITH_AS(load_grid(tmp.file("bad.crvx")), doctest::Contains("bad-magic"), Error);

    VoxelGrid g(8, 8, 8);
    g.set(1, 2, 3, true);
    save_grid(tmp.file("ok.crvx"), g);
    // Truncate the payload.
    std::ifstream in(tmp.file("ok.crvx"), std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    {
        std::ofstream out(tmp.file("short.crvx"), std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 10));
    }
    CHECK_THROWS_WITH_AS(load_grid(tmp.file("short.crvx")), doctest::Contains("truncated"), Error);

    // Oversized dims in the header.
    {
        std::ofstream out(tmp.file("huge.crvx"), std::ios::binary);
        out << "CRVX";
        const uint32_t vals[4] = {1, 0xFFFFFFFFu, 64, 64};
        out.write(reinterpret_cast<const char*>(vals), sizeof(vals));
    }
    CHECK_THROWS_WITH_AS(load_grid(tmp.file("huge.crvx")), doctest::Contains("dims-overflow"),
                         Error);
}

TEST_CASE("grid dims must be multiples of 4") {
    CHECK_THROWS_AS(VoxelGrid(10, 16, 16), Error);
    CHECK_THROWS_AS(VoxelGrid(0, 16, 16), Error);
}
