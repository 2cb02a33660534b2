#include <doctest.h>

#include <cmath>
#include <fstream>

#include "octarl/critics.hpp"
#include "octarl/external_critic.hpp"
#include "octarl/shapes.hpp"
#include "test_support.hpp"

using namespace octarl;
using octarl::test::TempDir;

namespace {

VoxelGrid shape(ShapeKind kind, std::map<std::string, double> params = {}, int side = 64) {
    ShapeSpec spec;
    spec.kind = kind;
    spec.params = std::move(params);
    return gen_primitive(spec, side, side, side);
}

VoxelGrid grounded_cube(int side = 64) {
    const double e = 3.0 * side / 8.0;
    const double o = (side - e) / 2.0;
    return shape(ShapeKind::Box,
                 {{"ex", e}, {"ey", e}, {"ez", e}, {"x0", o}, {"y0", o}, {"z0", 0}}, side);
}

TriMesh merged_tetrahedra() {
    TriMesh m;
    auto add_tet = [&m](Vec3 a, Vec3 b, Vec3 c, Vec3 d) {
        const int base = static_cast<int>(m.vertices.size());
        m.vertices.insert(m.vertices.end(), {a, b, c, d});
        m.faces.push_back({base + 0, base + 2, base + 1});
        m.faces.push_back({base + 0, base + 1, base + 3});
        m.faces.push_back({base + 1, base + 2, base + 3});
        m.faces.push_back({base + 2, base + 0, base + 3});
    };
    add_tet({0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1});
    add_tet({0.25, 0.25, 0.25}, {1.25, 0.25, 0.25}, {0.25, 1.25, 0.25}, {0.25, 0.25, 1.25});
    return m;
}

}  // namespace

TEST_CASE("a cube resting on the ground is perfectly stable") {
    CHECK(r_stab(extract_surface(grounded_cube())) == doctest::Approx(1.0));
}

namespace {

// Closed axis-aligned box with outward winding.
void add_closed_box(TriMesh& m, Vec3 lo, Vec3 hi) {
    const int b = static_cast<int>(m.vertices.size());
    m.vertices.insert(m.vertices.end(),
                      {{lo.x, lo.y, lo.z},
                       {hi.x, lo.y, lo.z},
                       {hi.x, hi.y, lo.z},
                       {lo.x, hi.y, lo.z},
                       {lo.x, lo.y, hi.z},
                       {hi.x, lo.y, hi.z},
                       {hi.x, hi.y, hi.z},
                       {lo.x, hi.y, hi.z}});
    const int quads[6][4] = {{0, 3, 2, 1}, {4, 5, 6, 7}, {0, 1, 5, 4},
                             {3, 7, 6, 2}, {0, 4, 7, 3}, {1, 2, 6, 5}};
    for (const auto& q : quads) {
        m.faces.push_back({b + q[0], b + q[1], b + q[2]});
        m.faces.push_back({b + q[0], b + q[2], b + q[3]});
    }
}

}  // namespace

TEST_CASE("r_stab follows the 1 - d/L falloff with engineered overhangs") {
    // Pedestal bottom [0.4,0.6]^2 at z=0 fixes the support hull: L = 0.2*sqrt(2).
    // A mass box of twice the pedestal's volume placed at a chosen x center
    // puts the combined center of mass exactly where we want it.
    const double L = std::hypot(0.2, 0.2);
    auto overhang = [](double mass_center_x) {
        TriMesh m;
        add_closed_box(m, {0.4, 0.4, 0.0}, {0.6, 0.6, 0.1});   // volume 0.004, center x 0.5
        add_closed_box(m, {mass_center_x - 0.2, 0.4, 0.1},
                       {mass_center_x + 0.2, 0.6, 0.2});       // volume 0.008
        return m;
    };
    // com_x = (0.004*0.5 + 0.008*x_m) / 0.012
    const TriMesh near = overhang(0.8);   // com_x = 0.7 -> d = 0.1
    CHECK(r_stab(near) == doctest::Approx(1.0 - 0.1 / L).epsilon(1e-9));
    CHECK(r_stab(near) == doctest::Approx(0.647).epsilon(1e-2));

    const TriMesh far = overhang(1.25);   // com_x = 1.0 -> d = 0.4, clamped
    CHECK(r_stab(far) == doctest::Approx(0.0));
}

TEST_CASE("overhang scores strictly lower stability than its centered twin") {
    const VoxelGrid leaning = shape(ShapeKind::Overhang);
    const VoxelGrid centered = shape(ShapeKind::Overhang, {{"offset", 0.0}});
    const double lean = r_stab(extract_surface(leaning));
    const double center = r_stab(extract_surface(centered));
    CHECK(center == doctest::Approx(1.0));
    CHECK(lean < center);
    CHECK(lean >= 0.0);

    // COM projection really is outside the support hull
    const TriMesh m = extract_surface(leaning);
    const Vec3 com = center_of_mass(m);
    const Hull2D hull = convex_hull_2d(support_footprint(m));
    CHECK(point_hull_distance({com.x, com.y}, hull) > 0.0);
}

TEST_CASE("r_rig is the face fraction of the largest component") {
    CHECK(r_rig(extract_surface(grounded_cube())) == doctest::Approx(1.0));
    CHECK(r_rig(extract_surface(shape(ShapeKind::FloatingPair))) == doctest::Approx(0.5));

    // components of 60 and 40 faces -> 0.6; a 5x3 wall has 2*(15+15+16) faces
    // so build from explicit disjoint boxes instead
    VoxelGrid g(32, 32, 32);
    for (int x = 0; x < 4; ++x)
        for (int y = 0; y < 4; ++y) g.set(x, y, 0, true);      // 4x4x1 slab: 66 tris... measure
    for (int x = 10; x < 12; ++x) g.set(x, 10, 10, true);      // 2x1x1 bar: 20 tris
    const TriMesh m = extract_surface(g);
    const auto comps = connected_components(m);
    REQUIRE(comps.size() == 2);
    CHECK(r_rig(m) == doctest::Approx(static_cast<double>(comps[0]) /
                                      static_cast<double>(m.face_count())));
}

TEST_CASE("r_int canon") {
    CHECK(r_int(extract_surface(grounded_cube())) == doctest::Approx(1.0));
    CHECK(r_int(TriMesh{}) == doctest::Approx(1.0));  // empty mesh convention

    const TriMesh tets = merged_tetrahedra();
    const double pairs = static_cast<double>(intersecting_pairs(tets, false));
    CHECK(r_int(tets) == doctest::Approx(1.0 - std::min(1.0, 2.0 * pairs / 8.0)));
    CHECK(r_int(tets) < 1.0);
}

TEST_CASE("pathological soup with 2P >= F clamps r_int to zero") {
    // Many triangles through a common core region: P grows quadratically.
    TriMesh m;
    Rng rng(70);
    for (int f = 0; f < 40; ++f) {
        const int i = static_cast<int>(m.vertices.size());
        m.vertices.push_back({rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), -1.0});
        m.vertices.push_back({rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), 1.0});
        m.vertices.push_back({rng.uniform(1.9, 2.1), rng.uniform(-0.1, 0.1), 0.0});
        m.faces.push_back({i, i + 1, i + 2});
    }
    CHECK(2 * intersecting_pairs(m, true) >= static_cast<int64_t>(m.face_count()));
    CHECK(r_int(m) == 0.0);
}

TEST_CASE("physical_score composes its three terms") {
    const TriMesh cube = extract_surface(grounded_cube());
    PhysicalWeights uniform;
    CHECK(physical_score(cube, uniform) == doctest::Approx(1.0));

    const TriMesh pair = extract_surface(shape(ShapeKind::FloatingPair));
    const double expect =
        (r_stab(pair) + 0.5 + 1.0) / 3.0;  // rig = 0.5 exactly, int = 1 on voxel surfaces
    CHECK(physical_score(pair, uniform) == doctest::Approx(expect));

    PhysicalWeights stab_only{1.0, 0.0, 0.0};
    CHECK(physical_score(pair, stab_only) == doctest::Approx(r_stab(pair)));
}

TEST_CASE("physical_score is monotone in each term") {
    // Compare a clean connected solid against a fragmented one, holding the
    // weights fixed: the fragmented one cannot score higher on the rig term.
    const TriMesh whole = extract_surface(grounded_cube());
    const TriMesh split = extract_surface(shape(ShapeKind::FloatingPair));
    PhysicalWeights rig_only{0.0, 1.0, 0.0};
    CHECK(physical_score(whole, rig_only) > physical_score(split, rig_only));
}

TEST_CASE("aggregate applies Eq-style weighted mixing") {
    RewardBreakdown b;
    b.r_h = 0.8;
    b.r_v = 0.6;
    b.r_x = 0.4;
    b.r_p = 0.2;
    CriticWeights w;
    CHECK(aggregate(b, w) == doctest::Approx(0.5));

    CriticWeights h_only{1, 0, 0, 0};
    CHECK(aggregate(b, h_only) == doctest::Approx(0.8));

    b.r_h = b.r_v = b.r_x = b.r_p = 1.0;
    CHECK(aggregate(b, w) == doctest::Approx(1.0));

    b.r_h = 1.5;
    CHECK_THROWS_AS(aggregate(b, w), Error);
}

TEST_CASE("aggregate is linear in each component") {
    Rng rng(71);
    for (int trial = 0; trial < 100; ++trial) {
        CriticWeights w{rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
        w.normalize();
        RewardBreakdown b{rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform(), 0};
        const double base = aggregate(b, w);
        RewardBreakdown b2 = b;
        const double bump = std::min(0.1, 1.0 - b.r_x);
        b2.r_x += bump;
        CHECK(aggregate(b2, w) == doctest::Approx(base + w.x * bump));
    }
}

TEST_CASE("oracle alignment critic scores IoU against its template") {
    const VoxelGrid box = grounded_cube();
    auto critic = make_oracle_alignment_critic(std::map<int, VoxelGrid>{{0, box}});
    const TriMesh mesh = extract_surface(box);
    CHECK(critic->score({&box, &mesh, 0}) == doctest::Approx(1.0));

    const VoxelGrid empty(64, 64, 64);
    const TriMesh none;
    CHECK(critic->score({&empty, &none, 0}) == doctest::Approx(0.0));
    CHECK_THROWS_AS(critic->score({&empty, &none, 3}), Error);  // unknown prompt
}

TEST_CASE("builtin stub critics") {
    const VoxelGrid g = grounded_cube();  // fill = 24^3 / 64^3
    const TriMesh m = extract_surface(g);
    const Artifact art{&g, &m, 0};

    CHECK(make_constant_critic(0.7)->score(art) == doctest::Approx(0.7));

    auto band = make_occupancy_band_critic(0.01, 0.3);
    CHECK(band->score(art) == doctest::Approx(1.0));  // fill ~0.0527 inside band
    const VoxelGrid empty(64, 64, 64);
    const TriMesh none;
    CHECK(make_occupancy_band_critic(0.1, 0.3)->score({&empty, &none, 0}) == doctest::Approx(0.0));

    // linear falloff below the band
    auto narrow = make_occupancy_band_critic(0.2, 0.3);
    const double fill = g.fill_fraction();
    CHECK(narrow->score(art) == doctest::Approx(fill / 0.2));

    auto noise = make_seeded_hash_noise_critic(0.25, 7);
    const double n1 = noise->score(art);
    CHECK(n1 == noise->score(art));  // deterministic
    CHECK(n1 >= 0.25);               // 0.5 +- 0.25
    CHECK(n1 <= 0.75);
    auto noise2 = make_seeded_hash_noise_critic(0.25, 8);
    CHECK(noise->score(art) != noise2->score(art));
}

TEST_CASE("critic stack clamps and aggregates; scores stay in [0,1] on a fuzz corpus") {
    CriticStack stack;
    stack.weights = CriticWeights{};
    stack.h = make_constant_critic(1.0);
    stack.v = make_occupancy_band_critic(0.05, 0.5);
    stack.x = make_seeded_hash_noise_critic(0.5, 3);
    stack.p = make_physical_critic(PhysicalWeights{});
    for (const auto& spec : standard_corpus(10, 32, 72)) {
        const VoxelGrid g = gen_primitive(spec, 32, 32, 32);
        const TriMesh m = extract_surface(g);
        const RewardBreakdown b = stack.score_all({&g, &m, 0});
        for (double r : {b.r_h, b.r_v, b.r_x, b.r_p, b.aggregate}) {
            CHECK(r >= 0.0);
            CHECK(r <= 1.0);
        }
    }
}

TEST_CASE("physical critic treats an empty artifact as worthless, not fatal") {
    const VoxelGrid empty(16, 16, 16);
    const TriMesh none;
    CHECK(make_physical_critic(PhysicalWeights{})->score({&empty, &none, 0}) == 0.0);
}

TEST_CASE("external critic speaks line-delimited JSON with a child process") {
    TempDir tmp("external");
    // Child: reads requests, scores by prompt id; proves the request paths
    // exist and parse.
    const std::string script = tmp.file("critic.py");
    {
        std::ofstream out(script);
        out << "import json, sys, os\n"
               "for line in sys.stdin:\n"
               "    req = json.loads(line)\n"
               "    assert os.path.exists(req['grid'])\n"
               "    assert os.path.exists(req['mesh'])\n"
               "    print(json.dumps({'score': 0.1 * req['prompt_id']}), flush=True)\n";
    }
    auto critic = make_external_critic({"python3", script}, tmp.path());
    const VoxelGrid g = grounded_cube(32);
    const TriMesh m = extract_surface(g);
    CHECK(critic->score({&g, &m, 3}) == doctest::Approx(0.3));
    CHECK(critic->score({&g, &m, 5}) == doctest::Approx(0.5));  // serialized second request
}

TEST_CASE("external critic failure is a domain error") {
    auto broken = make_external_critic({"false"}, "/tmp");
    const VoxelGrid g = grounded_cube(32);
    const TriMesh m = extract_surface(g);
    CHECK_THROWS_AS(broken->score({&g, &m, 0}), Error);
}

TEST_CASE("weights must normalize") {
    CriticWeights w{0, 0, 0, 0};
    CHECK_THROWS_AS(w.normalize(), Error);
    CriticWeights w2{2, 1, 1, 0};
    w2.normalize();
    CHECK(w2.h == doctest::Approx(0.5));
    PhysicalWeights l{-1, 1, 1};
    CHECK_THROWS_AS(l.normalize(), Error);
}
