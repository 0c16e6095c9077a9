#include "doctest.h"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <vector>

#include "railsim/route.hpp"
#include "railsim/scene.hpp"

using namespace railsim;

namespace {

Railroad straight_railroad(int n_points) {
    std::vector<Vec3> pts;
    for (int i = 0; i < n_points; ++i) pts.push_back(Vec3{(double)i, 0.0, 0.0});
    return make_railroad(route_from_points(pts, 1.0), 4.0);
}

HeightMap flat_map(double half_extent, double height = 0.0) {
    HeightMap map;
    map.origin_e = -half_extent;
    map.origin_n = -half_extent;
    map.spacing = 4.0;
    map.rows = (int)(half_extent) + 300;
    map.cols = map.rows;
    map.heights.assign((std::size_t)map.rows * map.cols, height);
    return map;
}

double nearest_track_distance(const Railroad& rr, double e, double n) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < rr.track_count(); ++t)
        for (const Vec3& p : rr.track(t).points)
            best = std::min(best, std::hypot(p.y - e, p.x - n));
    return best;
}

}  // namespace

TEST_SUITE_BEGIN("scene");

TEST_CASE("material table invariants") {
    for (int i = 0; i < kSemanticClassCount; ++i) {
        const Material m = material_for((SemanticClass)i);
        CHECK(m.rho_d >= 0.0);
        CHECK(m.rho_s >= 0.0);
        CHECK(m.rho_d + m.rho_s <= 1.0);
        CHECK(m.theta_max > 0.0);
        CHECK(m.theta_max <= M_PI / 2.0 + 1e-12);
        CHECK(m.roughness >= 0.0);
        CHECK(m.roughness <= 1.0);
    }
    CHECK(material_for(SemanticClass::RailTrack).rho_s >
          material_for(SemanticClass::RailTrack).rho_d);
    CHECK(material_for(SemanticClass::Terrain).theta_max
          == doctest::Approx(M_PI / 2.0));
}

TEST_CASE("class names round trip and ids are stable") {
    CHECK((int)SemanticClass::Terrain == 0);
    CHECK((int)SemanticClass::RailTrack == 2);
    CHECK((int)SemanticClass::Background == 12);
    for (int i = 0; i < kSemanticClassCount; ++i) {
        const SemanticClass c = (SemanticClass)i;
        CHECK(semantic_class_from_name(semantic_class_name(c)) == c);
    }
    CHECK_THROWS(semantic_class_from_name("NotAClass"));
}

TEST_CASE("zero densities produce no placements") {
    const Railroad rr = straight_railroad(500);
    const HeightMap map = flat_map(200.0);
    SpawnParams sp;
    sp.tree.density_per_km = 0.0;
    sp.rock.density_per_km = 0.0;
    sp.building.density_per_km = 0.0;
    sp.fence.density_per_km = 0.0;
    CHECK(generate_spawn_points(rr, map, sp).empty());
}

TEST_CASE("placements respect footprints, clearances and the terrain height") {
    const Railroad rr = straight_railroad(1200);
    HeightMap map = flat_map(400.0, 7.5);
    SpawnParams sp;
    sp.seed = 13;
    const std::vector<Placement> placements = generate_spawn_points(rr, map, sp);
    REQUIRE(placements.size() > 30);

    for (std::size_t i = 0; i < placements.size(); ++i) {
        for (std::size_t j = i + 1; j < placements.size(); ++j) {
            const double d = std::hypot(
                placements[i].position.x - placements[j].position.x,
                placements[i].position.y - placements[j].position.y);
            CHECK(d >= placements[i].footprint_radius +
                           placements[j].footprint_radius - 1e-9);
        }
    }
    for (const Placement& p : placements) {
        const double d =
            nearest_track_distance(rr, p.position.x, p.position.y);
        double clearance = 0.0;
        switch (p.cls) {
            case SemanticClass::Tree: clearance = sp.tree.track_clearance; break;
            case SemanticClass::Rock: clearance = sp.rock.track_clearance; break;
            case SemanticClass::Building:
                clearance = sp.building.track_clearance;
                break;
            case SemanticClass::Fence:
                clearance = sp.fence.track_clearance;
                break;
            default: FAIL("unexpected placement class");
        }
        CHECK(d >= std::max(clearance, sp.band_inner) - 1e-9);
        CHECK(d <= sp.band_outer + 1e-9);
        CHECK(p.position.z == doctest::Approx(7.5));
    }

    // determinism
    const std::vector<Placement> again = generate_spawn_points(rr, map, sp);
    REQUIRE(again.size() == placements.size());
    for (std::size_t i = 0; i < placements.size(); ++i) {
        CHECK(again[i].position.x == placements[i].position.x);
        CHECK(again[i].yaw == placements[i].yaw);
        CHECK(again[i].size_class == placements[i].size_class);
    }
}

TEST_CASE("rail pair separation equals the gauge on straights") {
    const Railroad rr = straight_railroad(300);
    TrackGeomParams gp;
    const std::vector<SceneObject> objs = build_track_geometry(rr, gp);

    std::vector<const SceneObject*> rails;
    for (const SceneObject& o : objs)
        if (o.cls == SemanticClass::RailTrack) rails.push_back(&o);
    REQUIRE(rails.size() == 2);

    // straight north track at easting 0: mean easting of each rail's vertices
    double mean[2] = {0, 0};
    for (int k = 0; k < 2; ++k) {
        double sum = 0.0;
        std::size_t cnt = 0;
        for (const Triangle& t : rails[k]->triangles) {
            sum += t.a.x + t.b.x + t.c.x;
            cnt += 3;
        }
        mean[k] = sum / (double)cnt;
    }
    CHECK(std::abs(std::abs(mean[0] - mean[1]) - gp.gauge) < 1e-6);
}

TEST_CASE("sleeper count tracks the configured pitch") {
    const Railroad rr = straight_railroad(300);  // 299 m long
    TrackGeomParams gp;
    const std::vector<SceneObject> objs = build_track_geometry(rr, gp);
    const SceneObject* trackbed = nullptr;
    for (const SceneObject& o : objs)
        if (o.cls == SemanticClass::Trackbed) trackbed = &o;
    REQUIRE(trackbed != nullptr);

    // each sleeper box = 12 triangles; the ballast ribbon adds 6 per segment
    const std::size_t n = rr.main.points.size();
    const std::size_t ballast_tris = (n - 1) * 6;
    const std::size_t sleeper_tris = trackbed->triangles.size() - ballast_tris;
    const long sleepers = (long)(sleeper_tris / 12);
    const long expected = (long)std::floor(299.0 / gp.sleeper_pitch);
    CHECK(std::abs(sleepers - expected) <= 1);
}

TEST_CASE("tunnel shells enclose every tunnel centerline point") {
    std::vector<Vec3> pts;
    for (int i = 0; i < 500; ++i) pts.push_back(Vec3{(double)i, 0.0, 0.0});
    Route route = route_from_points(pts, 1.0);
    Block b0, b1, b2;
    b0.type = BlockType::Straight;
    b0.start_index = 0;
    b0.end_index = 199;
    b1.type = BlockType::Tunnel;
    b1.start_index = 200;
    b1.end_index = 300;
    b2.type = BlockType::Straight;
    b2.start_index = 301;
    b2.end_index = 499;
    route.blocks = {b0, b1, b2};
    const Railroad rr = make_railroad(route, 4.0);

    TrackGeomParams gp;
    const std::vector<SceneObject> objs = build_track_geometry(rr, gp);
    std::vector<const SceneObject*> shells;
    for (const SceneObject& o : objs)
        if (o.cls == SemanticClass::Tunnel) shells.push_back(&o);
    REQUIRE(shells.size() == 1);

    for (std::size_t i = b1.start_index; i <= b1.end_index; ++i) {
        const Vec3 enu{rr.main.points[i].y, rr.main.points[i].x,
                       -rr.main.points[i].z};
        bool inside = false;
        for (const SceneObject* s : shells)
            inside = inside || s->bounds.contains(enu);
        CHECK(inside);
    }
}

TEST_CASE("instantiation is deterministic with unique increasing ids") {
    const Railroad rr = straight_railroad(1200);
    const HeightMap map = flat_map(400.0);
    SpawnParams sp;
    sp.seed = 99;
    const std::vector<Placement> placements = generate_spawn_points(rr, map, sp);
    REQUIRE(placements.size() > 10);

    const std::vector<SceneObject> a = instantiate_objects(placements, 5, 100);
    const std::vector<SceneObject> b = instantiate_objects(placements, 5, 100);
    REQUIRE(a.size() == placements.size());

    std::set<int> ids;
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].instance_id == 100 + (int)i);
        ids.insert(a[i].instance_id);
        REQUIRE(a[i].triangles.size() == b[i].triangles.size());
        CHECK(a[i].triangles.front().a.x == b[i].triangles.front().a.x);
        CHECK(!a[i].triangles.empty());
    }
    CHECK(ids.size() == a.size());

    // different seed changes at least one mesh
    const std::vector<SceneObject> c = instantiate_objects(placements, 6, 100);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.size() && !any_diff; ++i)
        any_diff = a[i].triangles.size() != c[i].triangles.size() ||
                   a[i].triangles.front().a.x != c[i].triangles.front().a.x;
    CHECK(any_diff);
}

TEST_CASE("object bounds contain all vertices") {
    const Railroad rr = straight_railroad(1200);
    const HeightMap map = flat_map(400.0);
    SpawnParams sp;
    sp.seed = 3;
    const std::vector<Placement> placements = generate_spawn_points(rr, map, sp);
    const std::vector<SceneObject> objs = instantiate_objects(placements, 1);
    REQUIRE(objs.size() >= 10);
    int checked = 0;
    for (const SceneObject& o : objs) {
        if (checked >= 100) break;
        for (const Triangle& t : o.triangles) {
            CHECK(o.bounds.contains(t.a));
            CHECK(o.bounds.contains(t.b));
            CHECK(o.bounds.contains(t.c));
        }
        ++checked;
    }
}

TEST_CASE("terrain mesh vertices match the height map") {
    HeightMap map;
    map.origin_e = 5.0;
    map.origin_n = -3.0;
    map.spacing = 1.0;
    map.rows = 33;
    map.cols = 41;
    map.heights.resize((std::size_t)map.rows * map.cols);
    for (int r = 0; r < map.rows; ++r)
        for (int c = 0; c < map.cols; ++c)
            map.at(r, c) = 0.1 * r - 0.05 * c;

    const std::vector<SceneObject> chunks = build_terrain_geometry(map, 2, 8);
    REQUIRE(!chunks.empty());
    for (const SceneObject& o : chunks) {
        CHECK(o.cls == SemanticClass::Terrain);
        for (const Triangle& t : o.triangles) {
            for (const Vec3* v : {&t.a, &t.b, &t.c}) {
                const int c = (int)std::lround((v->x - map.origin_e) / map.spacing);
                const int r = (int)std::lround((v->y - map.origin_n) / map.spacing);
                REQUIRE(r >= 0);
                REQUIRE(r < map.rows);
                CHECK(v->z == map.at(r, c));
            }
        }
    }
}

TEST_CASE("scene container round trip") {
    const Railroad rr = straight_railroad(120);
    TrackGeomParams gp;
    Scene scene;
    scene.objects = build_track_geometry(rr, gp);
    REQUIRE(scene.triangle_count() > 100);

    const std::string path = "/tmp/railsim_test_scene.bin";
    write_scene(scene, path);
    const Scene back = read_scene(path);
    REQUIRE(back.objects.size() == scene.objects.size());
    for (std::size_t i = 0; i < scene.objects.size(); ++i) {
        const SceneObject& x = scene.objects[i];
        const SceneObject& y = back.objects[i];
        CHECK(x.instance_id == y.instance_id);
        CHECK(x.cls == y.cls);
        CHECK(x.material.rho_d == y.material.rho_d);
        CHECK(x.material.theta_max == y.material.theta_max);
        REQUIRE(x.triangles.size() == y.triangles.size());
        for (std::size_t k = 0; k < x.triangles.size(); ++k) {
            CHECK(x.triangles[k].a.x == y.triangles[k].a.x);
            CHECK(x.triangles[k].b.y == y.triangles[k].b.y);
            CHECK(x.triangles[k].c.z == y.triangles[k].c.z);
        }
    }
}

TEST_CASE("obj export emits one group per object") {
    const Railroad rr = straight_railroad(50);
    TrackGeomParams gp;
    Scene scene;
    scene.objects = build_track_geometry(rr, gp);
    export_obj(scene, "/tmp/railsim_test_scene.obj",
               "/tmp/railsim_test_scene_meta.json");

    std::ifstream in("/tmp/railsim_test_scene.obj");
    REQUIRE(in.good());
    std::string line;
    std::size_t groups = 0, verts = 0, faces = 0;
    while (std::getline(in, line)) {
        if (line.rfind("o ", 0) == 0) ++groups;
        if (line.rfind("v ", 0) == 0) ++verts;
        if (line.rfind("f ", 0) == 0) ++faces;
    }
    CHECK(groups == scene.objects.size());
    CHECK(faces == scene.triangle_count());
    CHECK(verts == 3 * scene.triangle_count());
}

TEST_SUITE_END();
