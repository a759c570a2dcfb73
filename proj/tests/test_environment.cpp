#include <cmath>
#include <random>

#include "doctest.h"
#include "scenealign/anchors.hpp"
#include "scenealign/data_io.hpp"
#include "scenealign/environment.hpp"
#include "support.hpp"

using namespace scenealign;
using testutil::line_trajectory;

namespace {
constexpr double kPi = 3.14159265358979323846;

/// 20x20 m all-navigable map at 0.25 m resolution, centered on the origin.
NavigabilityMap open_map() {
    return NavigabilityMap::uniform(80, 80, {-10.0, -10.0}, 0.25);
}

/// Same footprint with every cell at x >= wall_x blocked.
NavigabilityMap wall_map(double wall_x) {
    NavigabilityMap map = open_map();
    for (int iy = 0; iy < map.height; ++iy) {
        for (int ix = 0; ix < map.width; ++ix) {
            const double cell_min_x = map.origin.x + ix * map.resolution;
            if (cell_min_x >= wall_x) map.cell(ix, iy) = 0;
        }
    }
    return map;
}
}  // namespace

TEST_SUITE("environment") {

TEST_CASE("navigability follows the grid and its bounds") {
    NavigabilityMap map = NavigabilityMap::uniform(10, 10, {0.0, 0.0}, 1.0);
    CHECK(is_navigable(map, {5.5, 5.5}));
    CHECK_FALSE(is_navigable(map, {-0.5, 5.0}));
    CHECK_FALSE(is_navigable(map, {5.0, 10.5}));

    // Boundary points belong to the cell given by floor((p - origin)/res).
    map.cell(3, 7) = 0;
    CHECK_FALSE(is_navigable(map, {3.0, 7.0}));   // floor(3.0)=3, floor(7.0)=7
    CHECK(is_navigable(map, {2.999, 7.0} ));      // still cell 2
    CHECK(is_navigable(map, {4.0, 7.5}));         // cell 4
    CHECK_FALSE(is_navigable(map, {3.999, 7.999}));
}

TEST_CASE("flipping one cell flips exactly the points inside it") {
    NavigabilityMap map = NavigabilityMap::uniform(8, 8, {-2.0, -2.0}, 0.5);
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::vector<Point2> probes;
    for (int i = 0; i < 200; ++i) probes.push_back({u(rng), u(rng)});

    map.cell(5, 2) = 0;
    for (const Point2& p : probes) {
        const int ix = static_cast<int>(std::floor((p.x - map.origin.x) / map.resolution));
        const int iy = static_cast<int>(std::floor((p.y - map.origin.y) / map.resolution));
        const bool in_flipped = (ix == 5 && iy == 2);
        CHECK(is_navigable(map, p) == !in_flipped);
    }
}

TEST_CASE("trajectory violation is the OR over its points") {
    NavigabilityMap map = open_map();
    const Trajectory inside = line_trajectory({-5, 0}, {0.5, 0}, 12);
    CHECK_FALSE(trajectory_violates(map, inside));

    map.cell(60, 40) = 0;  // cell spanning x in [5, 5.25), y in [0, 0.25)
    const Trajectory through = line_trajectory({4.6, 0.1}, {0.5, 0}, 3);  // hits 5.1
    CHECK(trajectory_violates(map, through));

    std::mt19937 rng(32);
    for (int trial = 0; trial < 40; ++trial) {
        const Trajectory traj = testutil::random_trajectory(rng, 12, 11.0);
        bool oracle = false;
        for (const Point2& p : traj.points) oracle = oracle || !is_navigable(map, p);
        CHECK(trajectory_violates(map, traj) == oracle);
    }
}

TEST_CASE("distance array saturates on an open map") {
    const DistanceArray arr = distance_array(open_map(), {{0, 0}, 0.0}, 4.0);
    CHECK_FALSE(arr.degenerate);
    for (double d : arr.distances) CHECK(d == doctest::Approx(4.0));
}

TEST_CASE("distance array sees a wall at the right range") {
    const NavigabilityMap map = wall_map(2.0);
    const DistanceArray arr = distance_array(map, {{0, 0}, 0.0}, 8.0);
    // Bearing 0 looks straight at the wall two meters ahead; the ray-march
    // quantizes by half a cell (0.125 m).
    CHECK(arr.distances[0] == doctest::Approx(2.0).epsilon(0.13 / 2.0));
    // Looking away from the wall the ray leaves the raster at x = -10 or the
    // side walls; bearing 180 exits the grid after 10 m, capped at 8.
    CHECK(arr.distances[180] == doctest::Approx(8.0));
    // Oblique bearings hit the wall at 2/cos(b).
    for (int b : {10, 20, 30, 45}) {
        const double expect = std::min(8.0, 2.0 / std::cos(b * kPi / 180.0));
        CHECK(std::abs(arr.distances[b] - expect) < 0.2);
    }
    // Every entry respects the cap.
    for (double d : arr.distances) {
        CHECK(d >= 0.0);
        CHECK(d <= 8.0);
    }
}

TEST_CASE("distance array is heading-relative") {
    const NavigabilityMap map = wall_map(2.0);
    const DistanceArray facing = distance_array(map, {{0, 0}, 0.0}, 8.0);
    const DistanceArray rotated = distance_array(map, {{0, 0}, kPi / 2}, 8.0);
    // With the agent facing +y, the wall ahead at bearing 0 moves to bearing
    // 270 (heading + 270 degrees points back at +x).
    for (int b = 0; b < 360; b += 15) {
        const int shifted = (b + 270) % 360;
        CHECK(std::abs(facing.distances[b] - rotated.distances[shifted]) < 0.3);
    }
}

TEST_CASE("distance array from a blocked start degenerates to zeros") {
    NavigabilityMap map = open_map();
    for (auto& c : map.cells) c = 0;
    const DistanceArray arr = distance_array(map, {{0, 0}, 0.0}, 5.0);
    CHECK(arr.degenerate);
    for (double d : arr.distances) CHECK(d == doctest::Approx(0.0));
}

TEST_CASE("anchor pre-labeling matches the per-anchor violation oracle") {
    // Anchor set from straight-line training futures of varying headings, so
    // prototypes fan out in several directions.
    std::vector<Scene> scenes;
    const double drifts[6] = {0.0, 0.3, -0.3, 0.6, -0.6, 1.0};
    for (int g = 0; g < 6; ++g) {
        Scene scene;
        scene.id = "fan" + std::to_string(g);
        scene.agent_ids = {0};
        scene.histories.push_back(line_trajectory({0, 0}, {0.4, 0}, 8));
        scene.futures.push_back(
            line_trajectory({0.4 * 8, drifts[g] * 0.4}, {0.4, drifts[g] * 0.4}, 12));
        scenes.push_back(scene);
    }
    const AnchorDatabase db = build_anchor_db(scenes, 4, 6, 0);

    const NavigabilityMap empty = open_map();
    const AgentPose pose{{0, 0}, 0.0};
    const std::vector<bool> all = prelabel_anchor_validity(empty, pose, db);
    CHECK(std::all_of(all.begin(), all.end(), [](bool b) { return b; }));

    const NavigabilityMap walled = wall_map(1.0);
    const std::vector<bool> mask = prelabel_anchor_validity(walled, pose, db);
    REQUIRE(mask.size() == static_cast<std::size_t>(db.size()));
    bool any_blocked = false;
    for (int a = 0; a < db.size(); ++a) {
        const Trajectory world = from_agent_frame(db.anchors[a], pose);
        CHECK(mask[static_cast<std::size_t>(a)] == !trajectory_violates(walled, world));
        any_blocked = any_blocked || !mask[static_cast<std::size_t>(a)];
    }
    // Anchors reach ~4.8 m ahead; the wall at 1 m must knock some out.
    CHECK(any_blocked);
}

TEST_CASE("map files round-trip through PNG plus sidecar") {
    NavigabilityMap map = NavigabilityMap::uniform(12, 9, {-1.5, 2.0}, 0.5);
    map.scene_id = "roundtrip";
    map.cell(3, 4) = 0;
    map.cell(11, 0) = 0;
    map.cell(0, 8) = 0;

    testutil::ScratchDir dir("env_map_roundtrip");
    const std::string png = dir.file("map.png");
    const std::string json = dir.file("map.json");
    save_navigability_map(map, png, json);
    const NavigabilityMap loaded = load_navigability_map(png, json);

    CHECK(loaded.width == map.width);
    CHECK(loaded.height == map.height);
    CHECK(loaded.origin.x == doctest::Approx(map.origin.x));
    CHECK(loaded.origin.y == doctest::Approx(map.origin.y));
    CHECK(loaded.resolution == doctest::Approx(map.resolution));
    CHECK(loaded.scene_id == map.scene_id);
    CHECK(loaded.cells == map.cells);
}

}  // TEST_SUITE
