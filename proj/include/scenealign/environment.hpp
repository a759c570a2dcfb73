// Navigability raster and the environment-side feasibility checks: point and
// trajectory violation tests, the 360-ray obstacle distance array, and
// per-agent pre-labeling of anchor validity.

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "scenealign/anchors.hpp"
#include "scenealign/geometry.hpp"

namespace scenealign {

/// Boolean occupancy grid in world meters. Cell (ix, iy) spans
/// [origin + ix*resolution, origin + (ix+1)*resolution) along x and the
/// analogous interval along y; iy counts upward (+y). Points outside the
/// grid are non-navigable.
struct NavigabilityMap {
    int width = 0;   // cells along x
    int height = 0;  // cells along y
    std::vector<std::uint8_t> cells;  // row-major by iy; 1 = navigable
    Point2 origin;                    // world position of cell (0,0) corner
    double resolution = 1.0;          // meters per cell
    std::string scene_id;

    bool navigable_cell(int ix, int iy) const {
        if (ix < 0 || iy < 0 || ix >= width || iy >= height) return false;
        return cells[static_cast<std::size_t>(iy) * width + ix] != 0;
    }
    std::uint8_t& cell(int ix, int iy) {
        return cells[static_cast<std::size_t>(iy) * width + ix];
    }

    static NavigabilityMap uniform(int width, int height, Point2 origin,
                                   double resolution, bool navigable = true);
};

/// Distances to the nearest obstacle along 360 one-degree bearings relative
/// to the agent heading, capped at max_range.
struct DistanceArray {
    std::array<double, 360> distances{};
    double max_range = 10.0;
    bool degenerate = false;  // pose position itself non-navigable
};

bool is_navigable(const NavigabilityMap& map, const Point2& p);

/// True iff any timestep point of the trajectory is non-navigable.
bool trajectory_violates(const NavigabilityMap& map, const Trajectory& traj);

/// Ray-march per bearing at step resolution/2 until the first non-navigable
/// cell or max_range. A non-navigable pose position yields an all-zero array
/// with the degenerate flag set.
DistanceArray distance_array(const NavigabilityMap& map, const AgentPose& pose,
                             double max_range = 10.0);

/// mask[k] = true iff anchor k, materialized at the pose, stays navigable.
std::vector<bool> prelabel_anchor_validity(const NavigabilityMap& map,
                                           const AgentPose& pose,
                                           const AnchorDatabase& db);

}  // namespace scenealign
