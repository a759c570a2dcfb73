#include "scenealign/environment.hpp"

#include <cmath>
#include <stdexcept>

namespace scenealign {

NavigabilityMap NavigabilityMap::uniform(int width, int height, Point2 origin,
                                         double resolution, bool navigable) {
    if (width < 1 || height < 1 || resolution <= 0.0) {
        throw std::invalid_argument("NavigabilityMap::uniform: bad dimensions");
    }
    NavigabilityMap map;
    map.width = width;
    map.height = height;
    map.origin = origin;
    map.resolution = resolution;
    map.cells.assign(static_cast<std::size_t>(width) * height, navigable ? 1 : 0);
    return map;
}

bool is_navigable(const NavigabilityMap& map, const Point2& p) {
    const int ix = static_cast<int>(std::floor((p.x - map.origin.x) / map.resolution));
    const int iy = static_cast<int>(std::floor((p.y - map.origin.y) / map.resolution));
    return map.navigable_cell(ix, iy);
}

bool trajectory_violates(const NavigabilityMap& map, const Trajectory& traj) {
    for (const auto& p : traj.points) {
        if (!is_navigable(map, p)) return true;
    }
    return false;
}

DistanceArray distance_array(const NavigabilityMap& map, const AgentPose& pose,
                             double max_range) {
    DistanceArray out;
    out.max_range = max_range;
    if (!is_navigable(map, pose.position)) {
        out.degenerate = true;
        return out;  // zeros
    }
    const double step = map.resolution / 2.0;
    for (int deg = 0; deg < 360; ++deg) {
        const double bearing = pose.heading + deg * M_PI / 180.0;
        const double cx = std::cos(bearing);
        const double cy = std::sin(bearing);
        double hit = max_range;
        for (double r = step; r <= max_range; r += step) {
            const Point2 probe{pose.position.x + r * cx, pose.position.y + r * cy};
            if (!is_navigable(map, probe)) {
                hit = r;
                break;
            }
        }
        out.distances[static_cast<std::size_t>(deg)] = hit;
    }
    return out;
}

std::vector<bool> prelabel_anchor_validity(const NavigabilityMap& map,
                                           const AgentPose& pose,
                                           const AnchorDatabase& db) {
    std::vector<bool> mask(db.anchors.size());
    for (std::size_t k = 0; k < db.anchors.size(); ++k) {
        mask[k] = !trajectory_violates(map, from_agent_frame(db.anchors[k], pose));
    }
    return mask;
}

}  // namespace scenealign
