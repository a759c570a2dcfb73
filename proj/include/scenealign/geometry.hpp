// Planar trajectory primitives: points, timed trajectories, agent-centric
// frames and the distance queries shared by the rest of the library.

#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace scenealign {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

inline bool is_finite(const Point2& p) {
    return std::isfinite(p.x) && std::isfinite(p.y);
}

inline double distance(const Point2& a, const Point2& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

/// Ordered 2D point sequence sampled at a fixed timestep.
struct Trajectory {
    std::vector<Point2> points;
    double dt = 0.4;  // seconds per step

    Trajectory() = default;
    explicit Trajectory(std::vector<Point2> pts, double step = 0.4)
        : points(std::move(pts)), dt(step) {}

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    const Point2& operator[](std::size_t i) const { return points[i]; }
    Point2& operator[](std::size_t i) { return points[i]; }
    const Point2& back() const { return points.back(); }

    friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Position plus heading, heading normalized to (-pi, pi].
struct AgentPose {
    Point2 position;
    double heading = 0.0;
};

/// A prediction instance: per-agent observed histories, optional ground-truth
/// futures, and a reference to the navigability map of the recording site.
struct Scene {
    std::string id;
    std::vector<int> agent_ids;
    std::vector<Trajectory> histories;
    std::vector<Trajectory> futures;  // empty when unavailable
    std::string map_id;

    std::size_t n_agents() const { return agent_ids.size(); }
    bool has_futures() const { return !futures.empty(); }
};

/// Throws std::invalid_argument if the scene breaks its shape invariants
/// (histories share length and dt, futures share length, ids align).
void validate_scene(const Scene& scene);

/// Wrap an angle into (-pi, pi].
double normalize_angle(double radians);

struct Heading {
    double radians = 0.0;
    bool degenerate = false;  // all points coincide; heading defaulted to 0
};

/// Direction of the displacement between the last point and the most recent
/// point distinct from it. Requires at least two points.
Heading heading_from_history(const Trajectory& history);

/// Pose at the last observed position with heading_from_history.
AgentPose pose_from_history(const Trajectory& history);

/// Translate by -pose.position, then rotate by -pose.heading: the pose
/// position maps to the origin and the heading direction to +x.
Trajectory to_agent_frame(const Trajectory& traj, const AgentPose& pose);

/// Exact inverse of to_agent_frame.
Trajectory from_agent_frame(const Trajectory& traj, const AgentPose& pose);

/// Continue the mean velocity of the last min(3, size-1) displacements for
/// `steps` further steps. Requires at least two points.
Trajectory constant_velocity_extrapolate(const Trajectory& history, int steps);

/// Minimum over aligned timesteps of the Euclidean distance. Lengths must match.
double min_pairwise_distance(const Trajectory& a, const Trajectory& b);

}  // namespace scenealign
