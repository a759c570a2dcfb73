#include "scenealign/geometry.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace scenealign {

void validate_scene(const Scene& scene) {
    const std::size_t n = scene.agent_ids.size();
    if (scene.histories.size() != n) {
        throw std::invalid_argument("scene " + scene.id + ": histories/agent_ids size mismatch");
    }
    if (!scene.futures.empty() && scene.futures.size() != n) {
        throw std::invalid_argument("scene " + scene.id + ": futures/agent_ids size mismatch");
    }
    if (n == 0) return;
    const std::size_t t_o = scene.histories.front().size();
    const double dt = scene.histories.front().dt;
    for (const auto& h : scene.histories) {
        if (h.size() != t_o || h.dt != dt) {
            throw std::invalid_argument("scene " + scene.id + ": histories disagree on length or dt");
        }
        for (const auto& p : h.points) {
            if (!is_finite(p)) throw std::invalid_argument("scene " + scene.id + ": non-finite history point");
        }
    }
    if (!scene.futures.empty()) {
        const std::size_t t_f = scene.futures.front().size();
        for (const auto& f : scene.futures) {
            if (f.size() != t_f) {
                throw std::invalid_argument("scene " + scene.id + ": futures disagree on length");
            }
            for (const auto& p : f.points) {
                if (!is_finite(p)) throw std::invalid_argument("scene " + scene.id + ": non-finite future point");
            }
        }
    }
}

double normalize_angle(double radians) {
    double a = std::remainder(radians, 2.0 * M_PI);
    if (a <= -M_PI) a += 2.0 * M_PI;  // remainder returns [-pi, pi]; fold -pi onto +pi
    return a;
}

Heading heading_from_history(const Trajectory& history) {
    if (history.size() < 2) {
        throw std::invalid_argument("heading_from_history: need at least 2 points");
    }
    const Point2& last = history.points.back();
    for (std::size_t i = history.size() - 1; i-- > 0;) {
        const Point2& p = history.points[i];
        if (p.x != last.x || p.y != last.y) {
            return {normalize_angle(std::atan2(last.y - p.y, last.x - p.x)), false};
        }
    }
    return {0.0, true};
}

AgentPose pose_from_history(const Trajectory& history) {
    const Heading h = heading_from_history(history);
    return {history.points.back(), h.radians};
}

Trajectory to_agent_frame(const Trajectory& traj, const AgentPose& pose) {
    const double c = std::cos(pose.heading);
    const double s = std::sin(pose.heading);
    Trajectory out;
    out.dt = traj.dt;
    out.points.reserve(traj.size());
    for (const auto& p : traj.points) {
        const double dx = p.x - pose.position.x;
        const double dy = p.y - pose.position.y;
        out.points.push_back({c * dx + s * dy, -s * dx + c * dy});
    }
    return out;
}

Trajectory from_agent_frame(const Trajectory& traj, const AgentPose& pose) {
    const double c = std::cos(pose.heading);
    const double s = std::sin(pose.heading);
    Trajectory out;
    out.dt = traj.dt;
    out.points.reserve(traj.size());
    for (const auto& p : traj.points) {
        out.points.push_back({c * p.x - s * p.y + pose.position.x,
                              s * p.x + c * p.y + pose.position.y});
    }
    return out;
}

Trajectory constant_velocity_extrapolate(const Trajectory& history, int steps) {
    if (history.size() < 2) {
        throw std::invalid_argument("constant_velocity_extrapolate: need at least 2 points");
    }
    if (steps < 0) {
        throw std::invalid_argument("constant_velocity_extrapolate: steps must be non-negative");
    }
    const std::size_t window = std::min<std::size_t>(3, history.size() - 1);
    double vx = 0.0, vy = 0.0;
    for (std::size_t k = history.size() - window; k < history.size(); ++k) {
        vx += history.points[k].x - history.points[k - 1].x;
        vy += history.points[k].y - history.points[k - 1].y;
    }
    vx /= static_cast<double>(window);
    vy /= static_cast<double>(window);

    Trajectory out;
    out.dt = history.dt;
    out.points.reserve(static_cast<std::size_t>(steps));
    Point2 cur = history.points.back();
    for (int k = 0; k < steps; ++k) {
        cur.x += vx;
        cur.y += vy;
        out.points.push_back(cur);
    }
    return out;
}

double min_pairwise_distance(const Trajectory& a, const Trajectory& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("min_pairwise_distance: trajectory lengths differ");
    }
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < a.size(); ++t) {
        best = std::min(best, distance(a.points[t], b.points[t]));
    }
    return best;
}

}  // namespace scenealign
