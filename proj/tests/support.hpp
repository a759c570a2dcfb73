// Shared helpers for the test binaries: deterministic generators for
// trajectories and scenes, plus a self-cleaning scratch directory.

#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "scenealign/geometry.hpp"

namespace testutil {

using scenealign::Point2;
using scenealign::Scene;
using scenealign::Trajectory;

/// Scratch directory under the system temp root, wiped on construction and
/// destruction so reruns start clean.
class ScratchDir {
public:
    explicit ScratchDir(const std::string& tag)
        : path_(std::filesystem::temp_directory_path() / ("scenealign_test_" + tag)) {
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

inline Trajectory line_trajectory(Point2 start, Point2 step, int len, double dt = 0.4) {
    std::vector<Point2> pts;
    pts.reserve(static_cast<std::size_t>(len));
    for (int i = 0; i < len; ++i) {
        pts.push_back({start.x + i * step.x, start.y + i * step.y});
    }
    return Trajectory(std::move(pts), dt);
}

/// Uniform points in [-span, span]^2; useful where smoothness is irrelevant.
inline Trajectory random_trajectory(std::mt19937& rng, int len, double span = 5.0,
                                    double dt = 0.4) {
    std::uniform_real_distribution<double> u(-span, span);
    std::vector<Point2> pts;
    pts.reserve(static_cast<std::size_t>(len));
    for (int i = 0; i < len; ++i) pts.push_back({u(rng), u(rng)});
    return Trajectory(std::move(pts), dt);
}

/// Random start plus random per-step displacement of bounded length, so the
/// result looks like an actual path (distinct consecutive points).
inline Trajectory random_walk(std::mt19937& rng, int len, double step_scale = 0.5,
                              double dt = 0.4) {
    std::uniform_real_distribution<double> start(-10.0, 10.0);
    std::uniform_real_distribution<double> step(0.1, step_scale);
    std::uniform_real_distribution<double> angle(-3.14159, 3.14159);
    std::vector<Point2> pts;
    pts.reserve(static_cast<std::size_t>(len));
    Point2 p{start(rng), start(rng)};
    pts.push_back(p);
    double theta = angle(rng);
    for (int i = 1; i < len; ++i) {
        theta += 0.2 * angle(rng) / 3.14159;
        const double s = step(rng);
        p = {p.x + s * std::cos(theta), p.y + s * std::sin(theta)};
        pts.push_back(p);
    }
    return Trajectory(std::move(pts), dt);
}

/// Scene of random-walk agents with histories and futures.
inline Scene random_scene(std::mt19937& rng, int n_agents, int obs_len = 8,
                          int pred_len = 12, const std::string& id = "scene") {
    Scene scene;
    scene.id = id;
    for (int i = 0; i < n_agents; ++i) {
        const Trajectory full = random_walk(rng, obs_len + pred_len);
        scene.agent_ids.push_back(i);
        scene.histories.emplace_back(
            std::vector<Point2>(full.points.begin(), full.points.begin() + obs_len),
            full.dt);
        scene.futures.emplace_back(
            std::vector<Point2>(full.points.begin() + obs_len, full.points.end()),
            full.dt);
    }
    return scene;
}

}  // namespace testutil
