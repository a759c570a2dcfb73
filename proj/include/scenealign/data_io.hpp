// Dataset ingestion and artifact serialization: plain-text trajectory files
// (frame id x y), sliding-window scene extraction, synthetic scene
// generators, navigability map PNG+JSON pairs, split configs, and the
// JSON-lines prediction format.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scenealign/environment.hpp"
#include "scenealign/geometry.hpp"
#include "scenealign/metrics.hpp"

namespace scenealign {

struct RawAnnotation {
    long frame = 0;
    int agent_id = 0;
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const RawAnnotation&, const RawAnnotation&) = default;
};

/// Whitespace-separated rows "frame agent_id x y". Numeric frame/id fields
/// may carry a decimal point (some exports write "10.0"); they are coerced
/// to integers. Output is sorted by (frame, agent_id). Blank lines are
/// skipped. Malformed rows and duplicate (frame, agent) pairs raise
/// DataError naming the line.
std::vector<RawAnnotation> parse_trajectory_file(const std::string& path);

/// Inverse of parse_trajectory_file (modulo ordering, which is normalized).
void write_trajectory_file(const std::vector<RawAnnotation>& rows, const std::string& path);

struct WindowConfig {
    int obs_len = 8;
    int pred_len = 12;
    int stride = 10;      // annotation frames between consecutive window starts
    int frame_step = 10;  // annotation frames per prediction timestep
    double dt = 0.4;      // seconds per prediction timestep

    int horizon() const { return obs_len + pred_len; }
};

/// Slides windows of obs_len + pred_len timesteps over the annotations. An
/// agent joins a window only when present at every covered frame; windows
/// with no qualifying agent are dropped. Scene ids are id_prefix + start
/// frame. Agents appear in ascending id order.
std::vector<Scene> make_windows(const std::vector<RawAnnotation>& rows,
                                const WindowConfig& cfg, const std::string& id_prefix = "");

enum class ScenarioKind { kCrossing, kParallel, kCircle, kHeadOn };

ScenarioKind scenario_kind_from_string(const std::string& name);
std::string to_string(ScenarioKind kind);

struct SyntheticScenario {
    ScenarioKind kind = ScenarioKind::kCrossing;
    int n_agents = 2;
    double speed = 1.0;      // m/s
    double noise_std = 0.0;  // per-coordinate Gaussian noise, meters
    std::uint64_t seed = 0;
    double gap = 2.0;  // lateral spacing between walker pairs/lanes, meters
    int obs_len = 8;
    int pred_len = 12;
    double dt = 0.4;
};

/// Deterministic per seed. All conflicting variants steer the involved
/// agents through a shared point midway into the future:
///   crossing  - orthogonal walker pairs meeting at the origin
///   parallel  - same-direction walkers spaced `gap` apart (never meet)
///   circle    - agents ringed around the origin walking to their antipodes
///   head_on   - opposing walker pairs meeting on a line
Scene generate_synthetic_scene(const SyntheticScenario& sc);

/// PNG (8-bit grayscale, value >= 128 means navigable) plus JSON sidecar
/// {"origin_x", "origin_y", "resolution_m_per_px", "scene_id"}. Pixel row 0
/// is the top of the image and maps to the highest-y row of cells unless the
/// sidecar sets "y_up": true, in which case row 0 is the bottom. A sidecar
/// that carries "width"/"height" must agree with the PNG.
NavigabilityMap load_navigability_map(const std::string& png_path,
                                      const std::string& json_path);
void save_navigability_map(const NavigabilityMap& map, const std::string& png_path,
                           const std::string& json_path);

struct SplitConfig {
    std::vector<std::string> train;
    std::vector<std::string> test;
    int frame_step = 10;
    int stride = 10;
};

/// JSON {"train": [paths], "test": [paths], "frame_step", "stride"}. Train
/// and test are required; the integers default as above.
SplitConfig load_split_config(const std::string& path);

/// JSON-lines, one line per joint sample:
///   {"scene": id, "sample": s, "energy": e, "seed": n,
///    "agents": {"<agent_id>": [[x, y] * t_f]}}
/// Lines are grouped per scene in sample order; scenes follow input order.
void write_predictions(const std::vector<ScenePredictionSet>& scenes, std::uint64_t seed,
                       const std::string& path);

/// Reads the format above, grouping lines by scene id (order of first
/// appearance) and sorting agents numerically.
std::vector<ScenePredictionSet> read_predictions(const std::string& path);

}  // namespace scenealign
