// End-to-end orchestration: run configuration, scene loading, the per-scene
// predict path (features -> scores -> env mask -> top-K prototypes -> scene
// MRF -> joint samples), and the command bodies behind the CLI.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scenealign/anchors.hpp"
#include "scenealign/data_io.hpp"
#include "scenealign/environment.hpp"
#include "scenealign/metrics.hpp"
#include "scenealign/mrf.hpp"
#include "scenealign/profiler.hpp"

namespace scenealign {

struct RunConfig {
    // Paths. `trajectories` xor `split` xor `synthetic` supplies scenes.
    std::string trajectories;             // single annotation file
    std::string split;                    // split-config JSON
    std::string split_group = "test";     // which group of the split to load
    std::vector<SyntheticScenario> synthetic;
    std::string map_png;                  // optional navigability map pair
    std::string map_json;
    std::string anchors;                  // anchor database JSON
    std::string scorer;                   // optional trained scorer JSON
    std::string out;                      // command output path

    // Windowing (file-based data only).
    WindowConfig window;

    // Hyperparameters.
    int d_s = 4;
    int n_anchors = 64;
    int top_k = 20;        // prototypes kept per agent
    int n_samples = 20;    // joint samples emitted per scene
    int burn_in = 50;      // Gibbs burn-in sweeps
    double collision_threshold = 0.2;  // meters
    double temperature = 0.1;
    double edge_radius = 5.0;   // meters
    double mask_value = -1e4;
    double max_range = 10.0;    // distance-array cap, meters
    double clearance = 0.2;     // pairwise soft-penalty clearance, meters
    double clearance_scale = 0.5;

    // Flags.
    std::uint64_t seed = 0;
    int workers = 1;
    bool env_filter = true;
    bool a2a_filter = true;
    bool use_gibbs = true;
    ChainMode chain_mode = ChainMode::kParallel;
};

/// Parses the JSON config (see README for the schema); absent keys keep
/// their defaults. Unknown keys raise DataError to catch typos.
RunConfig run_config_from_json(const std::string& text);
RunConfig load_run_config(const std::string& path);

/// Scenes from whichever data source the config names, in deterministic
/// order. File-based scene ids are "<file stem>:<start frame>".
std::vector<Scene> load_scenes(const RunConfig& cfg);

/// The full single-scene prediction path. `map` and `scorer` may be null
/// (no env information / baseline cosine scorer). Deterministic in
/// (scene, db, cfg, scene_seed); cfg.workers only affects wall time.
ScenePredictionSet predict_scene(const Scene& scene, const AnchorDatabase& db,
                                 const NavigabilityMap* map, const ScorerParams* scorer,
                                 const RunConfig& cfg, std::uint64_t scene_seed);

struct PredictSummary {
    int scenes = 0;
    double mean_energy = 0.0;
    double wall_seconds = 0.0;
};

struct BuildAnchorsSummary {
    int n_anchors = 0;
    int d_s = 0;
    double reconstruction_residual = 0.0;  // relative Frobenius residual
    double kmeans_inertia = 0.0;
    int kmeans_iterations = 0;
};

/// Builds the anchor database from the config's training data and writes it
/// to `out_path`.
BuildAnchorsSummary run_build_anchors(const RunConfig& cfg, const std::string& out_path);

/// Predicts every scene (scene-parallel when cfg.workers > 1, merged in
/// input order) and writes JSON-lines to `out_path`. The partial file is
/// removed if any scene fails.
PredictSummary run_predict(const RunConfig& cfg, const std::string& out_path);

/// Scores a prediction file against the config's ground truth. Scene and
/// agent ids must align; mismatches raise DataError with a diff summary.
MetricsReport run_evaluate(const RunConfig& cfg, const std::string& predictions_path);

/// Renders one scene's predictions (plus history/GT context) as SVG.
std::string run_plot(const RunConfig& cfg, const std::string& predictions_path,
                     const std::string& scene_id);

}  // namespace scenealign
