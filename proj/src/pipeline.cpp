#include "scenealign/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "nlohmann/json.hpp"
#include "scenealign/errors.hpp"
#include "scenealign/logging.hpp"
#include "scenealign/rng.hpp"
#include "scenealign/svg_plot.hpp"

namespace scenealign {

using json = nlohmann::json;

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        if (!allowed.contains(key)) {
            throw DataError("config: unknown key '" + key + "' in " + where);
        }
    }
}

// Runs fn(0..n-1) on up to `workers` threads; task order within a thread is
// ascending, results land wherever fn puts them, and the lowest-index failure
// is rethrown after all threads join.
template <typename Fn>
void parallel_for(int n, int workers, Fn&& fn) {
    workers = std::clamp(workers, 1, std::max(1, n));
    if (workers == 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (int i = w; i < n; i += workers) {
                try {
                    fn(i);
                } catch (...) {
                    errors[static_cast<std::size_t>(i)] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

std::string file_stem(const std::string& path) {
    return std::filesystem::path(path).stem().string();
}

SyntheticScenario scenario_from_json(const json& j, std::size_t index) {
    reject_unknown_keys(j,
                        {"kind", "n_agents", "speed", "noise_std", "seed", "gap", "obs_len",
                         "pred_len", "dt"},
                        "synthetic[" + std::to_string(index) + "]");
    SyntheticScenario sc;
    if (!j.contains("kind")) {
        throw DataError("config: synthetic[" + std::to_string(index) + "] needs 'kind'");
    }
    sc.kind = scenario_kind_from_string(j.at("kind").get<std::string>());
    sc.n_agents = j.value("n_agents", sc.n_agents);
    sc.speed = j.value("speed", sc.speed);
    sc.noise_std = j.value("noise_std", sc.noise_std);
    sc.seed = j.value("seed", sc.seed);
    sc.gap = j.value("gap", sc.gap);
    sc.obs_len = j.value("obs_len", sc.obs_len);
    sc.pred_len = j.value("pred_len", sc.pred_len);
    sc.dt = j.value("dt", sc.dt);
    return sc;
}

ChainMode chain_mode_from_string(const std::string& name) {
    if (name == "sequential") return ChainMode::kSequential;
    if (name == "parallel") return ChainMode::kParallel;
    throw DataError("config: chain_mode must be 'sequential' or 'parallel', got '" + name + "'");
}

void validate_config(const RunConfig& cfg) {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw DataError(std::string("config: ") + what);
    };
    require(cfg.d_s >= 1, "d_s must be >= 1");
    require(cfg.n_anchors >= 1, "n_anchors must be >= 1");
    require(cfg.top_k >= 1, "top_k must be >= 1");
    require(cfg.n_samples >= 1, "n_samples must be >= 1");
    require(cfg.burn_in >= 0, "burn_in must be >= 0");
    require(cfg.collision_threshold >= 0, "collision_threshold must be >= 0");
    require(cfg.temperature > 0, "temperature must be > 0");
    require(cfg.edge_radius > 0, "edge_radius must be > 0");
    require(cfg.max_range > 0, "max_range must be > 0");
    require(cfg.clearance_scale > 0, "clearance_scale must be > 0");
    require(cfg.workers >= 1, "workers must be >= 1");
    require(cfg.window.obs_len >= 2, "window.obs_len must be >= 2");
    require(cfg.window.pred_len >= 1, "window.pred_len must be >= 1");
    require(cfg.window.stride >= 1, "window.stride must be >= 1");
    require(cfg.window.frame_step >= 1, "window.frame_step must be >= 1");
    require(cfg.window.dt > 0, "window.dt must be > 0");
    require(cfg.map_png.empty() == cfg.map_json.empty(),
            "map needs both 'png' and 'json' paths");
}

}  // namespace

RunConfig run_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("config: bad JSON: ") + e.what());
    }
    reject_unknown_keys(j,
                        {"trajectories", "split", "split_group", "synthetic", "map", "anchors",
                         "scorer", "out", "window", "hyper", "flags"},
                        "top level");
    RunConfig cfg;
    try {
        cfg.trajectories = j.value("trajectories", "");
        cfg.split = j.value("split", "");
        cfg.split_group = j.value("split_group", cfg.split_group);
        if (j.contains("synthetic")) {
            const auto& list = j.at("synthetic");
            for (std::size_t i = 0; i < list.size(); ++i) {
                cfg.synthetic.push_back(scenario_from_json(list.at(i), i));
            }
        }
        if (j.contains("map")) {
            reject_unknown_keys(j.at("map"), {"png", "json"}, "map");
            cfg.map_png = j.at("map").value("png", "");
            cfg.map_json = j.at("map").value("json", "");
        }
        cfg.anchors = j.value("anchors", "");
        cfg.scorer = j.value("scorer", "");
        cfg.out = j.value("out", "");
        if (j.contains("window")) {
            const auto& w = j.at("window");
            reject_unknown_keys(w, {"obs_len", "pred_len", "stride", "frame_step", "dt"},
                                "window");
            cfg.window.obs_len = w.value("obs_len", cfg.window.obs_len);
            cfg.window.pred_len = w.value("pred_len", cfg.window.pred_len);
            cfg.window.stride = w.value("stride", cfg.window.stride);
            cfg.window.frame_step = w.value("frame_step", cfg.window.frame_step);
            cfg.window.dt = w.value("dt", cfg.window.dt);
        }
        if (j.contains("hyper")) {
            const auto& h = j.at("hyper");
            reject_unknown_keys(h,
                                {"d_s", "n_anchors", "top_k", "n_samples", "burn_in",
                                 "collision_threshold", "temperature", "edge_radius",
                                 "mask_value", "max_range", "clearance", "clearance_scale",
                                 "seed"},
                                "hyper");
            cfg.d_s = h.value("d_s", cfg.d_s);
            cfg.n_anchors = h.value("n_anchors", cfg.n_anchors);
            cfg.top_k = h.value("top_k", cfg.top_k);
            cfg.n_samples = h.value("n_samples", cfg.n_samples);
            cfg.burn_in = h.value("burn_in", cfg.burn_in);
            cfg.collision_threshold = h.value("collision_threshold", cfg.collision_threshold);
            cfg.temperature = h.value("temperature", cfg.temperature);
            cfg.edge_radius = h.value("edge_radius", cfg.edge_radius);
            cfg.mask_value = h.value("mask_value", cfg.mask_value);
            cfg.max_range = h.value("max_range", cfg.max_range);
            cfg.clearance = h.value("clearance", cfg.clearance);
            cfg.clearance_scale = h.value("clearance_scale", cfg.clearance_scale);
            cfg.seed = h.value("seed", cfg.seed);
        }
        if (j.contains("flags")) {
            const auto& f = j.at("flags");
            reject_unknown_keys(
                f, {"env_filter", "a2a_filter", "gibbs", "chain_mode", "workers"}, "flags");
            cfg.env_filter = f.value("env_filter", cfg.env_filter);
            cfg.a2a_filter = f.value("a2a_filter", cfg.a2a_filter);
            cfg.use_gibbs = f.value("gibbs", cfg.use_gibbs);
            if (f.contains("chain_mode")) {
                cfg.chain_mode = chain_mode_from_string(f.at("chain_mode").get<std::string>());
            }
            cfg.workers = f.value("workers", cfg.workers);
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("config: ") + e.what());
    }
    validate_config(cfg);
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("load_run_config: cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return run_config_from_json(text);
}

std::vector<Scene> load_scenes(const RunConfig& cfg) {
    if (!cfg.synthetic.empty()) {
        std::vector<Scene> scenes;
        std::map<std::string, int> seen;
        for (const auto& sc : cfg.synthetic) {
            Scene scene = generate_synthetic_scene(sc);
            const int copies = seen[scene.id]++;
            if (copies > 0) scene.id += "-" + std::to_string(copies);
            scenes.push_back(std::move(scene));
        }
        return scenes;
    }
    WindowConfig window = cfg.window;
    std::vector<std::string> files;
    if (!cfg.split.empty()) {
        const SplitConfig split = load_split_config(cfg.split);
        if (cfg.split_group == "train") {
            files = split.train;
        } else if (cfg.split_group == "test") {
            files = split.test;
        } else {
            throw DataError("config: split_group must be 'train' or 'test', got '" +
                            cfg.split_group + "'");
        }
        window.frame_step = split.frame_step;
        window.stride = split.stride;
    } else if (!cfg.trajectories.empty()) {
        files.push_back(cfg.trajectories);
    } else {
        throw DataError("config: no data source (set trajectories, split, or synthetic)");
    }

    std::vector<Scene> scenes;
    for (const auto& file : files) {
        const auto rows = parse_trajectory_file(file);
        auto windows = make_windows(rows, window, file_stem(file) + ":");
        log(LogLevel::kInfo, file + ": " + std::to_string(windows.size()) + " scenes");
        scenes.insert(scenes.end(), std::make_move_iterator(windows.begin()),
                      std::make_move_iterator(windows.end()));
    }
    return scenes;
}

ScenePredictionSet predict_scene(const Scene& scene, const AnchorDatabase& db,
                                 const NavigabilityMap* map, const ScorerParams* scorer,
                                 const RunConfig& cfg, std::uint64_t scene_seed) {
    validate_scene(scene);

    std::vector<PrototypeSet> prototypes;
    prototypes.reserve(scene.n_agents());
    bool any_fallback = false;
    for (std::size_t i = 0; i < scene.n_agents(); ++i) {
        const Trajectory& history = scene.histories[i];
        const AgentPose pose = pose_from_history(history);

        DistanceArray dist;
        if (map) {
            dist = distance_array(*map, pose, cfg.max_range);
        } else {
            dist.max_range = cfg.max_range;
            dist.distances.fill(cfg.max_range);
        }
        const AgentFeatures features = agent_features(history, dist, db.basis);
        const Eigen::VectorXd logits =
            scorer ? score_anchors_trained(features, *scorer)
                   : score_anchors_baseline(features, db, cfg.temperature);

        std::vector<bool> mask(db.size(), true);
        if (map && cfg.env_filter) mask = prelabel_anchor_validity(*map, pose, db);

        ScoreVector scores;
        bool fallback = false;
        try {
            scores = env_masked_softmax(logits, mask);
        } catch (const NoValidAnchorsError&) {
            // Nothing feasible: keep the agent predictable rather than fail
            // the scene, and flag the output.
            log(LogLevel::kWarn, "scene " + scene.id + ", agent " +
                                     std::to_string(scene.agent_ids[i]) +
                                     ": every anchor violates the map; masking disabled");
            scores = env_masked_softmax(logits, std::vector<bool>(db.size(), true));
            fallback = true;
        }
        // Heavy masking can leave fewer than top_k candidates; keep whatever
        // survived instead of failing the scene.
        int unmasked = 0;
        for (const bool b : scores.env_mask) unmasked += b ? 1 : 0;
        const TopKSelection selection =
            select_top_k(scores, std::min(cfg.top_k, unmasked));
        PrototypeSet set = materialize_prototypes(selection, db, pose,
                                                  scene.agent_ids[i], history.dt);
        set.fallback_unmasked = fallback;
        any_fallback = any_fallback || fallback;
        prototypes.push_back(std::move(set));
    }

    MrfConfig mrf_cfg;
    mrf_cfg.edge_radius = cfg.edge_radius;
    mrf_cfg.clearance = cfg.clearance;
    mrf_cfg.scale = cfg.clearance_scale;
    mrf_cfg.collision_radius = cfg.collision_threshold;
    mrf_cfg.collision_penalty = cfg.mask_value;
    mrf_cfg.a2a_filter = cfg.a2a_filter;
    const SceneMrf mrf = build_scene_mrf(prototypes, mrf_cfg);

    SampleSet samples;
    if (cfg.use_gibbs) {
        GibbsConfig gibbs;
        gibbs.n_samples = cfg.n_samples;
        gibbs.burn_in = cfg.burn_in;
        gibbs.mode = cfg.chain_mode;
        gibbs.seed = scene_seed;
        gibbs.workers = cfg.workers;
        samples = gibbs_sample(mrf, gibbs);
    } else {
        samples = rank_aligned_samples(mrf, loopy_bp_beliefs(mrf), cfg.n_samples);
    }

    ScenePredictionSet out;
    out.scene_id = scene.id;
    out.agent_ids = scene.agent_ids;
    out.fallback_unmasked = any_fallback;
    out.samples = realize_predictions(mrf, samples);
    out.energies.reserve(samples.assignments.size());
    for (const auto& assignment : samples.assignments) {
        out.energies.push_back(mrf_energy(mrf, assignment));
    }
    out.assignments = std::move(samples.assignments);
    return out;
}

namespace {

AnchorDatabase load_required_anchors(const RunConfig& cfg) {
    if (cfg.anchors.empty()) throw DataError("config: 'anchors' path is required");
    return load_anchor_db(cfg.anchors);
}

std::optional<NavigabilityMap> load_optional_map(const RunConfig& cfg) {
    if (cfg.map_png.empty()) return std::nullopt;
    return load_navigability_map(cfg.map_png, cfg.map_json);
}

std::optional<ScorerParams> load_optional_scorer(const RunConfig& cfg,
                                                 const AnchorDatabase& db) {
    if (cfg.scorer.empty()) return std::nullopt;
    ScorerParams params = load_scorer_params(cfg.scorer);
    if (params.bias.size() != static_cast<Eigen::Index>(db.size())) {
        throw DataError("scorer '" + cfg.scorer + "' was trained for " +
                        std::to_string(params.bias.size()) + " anchors, database has " +
                        std::to_string(db.size()));
    }
    return params;
}

}  // namespace

BuildAnchorsSummary run_build_anchors(const RunConfig& cfg, const std::string& out_path) {
    RunConfig train_cfg = cfg;
    if (!cfg.split.empty()) train_cfg.split_group = "train";
    const std::vector<Scene> scenes = load_scenes(train_cfg);
    if (scenes.empty()) throw DataError("build-anchors: no scenes in the training data");

    const MotionMatrix mm = build_motion_matrix(scenes);
    if (mm.data.rows() < cfg.n_anchors) {
        throw DataError("build-anchors: " + std::to_string(mm.data.rows()) +
                        " trajectories cannot seed " + std::to_string(cfg.n_anchors) +
                        " anchors");
    }
    const AnchorDatabase db = build_anchor_db(scenes, cfg.d_s, cfg.n_anchors, cfg.seed);
    save_anchor_db(db, out_path);

    BuildAnchorsSummary summary;
    summary.n_anchors = static_cast<int>(db.size());
    summary.d_s = cfg.d_s;
    summary.kmeans_inertia = db.kmeans_inertia;
    summary.kmeans_iterations = db.kmeans_iterations;
    const Eigen::MatrixXd reconstructed =
        mm.data * db.basis.v_rows.transpose() * db.basis.v_rows;
    const double denom = mm.data.norm();
    summary.reconstruction_residual =
        denom > 0 ? (mm.data - reconstructed).norm() / denom : 0.0;
    return summary;
}

PredictSummary run_predict(const RunConfig& cfg, const std::string& out_path) {
    const AnchorDatabase db = load_required_anchors(cfg);
    const std::optional<NavigabilityMap> map = load_optional_map(cfg);
    const std::optional<ScorerParams> scorer = load_optional_scorer(cfg, db);
    const std::vector<Scene> scenes = load_scenes(cfg);
    if (scenes.empty()) throw DataError("predict: no scenes to process");

    const auto t0 = std::chrono::steady_clock::now();
    std::vector<ScenePredictionSet> results(scenes.size());
    parallel_for(static_cast<int>(scenes.size()), cfg.workers, [&](int i) {
        results[static_cast<std::size_t>(i)] = predict_scene(
            scenes[static_cast<std::size_t>(i)], db, map ? &*map : nullptr,
            scorer ? &*scorer : nullptr, cfg,
            mix_seed(cfg.seed, static_cast<std::uint64_t>(i)));
    });
    const auto t1 = std::chrono::steady_clock::now();

    try {
        write_predictions(results, cfg.seed, out_path);
    } catch (...) {
        std::error_code ec;
        std::filesystem::remove(out_path, ec);
        throw;
    }

    PredictSummary summary;
    summary.scenes = static_cast<int>(results.size());
    double energy_sum = 0.0;
    long energy_count = 0;
    for (const auto& r : results) {
        for (double e : r.energies) {
            energy_sum += e;
            ++energy_count;
        }
    }
    summary.mean_energy = energy_count > 0 ? energy_sum / energy_count : 0.0;
    summary.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
    return summary;
}

MetricsReport run_evaluate(const RunConfig& cfg, const std::string& predictions_path) {
    const std::vector<Scene> scenes = load_scenes(cfg);
    const std::vector<ScenePredictionSet> preds = read_predictions(predictions_path);
    if (preds.empty()) throw DataError("evaluate: no predictions in " + predictions_path);
    const std::optional<NavigabilityMap> map = load_optional_map(cfg);

    std::map<std::string, const Scene*> gt_by_id;
    for (const auto& scene : scenes) gt_by_id[scene.id] = &scene;

    // Alignment check with an explicit diff before any metric runs.
    std::vector<std::string> missing_gt, mismatched;
    std::set<std::string> predicted_ids;
    for (const auto& p : preds) {
        predicted_ids.insert(p.scene_id);
        const auto it = gt_by_id.find(p.scene_id);
        if (it == gt_by_id.end()) {
            missing_gt.push_back(p.scene_id);
        } else if (p.agent_ids != it->second->agent_ids) {
            mismatched.push_back(p.scene_id);
        }
    }
    std::vector<std::string> missing_pred;
    for (const auto& scene : scenes) {
        if (!predicted_ids.contains(scene.id)) missing_pred.push_back(scene.id);
    }
    if (!missing_gt.empty() || !missing_pred.empty() || !mismatched.empty()) {
        std::ostringstream diff;
        diff << "evaluate: predictions do not align with the ground truth;";
        auto list = [&](const char* label, const std::vector<std::string>& ids) {
            if (ids.empty()) return;
            diff << ' ' << label << ':';
            for (std::size_t i = 0; i < ids.size() && i < 5; ++i) diff << ' ' << ids[i];
            if (ids.size() > 5) diff << " (+" << ids.size() - 5 << " more)";
            diff << ';';
        };
        list("predicted scenes without GT", missing_gt);
        list("GT scenes without predictions", missing_pred);
        list("agent id mismatches", mismatched);
        throw DataError(diff.str());
    }

    std::vector<MetricsReport> reports(preds.size());
    parallel_for(static_cast<int>(preds.size()), cfg.workers, [&](int i) {
        const auto& p = preds[static_cast<std::size_t>(i)];
        reports[static_cast<std::size_t>(i)] = evaluate_scene(
            *gt_by_id.at(p.scene_id), p, map ? &*map : nullptr, cfg.collision_threshold);
    });

    MetricsAccumulator acc;
    for (const auto& r : reports) acc.add(r);
    return acc.report();
}

std::string run_plot(const RunConfig& cfg, const std::string& predictions_path,
                     const std::string& scene_id) {
    const std::vector<ScenePredictionSet> preds = read_predictions(predictions_path);
    if (preds.empty()) throw DataError("plot: no predictions in " + predictions_path);

    const ScenePredictionSet* chosen = nullptr;
    if (scene_id.empty()) {
        chosen = &preds.front();
    } else {
        for (const auto& p : preds) {
            if (p.scene_id == scene_id) {
                chosen = &p;
                break;
            }
        }
        if (!chosen) {
            std::string known;
            for (std::size_t i = 0; i < preds.size() && i < 5; ++i) {
                known += (i ? ", " : "") + preds[i].scene_id;
            }
            throw DataError("plot: unknown scene id '" + scene_id + "' (file has: " + known +
                            (preds.size() > 5 ? ", ..." : "") + ")");
        }
    }

    const Scene* gt = nullptr;
    std::vector<Scene> scenes;
    const bool has_data =
        !cfg.synthetic.empty() || !cfg.split.empty() || !cfg.trajectories.empty();
    if (has_data) {
        scenes = load_scenes(cfg);
        for (const auto& scene : scenes) {
            if (scene.id == chosen->scene_id) {
                gt = &scene;
                break;
            }
        }
    }
    const std::optional<NavigabilityMap> map = load_optional_map(cfg);
    return render_scene_svg(*chosen, gt, map ? &*map : nullptr, cfg.collision_threshold);
}

}  // namespace scenealign
