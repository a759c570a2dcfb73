// Python bindings for the scenealign core: geometry, anchor database,
// environment checks, per-agent profiling, the scene MRF with its samplers,
// metrics, data I/O, and the end-to-end pipeline entry points.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "scenealign/anchors.hpp"
#include "scenealign/data_io.hpp"
#include "scenealign/environment.hpp"
#include "scenealign/errors.hpp"
#include "scenealign/geometry.hpp"
#include "scenealign/metrics.hpp"
#include "scenealign/mrf.hpp"
#include "scenealign/pipeline.hpp"
#include "scenealign/profiler.hpp"
#include "scenealign/rng.hpp"
#include "scenealign/svg_plot.hpp"

namespace py = pybind11;
using namespace scenealign;

namespace {

Trajectory trajectory_from_array(const Eigen::MatrixXd& points, double dt) {
    if (points.cols() != 2) {
        throw std::invalid_argument("trajectory array must have shape (n, 2)");
    }
    std::vector<Point2> pts;
    pts.reserve(static_cast<std::size_t>(points.rows()));
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        pts.push_back({points(i, 0), points(i, 1)});
    }
    return Trajectory(std::move(pts), dt);
}

Eigen::MatrixXd trajectory_to_array(const Trajectory& traj) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(traj.size()), 2);
    for (std::size_t i = 0; i < traj.size(); ++i) {
        out(static_cast<Eigen::Index>(i), 0) = traj.points[i].x;
        out(static_cast<Eigen::Index>(i), 1) = traj.points[i].y;
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Scene-aligned multi-agent trajectory prediction core";

    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
    py::register_exception<NoValidAnchorsError>(m, "NoValidAnchorsError", PyExc_ValueError);

    // ---- geometry ----
    py::class_<Point2>(m, "Point2")
        .def(py::init<>())
        .def(py::init([](double x, double y) { return Point2{x, y}; }), py::arg("x"),
             py::arg("y"))
        .def_readwrite("x", &Point2::x)
        .def_readwrite("y", &Point2::y)
        .def("__eq__", [](const Point2& a, const Point2& b) { return a == b; })
        .def("__repr__", [](const Point2& p) {
            return "Point2(" + std::to_string(p.x) + ", " + std::to_string(p.y) + ")";
        });

    py::class_<Trajectory>(m, "Trajectory")
        .def(py::init<>())
        .def(py::init(&trajectory_from_array), py::arg("points"), py::arg("dt") = 0.4)
        .def_readwrite("points", &Trajectory::points)
        .def_readwrite("dt", &Trajectory::dt)
        .def("__len__", [](const Trajectory& t) { return t.size(); })
        .def("as_array", &trajectory_to_array);

    py::class_<AgentPose>(m, "AgentPose")
        .def(py::init<>())
        .def(py::init([](Point2 position, double heading) {
                 return AgentPose{position, heading};
             }),
             py::arg("position"), py::arg("heading"))
        .def_readwrite("position", &AgentPose::position)
        .def_readwrite("heading", &AgentPose::heading);

    py::class_<Heading>(m, "Heading")
        .def_readonly("radians", &Heading::radians)
        .def_readonly("degenerate", &Heading::degenerate);

    py::class_<Scene>(m, "Scene")
        .def(py::init<>())
        .def_readwrite("id", &Scene::id)
        .def_readwrite("agent_ids", &Scene::agent_ids)
        .def_readwrite("histories", &Scene::histories)
        .def_readwrite("futures", &Scene::futures)
        .def_readwrite("map_id", &Scene::map_id)
        .def("n_agents", &Scene::n_agents)
        .def("has_futures", &Scene::has_futures);

    m.def("normalize_angle", &normalize_angle);
    m.def("heading_from_history", &heading_from_history);
    m.def("pose_from_history", &pose_from_history);
    m.def("to_agent_frame", &to_agent_frame);
    m.def("from_agent_frame", &from_agent_frame);
    m.def("constant_velocity_extrapolate", &constant_velocity_extrapolate,
          py::arg("history"), py::arg("steps"));
    m.def("min_pairwise_distance", &min_pairwise_distance);
    m.def("validate_scene", &validate_scene);

    // ---- anchor database ----
    py::class_<MotionMatrix>(m, "MotionMatrix")
        .def_readonly("data", &MotionMatrix::data)
        .def_readonly("t_f", &MotionMatrix::t_f)
        .def_readonly("dt", &MotionMatrix::dt);

    py::class_<SvdBasis>(m, "SvdBasis")
        .def(py::init<>())
        .def_readwrite("v_rows", &SvdBasis::v_rows)
        .def_readwrite("singular_values", &SvdBasis::singular_values)
        .def("d_s", &SvdBasis::d_s)
        .def("t_f", &SvdBasis::t_f);

    py::class_<KMeansResult>(m, "KMeansResult")
        .def_readonly("centers", &KMeansResult::centers)
        .def_readonly("assignments", &KMeansResult::assignments)
        .def_readonly("iterations", &KMeansResult::iterations)
        .def_readonly("inertia", &KMeansResult::inertia);

    py::class_<AnchorDatabase>(m, "AnchorDatabase")
        .def(py::init<>())
        .def_readwrite("anchors", &AnchorDatabase::anchors)
        .def_readwrite("compressed", &AnchorDatabase::compressed)
        .def_readwrite("basis", &AnchorDatabase::basis)
        .def_readwrite("seed", &AnchorDatabase::seed)
        .def_readwrite("kmeans_iterations", &AnchorDatabase::kmeans_iterations)
        .def_readwrite("kmeans_inertia", &AnchorDatabase::kmeans_inertia)
        .def("size", &AnchorDatabase::size)
        .def("t_f", &AnchorDatabase::t_f);

    m.def("flatten", &flatten);
    m.def("unflatten", &unflatten, py::arg("row"), py::arg("dt") = 0.4);
    m.def("build_motion_matrix", &build_motion_matrix);
    m.def("fit_svd_basis", &fit_svd_basis, py::arg("a"), py::arg("d_s") = 4);
    m.def("compress", &compress);
    m.def("decompress", &decompress);
    m.def("kmeans_cluster", &kmeans_cluster, py::arg("points"), py::arg("k"),
          py::arg("seed"), py::arg("max_iterations") = 300);
    m.def("build_anchor_db", &build_anchor_db, py::arg("training_scenes"), py::arg("d_s"),
          py::arg("n_anchors"), py::arg("seed"));
    m.def("anchor_db_to_json", &anchor_db_to_json);
    m.def("anchor_db_from_json", &anchor_db_from_json);
    m.def("save_anchor_db", &save_anchor_db);
    m.def("load_anchor_db", &load_anchor_db);

    // ---- environment ----
    py::class_<NavigabilityMap>(m, "NavigabilityMap")
        .def(py::init<>())
        .def_readwrite("width", &NavigabilityMap::width)
        .def_readwrite("height", &NavigabilityMap::height)
        .def_readwrite("cells", &NavigabilityMap::cells)
        .def_readwrite("origin", &NavigabilityMap::origin)
        .def_readwrite("resolution", &NavigabilityMap::resolution)
        .def_readwrite("scene_id", &NavigabilityMap::scene_id)
        .def("navigable_cell", &NavigabilityMap::navigable_cell)
        .def("set_cell",
             [](NavigabilityMap& map, int ix, int iy, bool navigable) {
                 if (ix < 0 || iy < 0 || ix >= map.width || iy >= map.height) {
                     throw std::out_of_range("cell index outside the grid");
                 }
                 map.cell(ix, iy) = navigable ? 1 : 0;
             })
        .def_static("uniform", &NavigabilityMap::uniform, py::arg("width"),
                    py::arg("height"), py::arg("origin"), py::arg("resolution"),
                    py::arg("navigable") = true);

    py::class_<DistanceArray>(m, "DistanceArray")
        .def(py::init<>())
        .def_property(
            "distances",
            [](const DistanceArray& d) {
                return std::vector<double>(d.distances.begin(), d.distances.end());
            },
            [](DistanceArray& d, const std::vector<double>& v) {
                if (v.size() != d.distances.size()) {
                    throw std::invalid_argument("distances must have 360 entries");
                }
                std::copy(v.begin(), v.end(), d.distances.begin());
            })
        .def_readwrite("max_range", &DistanceArray::max_range)
        .def_readwrite("degenerate", &DistanceArray::degenerate);

    m.def("is_navigable", &is_navigable);
    m.def("trajectory_violates", &trajectory_violates);
    m.def("distance_array", &distance_array, py::arg("map"), py::arg("pose"),
          py::arg("max_range") = 10.0);
    m.def("prelabel_anchor_validity", &prelabel_anchor_validity);

    // ---- profiler ----
    py::class_<FeatureSpec>(m, "FeatureSpec")
        .def(py::init<>())
        .def_readwrite("d_s", &FeatureSpec::d_s)
        .def_readwrite("t_f", &FeatureSpec::t_f)
        .def_readwrite("speed_stats", &FeatureSpec::speed_stats)
        .def_readwrite("sectors", &FeatureSpec::sectors)
        .def("dim", &FeatureSpec::dim);

    py::class_<AgentFeatures>(m, "AgentFeatures")
        .def_readonly("values", &AgentFeatures::values)
        .def_readonly("spec", &AgentFeatures::spec)
        .def_readonly("degenerate", &AgentFeatures::degenerate);

    py::class_<ScorerParams>(m, "ScorerParams")
        .def(py::init<>())
        .def_readwrite("weights", &ScorerParams::weights)
        .def_readwrite("bias", &ScorerParams::bias)
        .def_readwrite("feature_spec", &ScorerParams::feature_spec)
        .def_readwrite("temperature", &ScorerParams::temperature)
        .def_readwrite("seed", &ScorerParams::seed)
        .def_static("zeros", &ScorerParams::zeros, py::arg("spec"), py::arg("n_anchors"));

    py::class_<ScoreVector>(m, "ScoreVector")
        .def_readonly("logits", &ScoreVector::logits)
        .def_readonly("probs", &ScoreVector::probs)
        .def_readonly("env_mask", &ScoreVector::env_mask)
        .def_readonly("fallback_unmasked", &ScoreVector::fallback_unmasked);

    py::class_<TopKSelection>(m, "TopKSelection")
        .def_readonly("indices", &TopKSelection::indices)
        .def_readonly("logits", &TopKSelection::logits)
        .def_readonly("probs", &TopKSelection::probs);

    py::class_<PrototypeSet>(m, "PrototypeSet")
        .def(py::init<>())
        .def_readwrite("agent_id", &PrototypeSet::agent_id)
        .def_readwrite("pose", &PrototypeSet::pose)
        .def_readwrite("anchor_indices", &PrototypeSet::anchor_indices)
        .def_readwrite("trajectories", &PrototypeSet::trajectories)
        .def_readwrite("latents", &PrototypeSet::latents)
        .def_readwrite("logits", &PrototypeSet::logits)
        .def_readwrite("probs", &PrototypeSet::probs)
        .def_readwrite("fallback_unmasked", &PrototypeSet::fallback_unmasked)
        .def("k", &PrototypeSet::k);

    py::class_<WtaResult>(m, "WtaResult")
        .def_readonly("loss", &WtaResult::loss)
        .def_readonly("winner", &WtaResult::winner);

    py::class_<TrainingExample>(m, "TrainingExample")
        .def(py::init<>())
        .def_readwrite("features", &TrainingExample::features)
        .def_readwrite("gt_winner", &TrainingExample::gt_winner)
        .def_readwrite("env_mask", &TrainingExample::env_mask);

    py::class_<ScorerTrainReport>(m, "ScorerTrainReport")
        .def_readonly("loss_curve", &ScorerTrainReport::loss_curve)
        .def_readonly("skipped_masked_gt", &ScorerTrainReport::skipped_masked_gt);

    m.def("agent_features", &agent_features, py::arg("history"), py::arg("dist"),
          py::arg("basis"));
    m.def("score_anchors_baseline", &score_anchors_baseline, py::arg("features"),
          py::arg("db"), py::arg("temperature") = 0.1);
    m.def("score_anchors_trained", &score_anchors_trained);
    m.def("env_masked_softmax", &env_masked_softmax);
    m.def("select_top_k", &select_top_k);
    m.def("materialize_prototypes", &materialize_prototypes, py::arg("selection"),
          py::arg("db"), py::arg("pose"), py::arg("agent_id"), py::arg("dt") = 0.4);
    m.def(
        "focal_loss",
        [](double p, double alpha, double gamma) { return focal_loss(p, alpha, gamma); },
        py::arg("prob_of_gt"), py::arg("alpha") = 0.25, py::arg("gamma") = 2.0);
    m.def("wta_regression_loss", &wta_regression_loss);
    m.def(
        "scorer_loss_and_grad",
        [](const ScorerParams& params, const std::vector<TrainingExample>& dataset,
           double alpha, double gamma) {
            Eigen::MatrixXd gw;
            Eigen::VectorXd gb;
            int skipped = 0;
            const double loss =
                scorer_loss_and_grad(params, dataset, &gw, &gb, &skipped, alpha, gamma);
            return py::make_tuple(loss, gw, gb, skipped);
        },
        py::arg("params"), py::arg("dataset"), py::arg("alpha") = 0.25,
        py::arg("gamma") = 2.0,
        "Returns (loss, grad_weights, grad_bias, skipped_masked_gt).");
    m.def("train_scorer", &train_scorer, py::arg("dataset"), py::arg("params"),
          py::arg("epochs"), py::arg("learning_rate"), py::arg("seed"),
          "Updates `params` in place and returns the training report.");
    m.def("scorer_params_to_json", &scorer_params_to_json);
    m.def("scorer_params_from_json", &scorer_params_from_json);
    m.def("save_scorer_params", &save_scorer_params);
    m.def("load_scorer_params", &load_scorer_params);

    // ---- scene MRF ----
    py::class_<PairwiseParams>(m, "PairwiseParams")
        .def(py::init<>())
        .def_readwrite("bilinear", &PairwiseParams::bilinear)
        .def_readwrite("offset", &PairwiseParams::offset)
        .def("empty", &PairwiseParams::empty);

    py::class_<MrfConfig>(m, "MrfConfig")
        .def(py::init<>())
        .def_readwrite("edge_radius", &MrfConfig::edge_radius)
        .def_readwrite("clearance", &MrfConfig::clearance)
        .def_readwrite("scale", &MrfConfig::scale)
        .def_readwrite("collision_radius", &MrfConfig::collision_radius)
        .def_readwrite("collision_penalty", &MrfConfig::collision_penalty)
        .def_readwrite("a2a_filter", &MrfConfig::a2a_filter)
        .def_readwrite("learned", &MrfConfig::learned);

    py::class_<MrfEdge>(m, "MrfEdge")
        .def_readonly("a", &MrfEdge::a)
        .def_readonly("b", &MrfEdge::b)
        .def_readonly("pairwise", &MrfEdge::pairwise);

    py::class_<SceneMrf>(m, "SceneMrf")
        .def_readonly("agents", &SceneMrf::agents)
        .def_readonly("unary", &SceneMrf::unary)
        .def_readonly("edges", &SceneMrf::edges)
        .def("n_agents", &SceneMrf::n_agents)
        .def("n_states", &SceneMrf::n_states);

    py::enum_<ChainMode>(m, "ChainMode")
        .value("SEQUENTIAL", ChainMode::kSequential)
        .value("PARALLEL", ChainMode::kParallel);

    py::class_<GibbsConfig>(m, "GibbsConfig")
        .def(py::init<>())
        .def_readwrite("n_samples", &GibbsConfig::n_samples)
        .def_readwrite("burn_in", &GibbsConfig::burn_in)
        .def_readwrite("mode", &GibbsConfig::mode)
        .def_readwrite("seed", &GibbsConfig::seed)
        .def_readwrite("workers", &GibbsConfig::workers);

    py::class_<SampleSet>(m, "SampleSet")
        .def_readonly("assignments", &SampleSet::assignments)
        .def("n_samples", &SampleSet::n_samples);

    py::class_<BpConfig>(m, "BpConfig")
        .def(py::init<>())
        .def_readwrite("max_iterations", &BpConfig::max_iterations)
        .def_readwrite("damping", &BpConfig::damping)
        .def_readwrite("tolerance", &BpConfig::tolerance);

    py::class_<PairwiseExample>(m, "PairwiseExample")
        .def(py::init<>())
        .def_readwrite("latents_a", &PairwiseExample::latents_a)
        .def_readwrite("latents_b", &PairwiseExample::latents_b)
        .def_readwrite("gt_a", &PairwiseExample::gt_a)
        .def_readwrite("gt_b", &PairwiseExample::gt_b);

    py::class_<PairwiseTrainReport>(m, "PairwiseTrainReport")
        .def_readonly("loss_curve", &PairwiseTrainReport::loss_curve);

    m.def("min_traj_distance", &min_traj_distance);
    m.def("clearance_log_sigmoid", &clearance_log_sigmoid, py::arg("d"),
          py::arg("clearance") = 0.2, py::arg("scale") = 0.5);
    m.def("build_scene_mrf", &build_scene_mrf, py::arg("agents"), py::arg("config"),
          py::arg("basis") = nullptr);
    m.def("mrf_energy", &mrf_energy);
    m.def("gibbs_sample", &gibbs_sample);
    m.def(
        "loopy_bp_beliefs",
        [](const SceneMrf& mrf, const BpConfig& config) {
            bool converged = false;
            std::vector<Eigen::VectorXd> beliefs = loopy_bp_beliefs(mrf, config, &converged);
            return py::make_tuple(beliefs, converged);
        },
        py::arg("mrf"), py::arg("config") = BpConfig{});
    m.def("rank_aligned_samples", &rank_aligned_samples, py::arg("mrf"),
          py::arg("beliefs"), py::arg("n_samples"));
    m.def("realize_predictions", &realize_predictions);
    m.def("gt_pair_indices", &gt_pair_indices, py::arg("protos_a"), py::arg("protos_b"),
          py::arg("gt_a"), py::arg("gt_b"));
    m.def(
        "pairwise_loss_and_grad",
        [](const PairwiseParams& params, const std::vector<PairwiseExample>& dataset,
           double alpha, double gamma) {
            Eigen::MatrixXd gb;
            double go = 0.0;
            const double loss = pairwise_loss_and_grad(params, dataset, &gb, &go, alpha, gamma);
            return py::make_tuple(loss, gb, go);
        },
        py::arg("params"), py::arg("dataset"), py::arg("alpha") = 0.25,
        py::arg("gamma") = 2.0, "Returns (loss, grad_bilinear, grad_offset).");
    m.def("train_pairwise", &train_pairwise, py::arg("dataset"), py::arg("params"),
          py::arg("epochs"), py::arg("learning_rate"),
          "Updates `params` in place and returns the training report.");

    // ---- metrics ----
    py::class_<ScenePredictionSet>(m, "ScenePredictionSet")
        .def(py::init<>())
        .def_readwrite("scene_id", &ScenePredictionSet::scene_id)
        .def_readwrite("agent_ids", &ScenePredictionSet::agent_ids)
        .def_readwrite("samples", &ScenePredictionSet::samples)
        .def_readwrite("energies", &ScenePredictionSet::energies)
        .def_readwrite("assignments", &ScenePredictionSet::assignments)
        .def_readwrite("fallback_unmasked", &ScenePredictionSet::fallback_unmasked)
        .def("n_samples", &ScenePredictionSet::n_samples)
        .def("n_agents", &ScenePredictionSet::n_agents);

    py::class_<MetricsReport>(m, "MetricsReport")
        .def(py::init<>())
        .def_readwrite("min_ade", &MetricsReport::min_ade)
        .def_readwrite("min_fde", &MetricsReport::min_fde)
        .def_readwrite("jade", &MetricsReport::jade)
        .def_readwrite("jfde", &MetricsReport::jfde)
        .def_readwrite("avg_ade", &MetricsReport::avg_ade)
        .def_readwrite("avg_fde", &MetricsReport::avg_fde)
        .def_readwrite("a2a_rate", &MetricsReport::a2a_rate)
        .def_readwrite("env_rate", &MetricsReport::env_rate)
        .def_readwrite("nll", &MetricsReport::nll)
        .def_readwrite("n_scenes", &MetricsReport::n_scenes)
        .def_readwrite("n_agents", &MetricsReport::n_agents)
        .def_readwrite("n_samples", &MetricsReport::n_samples)
        .def_readwrite("collision_threshold", &MetricsReport::collision_threshold);

    py::class_<MetricsAccumulator>(m, "MetricsAccumulator")
        .def(py::init<>())
        .def("add", &MetricsAccumulator::add)
        .def("report", &MetricsAccumulator::report)
        .def("empty", &MetricsAccumulator::empty);

    m.def("ade", &ade);
    m.def("fde", &fde);
    m.def("min_ade_fde", &min_ade_fde);
    m.def("jade_jfde", &jade_jfde);
    m.def("avg_ade_fde", &avg_ade_fde);
    m.def("a2a_collision_rate", &a2a_collision_rate, py::arg("preds"),
          py::arg("threshold") = 0.2);
    m.def("env_collision_rate", &env_collision_rate);
    m.def("kde_nll", &kde_nll);
    m.def("evaluate_scene", &evaluate_scene, py::arg("gt"), py::arg("preds"),
          py::arg("map") = nullptr, py::arg("collision_threshold") = 0.2);
    m.def("metrics_report_to_json", &metrics_report_to_json);

    // ---- data I/O ----
    py::class_<RawAnnotation>(m, "RawAnnotation")
        .def(py::init<>())
        .def(py::init([](long frame, int agent_id, double x, double y) {
                 return RawAnnotation{frame, agent_id, x, y};
             }),
             py::arg("frame"), py::arg("agent_id"), py::arg("x"), py::arg("y"))
        .def_readwrite("frame", &RawAnnotation::frame)
        .def_readwrite("agent_id", &RawAnnotation::agent_id)
        .def_readwrite("x", &RawAnnotation::x)
        .def_readwrite("y", &RawAnnotation::y);

    py::class_<WindowConfig>(m, "WindowConfig")
        .def(py::init<>())
        .def_readwrite("obs_len", &WindowConfig::obs_len)
        .def_readwrite("pred_len", &WindowConfig::pred_len)
        .def_readwrite("stride", &WindowConfig::stride)
        .def_readwrite("frame_step", &WindowConfig::frame_step)
        .def_readwrite("dt", &WindowConfig::dt)
        .def("horizon", &WindowConfig::horizon);

    py::enum_<ScenarioKind>(m, "ScenarioKind")
        .value("CROSSING", ScenarioKind::kCrossing)
        .value("PARALLEL", ScenarioKind::kParallel)
        .value("CIRCLE", ScenarioKind::kCircle)
        .value("HEAD_ON", ScenarioKind::kHeadOn);

    py::class_<SyntheticScenario>(m, "SyntheticScenario")
        .def(py::init<>())
        .def_readwrite("kind", &SyntheticScenario::kind)
        .def_readwrite("n_agents", &SyntheticScenario::n_agents)
        .def_readwrite("speed", &SyntheticScenario::speed)
        .def_readwrite("noise_std", &SyntheticScenario::noise_std)
        .def_readwrite("seed", &SyntheticScenario::seed)
        .def_readwrite("gap", &SyntheticScenario::gap)
        .def_readwrite("obs_len", &SyntheticScenario::obs_len)
        .def_readwrite("pred_len", &SyntheticScenario::pred_len)
        .def_readwrite("dt", &SyntheticScenario::dt);

    py::class_<SplitConfig>(m, "SplitConfig")
        .def_readonly("train", &SplitConfig::train)
        .def_readonly("test", &SplitConfig::test)
        .def_readonly("frame_step", &SplitConfig::frame_step)
        .def_readonly("stride", &SplitConfig::stride);

    m.def("parse_trajectory_file", &parse_trajectory_file);
    m.def("write_trajectory_file", &write_trajectory_file);
    m.def("make_windows", &make_windows, py::arg("rows"), py::arg("cfg"),
          py::arg("id_prefix") = "");
    m.def("scenario_kind_from_string", &scenario_kind_from_string);
    m.def("generate_synthetic_scene", &generate_synthetic_scene);
    m.def("load_navigability_map", &load_navigability_map, py::arg("png_path"),
          py::arg("json_path"));
    m.def("save_navigability_map", &save_navigability_map, py::arg("map"),
          py::arg("png_path"), py::arg("json_path"));
    m.def("load_split_config", &load_split_config);
    m.def("write_predictions", &write_predictions, py::arg("scenes"), py::arg("seed"),
          py::arg("path"));
    m.def("read_predictions", &read_predictions);

    // ---- pipeline ----
    py::class_<RunConfig>(m, "RunConfig")
        .def(py::init<>())
        .def_readwrite("trajectories", &RunConfig::trajectories)
        .def_readwrite("split", &RunConfig::split)
        .def_readwrite("split_group", &RunConfig::split_group)
        .def_readwrite("synthetic", &RunConfig::synthetic)
        .def_readwrite("map_png", &RunConfig::map_png)
        .def_readwrite("map_json", &RunConfig::map_json)
        .def_readwrite("anchors", &RunConfig::anchors)
        .def_readwrite("scorer", &RunConfig::scorer)
        .def_readwrite("out", &RunConfig::out)
        .def_readwrite("window", &RunConfig::window)
        .def_readwrite("d_s", &RunConfig::d_s)
        .def_readwrite("n_anchors", &RunConfig::n_anchors)
        .def_readwrite("top_k", &RunConfig::top_k)
        .def_readwrite("n_samples", &RunConfig::n_samples)
        .def_readwrite("burn_in", &RunConfig::burn_in)
        .def_readwrite("collision_threshold", &RunConfig::collision_threshold)
        .def_readwrite("temperature", &RunConfig::temperature)
        .def_readwrite("edge_radius", &RunConfig::edge_radius)
        .def_readwrite("mask_value", &RunConfig::mask_value)
        .def_readwrite("max_range", &RunConfig::max_range)
        .def_readwrite("clearance", &RunConfig::clearance)
        .def_readwrite("clearance_scale", &RunConfig::clearance_scale)
        .def_readwrite("seed", &RunConfig::seed)
        .def_readwrite("workers", &RunConfig::workers)
        .def_readwrite("env_filter", &RunConfig::env_filter)
        .def_readwrite("a2a_filter", &RunConfig::a2a_filter)
        .def_readwrite("use_gibbs", &RunConfig::use_gibbs)
        .def_readwrite("chain_mode", &RunConfig::chain_mode);

    py::class_<PredictSummary>(m, "PredictSummary")
        .def_readonly("scenes", &PredictSummary::scenes)
        .def_readonly("mean_energy", &PredictSummary::mean_energy)
        .def_readonly("wall_seconds", &PredictSummary::wall_seconds);

    py::class_<BuildAnchorsSummary>(m, "BuildAnchorsSummary")
        .def_readonly("n_anchors", &BuildAnchorsSummary::n_anchors)
        .def_readonly("d_s", &BuildAnchorsSummary::d_s)
        .def_readonly("reconstruction_residual",
                      &BuildAnchorsSummary::reconstruction_residual)
        .def_readonly("kmeans_inertia", &BuildAnchorsSummary::kmeans_inertia)
        .def_readonly("kmeans_iterations", &BuildAnchorsSummary::kmeans_iterations);

    m.def("run_config_from_json", &run_config_from_json);
    m.def("load_run_config", &load_run_config);
    m.def("load_scenes", &load_scenes);
    m.def("predict_scene", &predict_scene, py::arg("scene"), py::arg("db"),
          py::arg("map"), py::arg("scorer"), py::arg("cfg"), py::arg("scene_seed"));
    m.def("run_build_anchors", &run_build_anchors, py::arg("cfg"), py::arg("out_path"));
    m.def("run_predict", &run_predict, py::arg("cfg"), py::arg("out_path"));
    m.def("run_evaluate", &run_evaluate, py::arg("cfg"), py::arg("predictions_path"));
    m.def("run_plot", &run_plot, py::arg("cfg"), py::arg("predictions_path"),
          py::arg("scene_id") = "");
    m.def("render_scene_svg", &render_scene_svg, py::arg("preds"), py::arg("gt") = nullptr,
          py::arg("map") = nullptr, py::arg("collision_threshold") = 0.2);
    m.def("mix_seed", &mix_seed);
}
