// scenealign: anchor building, scene prediction, evaluation, and plotting.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "nlohmann/json.hpp"
#include "scenealign/errors.hpp"
#include "scenealign/pipeline.hpp"

namespace {

using scenealign::ChainMode;
using scenealign::DataError;
using scenealign::RunConfig;

struct CommonArgs {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    int workers = 1;
    std::string chain_mode;
    bool no_env_filter = false;
    bool no_a2a_filter = false;
    bool no_gibbs = false;

    CLI::Option* out_opt = nullptr;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* workers_opt = nullptr;
    CLI::Option* chain_opt = nullptr;
};

void add_common_options(CLI::App* cmd, CommonArgs& args, bool config_required) {
    auto* config_opt =
        cmd->add_option("--config", args.config, "run configuration (JSON file)");
    if (config_required) config_opt->required();
    args.out_opt = cmd->add_option("--out", args.out, "output path (overrides config 'out')");
    args.seed_opt =
        cmd->add_option("--seed", args.seed, "root RNG seed (overrides config)");
    args.workers_opt =
        cmd->add_option("--workers", args.workers, "worker threads (overrides config)");
    cmd->add_flag("--no-env-filter", args.no_env_filter,
                  "skip the navigability pre-labeling of anchors");
    cmd->add_flag("--no-a2a-filter", args.no_a2a_filter,
                  "skip the hard pairwise collision mask");
    cmd->add_flag("--no-gibbs", args.no_gibbs,
                  "rank-aligned sampling instead of Gibbs sweeps");
    args.chain_opt = cmd->add_option("--chain-mode", args.chain_mode,
                                     "Gibbs chain layout (overrides config)")
                         ->check(CLI::IsMember({"sequential", "parallel"}));
}

RunConfig config_with_overrides(const CommonArgs& args) {
    RunConfig cfg =
        args.config.empty() ? RunConfig{} : scenealign::load_run_config(args.config);
    if (*args.seed_opt) cfg.seed = args.seed;
    if (*args.workers_opt) cfg.workers = args.workers;
    if (args.no_env_filter) cfg.env_filter = false;
    if (args.no_a2a_filter) cfg.a2a_filter = false;
    if (args.no_gibbs) cfg.use_gibbs = false;
    if (*args.chain_opt) {
        cfg.chain_mode = args.chain_mode == "sequential" ? ChainMode::kSequential
                                                         : ChainMode::kParallel;
    }
    if (*args.out_opt) cfg.out = args.out;
    if (cfg.workers < 1) throw DataError("config: workers must be >= 1");
    return cfg;
}

void write_text_output(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path + " for writing");
    out << text;
    if (!out) throw DataError("write failed for " + path);
}

void cmd_build_anchors(const CommonArgs& args) {
    const RunConfig cfg = config_with_overrides(args);
    std::string out = cfg.out.empty() ? cfg.anchors : cfg.out;
    if (out.empty()) {
        throw DataError("build-anchors: no output path (--out or config 'out'/'anchors')");
    }
    const auto summary = scenealign::run_build_anchors(cfg, out);
    std::cout << "anchors: " << summary.n_anchors << " prototypes, d_s=" << summary.d_s
              << ", reconstruction residual " << summary.reconstruction_residual
              << ", k-means inertia " << summary.kmeans_inertia << " ("
              << summary.kmeans_iterations << " iterations) -> " << out << "\n";
}

void cmd_predict(const CommonArgs& args) {
    const RunConfig cfg = config_with_overrides(args);
    if (cfg.out.empty()) throw DataError("predict: no output path (--out or config 'out')");
    const auto summary = scenealign::run_predict(cfg, cfg.out);
    std::cout << "predict: " << summary.scenes << " scenes, mean energy "
              << summary.mean_energy << ", wall " << summary.wall_seconds << " s -> "
              << cfg.out << "\n";
}

void cmd_evaluate(const CommonArgs& args, const std::string& predictions) {
    const RunConfig cfg = config_with_overrides(args);
    const auto report = scenealign::run_evaluate(cfg, predictions);
    nlohmann::json j = nlohmann::json::parse(scenealign::metrics_report_to_json(report));
    j["seed"] = cfg.seed;
    write_text_output(j.dump(2) + "\n", cfg.out);
}

void cmd_plot(const CommonArgs& args, const std::string& predictions,
              const std::string& scene) {
    const RunConfig cfg = config_with_overrides(args);
    std::string svg = scenealign::run_plot(cfg, predictions, scene);
    // Echo the seed the same way the JSON outputs do, without disturbing the
    // rendered geometry.
    const auto first_line_end = svg.find('\n');
    if (first_line_end != std::string::npos) {
        svg.insert(first_line_end + 1, "<!-- seed " + std::to_string(cfg.seed) + " -->\n");
    }
    write_text_output(svg, cfg.out);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"scene-aligned multi-agent trajectory prediction"};
    app.require_subcommand(1);

    CommonArgs build_args, predict_args, eval_args, plot_args;
    std::string eval_predictions, plot_predictions, plot_scene;

    auto* build =
        app.add_subcommand("build-anchors", "cluster training futures into an anchor set");
    add_common_options(build, build_args, /*config_required=*/true);
    build->callback([&] { cmd_build_anchors(build_args); });

    auto* predict =
        app.add_subcommand("predict", "sample scene-consistent futures for every scene");
    add_common_options(predict, predict_args, /*config_required=*/true);
    predict->callback([&] { cmd_predict(predict_args); });

    auto* evaluate =
        app.add_subcommand("evaluate", "score a predictions file against ground truth");
    evaluate->add_option("predictions", eval_predictions, "JSON-lines predictions file")
        ->required();
    add_common_options(evaluate, eval_args, /*config_required=*/true);
    evaluate->callback([&] { cmd_evaluate(eval_args, eval_predictions); });

    auto* plot = app.add_subcommand("plot", "render one scene's predictions as SVG");
    plot->add_option("predictions", plot_predictions, "JSON-lines predictions file")
        ->required();
    plot->add_option("--scene", plot_scene, "scene id (default: first in the file)");
    add_common_options(plot, plot_args, /*config_required=*/false);
    plot->callback([&] { cmd_plot(plot_args, plot_predictions, plot_scene); });

    try {
        app.parse(argc, argv);
        return 0;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const scenealign::NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
