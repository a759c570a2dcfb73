#include "scenealign/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "nlohmann/json.hpp"

namespace scenealign {

namespace {

// Shape checks shared by the displacement metrics.
void check_shapes(const Scene& gt, const ScenePredictionSet& preds) {
    if (!gt.has_futures()) {
        throw std::invalid_argument("metrics: scene '" + gt.id + "' has no ground truth futures");
    }
    if (gt.n_agents() != static_cast<std::size_t>(preds.n_agents())) {
        throw std::invalid_argument("metrics: agent count mismatch for scene '" + gt.id + "'");
    }
    if (preds.samples.empty()) {
        throw std::invalid_argument("metrics: no prediction samples for scene '" + gt.id + "'");
    }
    for (const auto& sample : preds.samples) {
        if (sample.size() != gt.n_agents()) {
            throw std::invalid_argument("metrics: ragged sample for scene '" + gt.id + "'");
        }
        for (std::size_t i = 0; i < sample.size(); ++i) {
            if (sample[i].size() != gt.futures[i].size()) {
                throw std::invalid_argument("metrics: horizon mismatch for scene '" + gt.id + "'");
            }
        }
    }
}

}  // namespace

double ade(const Trajectory& pred, const Trajectory& gt) {
    if (pred.size() != gt.size()) throw std::invalid_argument("ade: length mismatch");
    if (gt.empty()) throw std::invalid_argument("ade: empty trajectory");
    double total = 0.0;
    for (std::size_t t = 0; t < gt.size(); ++t) total += distance(pred[t], gt[t]);
    return total / static_cast<double>(gt.size());
}

double fde(const Trajectory& pred, const Trajectory& gt) {
    if (pred.size() != gt.size()) throw std::invalid_argument("fde: length mismatch");
    if (gt.empty()) throw std::invalid_argument("fde: empty trajectory");
    return distance(pred.back(), gt.back());
}

std::pair<double, double> min_ade_fde(const Scene& gt, const ScenePredictionSet& preds) {
    check_shapes(gt, preds);
    double ade_total = 0.0, fde_total = 0.0;
    for (std::size_t i = 0; i < gt.n_agents(); ++i) {
        double best_ade = std::numeric_limits<double>::infinity();
        double best_fde = std::numeric_limits<double>::infinity();
        for (const auto& sample : preds.samples) {
            best_ade = std::min(best_ade, ade(sample[i], gt.futures[i]));
            best_fde = std::min(best_fde, fde(sample[i], gt.futures[i]));
        }
        ade_total += best_ade;
        fde_total += best_fde;
    }
    const double n = static_cast<double>(gt.n_agents());
    return {ade_total / n, fde_total / n};
}

std::pair<double, double> jade_jfde(const Scene& gt, const ScenePredictionSet& preds) {
    check_shapes(gt, preds);
    double best_ade = std::numeric_limits<double>::infinity();
    double best_fde = std::numeric_limits<double>::infinity();
    const double n = static_cast<double>(gt.n_agents());
    for (const auto& sample : preds.samples) {
        double ade_total = 0.0, fde_total = 0.0;
        for (std::size_t i = 0; i < gt.n_agents(); ++i) {
            ade_total += ade(sample[i], gt.futures[i]);
            fde_total += fde(sample[i], gt.futures[i]);
        }
        best_ade = std::min(best_ade, ade_total / n);
        best_fde = std::min(best_fde, fde_total / n);
    }
    return {best_ade, best_fde};
}

std::pair<double, double> avg_ade_fde(const Scene& gt, const ScenePredictionSet& preds) {
    check_shapes(gt, preds);
    double ade_total = 0.0, fde_total = 0.0;
    for (const auto& sample : preds.samples) {
        for (std::size_t i = 0; i < gt.n_agents(); ++i) {
            ade_total += ade(sample[i], gt.futures[i]);
            fde_total += fde(sample[i], gt.futures[i]);
        }
    }
    const double count = static_cast<double>(preds.samples.size() * gt.n_agents());
    return {ade_total / count, fde_total / count};
}

double a2a_collision_rate(const ScenePredictionSet& preds, double threshold) {
    if (preds.n_agents() < 1) throw std::invalid_argument("a2a_collision_rate: no agents");
    if (preds.samples.empty()) throw std::invalid_argument("a2a_collision_rate: no samples");
    long events = 0;
    for (const auto& sample : preds.samples) {
        if (sample.size() != static_cast<std::size_t>(preds.n_agents())) {
            throw std::invalid_argument("a2a_collision_rate: ragged sample");
        }
        for (std::size_t i = 0; i < sample.size(); ++i) {
            bool hit = false;
            for (std::size_t j = 0; j < sample.size() && !hit; ++j) {
                if (j == i) continue;
                for (std::size_t t = 0; t < sample[i].size(); ++t) {
                    if (distance(sample[i][t], sample[j][t]) < threshold) {
                        hit = true;
                        break;
                    }
                }
            }
            if (hit) ++events;
        }
    }
    return static_cast<double>(events) /
           static_cast<double>(preds.samples.size() * static_cast<std::size_t>(preds.n_agents()));
}

double env_collision_rate(const ScenePredictionSet& preds, const NavigabilityMap& map) {
    if (preds.samples.empty()) throw std::invalid_argument("env_collision_rate: no samples");
    long events = 0;
    long total = 0;
    for (const auto& sample : preds.samples) {
        for (const auto& traj : sample) {
            if (trajectory_violates(map, traj)) ++events;
            ++total;
        }
    }
    return static_cast<double>(events) / static_cast<double>(total);
}

double kde_nll(const Scene& gt, const ScenePredictionSet& preds) {
    check_shapes(gt, preds);
    const int n = preds.n_samples();
    // Silverman factor (4/(d+2))^{1/(d+4)} is exactly 1 for d = 2.
    const double bw_scale = std::pow(static_cast<double>(n), -1.0 / 6.0);

    double nll_total = 0.0;
    for (std::size_t i = 0; i < gt.n_agents(); ++i) {
        const std::size_t horizon = gt.futures[i].size();
        double agent_nll = 0.0;
        for (std::size_t t = 0; t < horizon; ++t) {
            double mean_x = 0.0, mean_y = 0.0;
            for (const auto& sample : preds.samples) {
                mean_x += sample[i][t].x;
                mean_y += sample[i][t].y;
            }
            mean_x /= n;
            mean_y /= n;
            double var_x = 0.0, var_y = 0.0;
            for (const auto& sample : preds.samples) {
                var_x += (sample[i][t].x - mean_x) * (sample[i][t].x - mean_x);
                var_y += (sample[i][t].y - mean_y) * (sample[i][t].y - mean_y);
            }
            const double ddof = n > 1 ? static_cast<double>(n - 1) : 1.0;
            const double h_x = std::max(kKdeBandwidthFloor, bw_scale * std::sqrt(var_x / ddof));
            const double h_y = std::max(kKdeBandwidthFloor, bw_scale * std::sqrt(var_y / ddof));

            // log (1/n) sum_s N(gx; xs, hx^2) N(gy; ys, hy^2), via log-sum-exp.
            const Point2 g = gt.futures[i][t];
            double max_term = -std::numeric_limits<double>::infinity();
            std::vector<double> terms;
            terms.reserve(static_cast<std::size_t>(n));
            for (const auto& sample : preds.samples) {
                const double zx = (g.x - sample[i][t].x) / h_x;
                const double zy = (g.y - sample[i][t].y) / h_y;
                const double term = -0.5 * (zx * zx + zy * zy);
                terms.push_back(term);
                max_term = std::max(max_term, term);
            }
            double acc = 0.0;
            for (double term : terms) acc += std::exp(term - max_term);
            const double log_density = max_term + std::log(acc) - std::log(static_cast<double>(n)) -
                                       std::log(2.0 * std::numbers::pi * h_x * h_y);
            agent_nll += -log_density;
        }
        nll_total += agent_nll / static_cast<double>(horizon);
    }
    return nll_total / static_cast<double>(gt.n_agents());
}

MetricsReport evaluate_scene(const Scene& gt, const ScenePredictionSet& preds,
                             const NavigabilityMap* map, double collision_threshold) {
    MetricsReport r;
    std::tie(r.min_ade, r.min_fde) = min_ade_fde(gt, preds);
    std::tie(r.jade, r.jfde) = jade_jfde(gt, preds);
    std::tie(r.avg_ade, r.avg_fde) = avg_ade_fde(gt, preds);
    r.a2a_rate = a2a_collision_rate(preds, collision_threshold);
    if (map) r.env_rate = env_collision_rate(preds, *map);
    r.nll = kde_nll(gt, preds);
    r.n_scenes = 1;
    r.n_agents = preds.n_agents();
    r.n_samples = preds.n_samples();
    r.collision_threshold = collision_threshold;
    return r;
}

void MetricsAccumulator::add(const MetricsReport& scene) {
    const double agents = static_cast<double>(scene.n_agents);
    const double pairs = agents * static_cast<double>(scene.n_samples);
    min_ade_sum_ += scene.min_ade * agents;
    min_fde_sum_ += scene.min_fde * agents;
    jade_sum_ += scene.jade * agents;
    jfde_sum_ += scene.jfde * agents;
    avg_ade_sum_ += scene.avg_ade * agents;
    avg_fde_sum_ += scene.avg_fde * agents;
    agents_ += agents;
    a2a_events_ += scene.a2a_rate * pairs;
    a2a_pairs_ += pairs;
    if (!std::isnan(scene.env_rate)) {
        env_events_ += scene.env_rate * pairs;
        env_pairs_ += pairs;
    }
    if (!std::isnan(scene.nll)) {
        nll_sum_ += scene.nll * agents;
        nll_agents_ += agents;
    }
    scenes_ += scene.n_scenes;
    samples_ += scene.n_samples;
    threshold_ = scene.collision_threshold;
}

MetricsReport MetricsAccumulator::report() const {
    MetricsReport r;
    if (agents_ > 0) {
        r.min_ade = min_ade_sum_ / agents_;
        r.min_fde = min_fde_sum_ / agents_;
        r.jade = jade_sum_ / agents_;
        r.jfde = jfde_sum_ / agents_;
        r.avg_ade = avg_ade_sum_ / agents_;
        r.avg_fde = avg_fde_sum_ / agents_;
    }
    if (a2a_pairs_ > 0) r.a2a_rate = a2a_events_ / a2a_pairs_;
    if (env_pairs_ > 0) r.env_rate = env_events_ / env_pairs_;
    if (nll_agents_ > 0) r.nll = nll_sum_ / nll_agents_;
    r.n_scenes = scenes_;
    r.n_agents = static_cast<long>(agents_);
    r.n_samples = samples_;
    r.collision_threshold = threshold_;
    return r;
}

std::string metrics_report_to_json(const MetricsReport& report) {
    nlohmann::json j;
    auto put = [&](const char* key, double v) {
        if (std::isnan(v)) {
            j["metrics"][key] = nullptr;
        } else {
            j["metrics"][key] = v;
        }
    };
    put("min_ade", report.min_ade);
    put("min_fde", report.min_fde);
    put("jade", report.jade);
    put("jfde", report.jfde);
    put("avg_ade", report.avg_ade);
    put("avg_fde", report.avg_fde);
    put("a2a_collision_rate", report.a2a_rate);
    put("env_collision_rate", report.env_rate);
    put("kde_nll", report.nll);
    j["counts"] = {{"scenes", report.n_scenes},
                   {"agents", report.n_agents},
                   {"samples", report.n_samples}};
    j["config"] = {{"collision_threshold_m", report.collision_threshold},
                   {"kde_bandwidth_rule", "silverman_per_dim"}};
    return j.dump();
}

}  // namespace scenealign
