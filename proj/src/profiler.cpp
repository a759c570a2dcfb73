#include "scenealign/profiler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "nlohmann/json.hpp"
#include "scenealign/errors.hpp"

namespace scenealign {

using json = nlohmann::json;

AgentFeatures agent_features(const Trajectory& history, const DistanceArray& dist,
                             const SvdBasis& basis) {
    if (history.size() < 2) {
        throw std::invalid_argument("agent_features: history needs at least 2 points");
    }
    FeatureSpec spec;
    spec.d_s = basis.d_s();
    spec.t_f = basis.t_f();

    AgentFeatures out;
    out.spec = spec;
    out.values = Eigen::VectorXd::Zero(spec.dim());

    const Heading heading = heading_from_history(history);
    const AgentPose pose{history.back(), heading.radians};
    out.degenerate = heading.degenerate;

    // Latent of the constant-velocity future in the agent frame. A stationary
    // agent extrapolates to the origin, so the latent is all zeros.
    const Trajectory cv = constant_velocity_extrapolate(history, spec.t_f);
    out.values.head(spec.d_s) = compress(flatten(to_agent_frame(cv, pose)), basis);

    // Step-speed statistics over the history.
    std::vector<double> speeds;
    speeds.reserve(history.size() - 1);
    for (std::size_t i = 0; i + 1 < history.size(); ++i) {
        speeds.push_back(distance(history[i], history[i + 1]) / history.dt);
    }
    const double mean = std::accumulate(speeds.begin(), speeds.end(), 0.0) /
                        static_cast<double>(speeds.size());
    double var = 0.0;
    for (double s : speeds) var += (s - mean) * (s - mean);
    var /= static_cast<double>(speeds.size());
    out.values[spec.d_s] = mean;
    out.values[spec.d_s + 1] = speeds.back();
    out.values[spec.d_s + 2] = std::sqrt(var);

    // 10-degree sector minima of the obstacle distance array.
    for (int s = 0; s < spec.sectors; ++s) {
        double lo = dist.distances[static_cast<std::size_t>(s) * 10];
        for (int d = 1; d < 10; ++d) {
            lo = std::min(lo, dist.distances[static_cast<std::size_t>(s) * 10 + d]);
        }
        out.values[spec.d_s + spec.speed_stats + s] = lo;
    }
    return out;
}

ScorerParams ScorerParams::zeros(const FeatureSpec& spec, int n_anchors) {
    ScorerParams p;
    p.feature_spec = spec;
    p.weights = Eigen::MatrixXd::Zero(spec.dim(), n_anchors);
    p.bias = Eigen::VectorXd::Zero(n_anchors);
    return p;
}

Eigen::VectorXd score_anchors_baseline(const AgentFeatures& features,
                                       const AnchorDatabase& db, double temperature) {
    if (temperature <= 0.0) {
        throw std::invalid_argument("score_anchors_baseline: temperature must be positive");
    }
    const int d_s = db.basis.d_s();
    if (features.spec.d_s != d_s) {
        throw std::invalid_argument("score_anchors_baseline: latent width mismatch");
    }
    const Eigen::VectorXd latent = features.values.head(d_s);
    const double lnorm = latent.norm();
    Eigen::VectorXd scores = Eigen::VectorXd::Zero(db.compressed.rows());
    if (lnorm == 0.0) return scores;  // stationary agent: uninformative, flat
    for (Eigen::Index k = 0; k < db.compressed.rows(); ++k) {
        const double anorm = db.compressed.row(k).norm();
        if (anorm == 0.0) continue;
        scores[k] = latent.dot(db.compressed.row(k)) / (lnorm * anorm * temperature);
    }
    return scores;
}

Eigen::VectorXd score_anchors_trained(const AgentFeatures& features,
                                      const ScorerParams& params) {
    if (features.values.size() != params.weights.rows()) {
        throw std::invalid_argument("score_anchors_trained: feature width mismatch");
    }
    return params.weights.transpose() * features.values + params.bias;
}

ScoreVector env_masked_softmax(const Eigen::VectorXd& logits,
                               const std::vector<bool>& env_mask) {
    if (static_cast<Eigen::Index>(env_mask.size()) != logits.size()) {
        throw std::invalid_argument("env_masked_softmax: mask length mismatch");
    }
    ScoreVector out;
    out.logits = logits;
    out.env_mask = env_mask;
    out.probs = Eigen::VectorXd::Zero(logits.size());

    double max_logit = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < logits.size(); ++k) {
        if (env_mask[static_cast<std::size_t>(k)]) max_logit = std::max(max_logit, logits[k]);
    }
    if (!std::isfinite(max_logit)) throw NoValidAnchorsError();

    double total = 0.0;
    for (Eigen::Index k = 0; k < logits.size(); ++k) {
        if (!env_mask[static_cast<std::size_t>(k)]) continue;
        out.probs[k] = std::exp(logits[k] - max_logit);
        total += out.probs[k];
    }
    out.probs /= total;
    return out;
}

TopKSelection select_top_k(const ScoreVector& scores, int k) {
    if (k <= 0) throw std::invalid_argument("select_top_k: k must be positive");
    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(scores.probs.size()));
    for (Eigen::Index i = 0; i < scores.probs.size(); ++i) {
        if (scores.env_mask[static_cast<std::size_t>(i)]) order.push_back(static_cast<int>(i));
    }
    if (order.empty()) throw NoValidAnchorsError();
    if (k > static_cast<int>(order.size())) {
        throw std::invalid_argument("select_top_k: k=" + std::to_string(k) +
                                    " exceeds the " + std::to_string(order.size()) +
                                    " unmasked anchors");
    }
    // Stable ranking: higher probability first, lower index wins ties.
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (scores.probs[a] != scores.probs[b]) return scores.probs[a] > scores.probs[b];
        return a < b;
    });
    const int kept = k;
    TopKSelection sel;
    sel.indices.assign(order.begin(), order.begin() + kept);
    sel.logits.resize(kept);
    sel.probs.resize(kept);
    for (int i = 0; i < kept; ++i) {
        sel.logits[i] = scores.logits[sel.indices[static_cast<std::size_t>(i)]];
        sel.probs[i] = scores.probs[sel.indices[static_cast<std::size_t>(i)]];
    }
    const double total = sel.probs.sum();
    sel.probs /= total;
    return sel;
}

PrototypeSet materialize_prototypes(const TopKSelection& selection,
                                    const AnchorDatabase& db, const AgentPose& pose,
                                    int agent_id, double dt) {
    PrototypeSet set;
    set.agent_id = agent_id;
    set.pose = pose;
    set.anchor_indices = selection.indices;
    set.logits = selection.logits;
    set.probs = selection.probs;
    set.trajectories.reserve(selection.indices.size());
    set.latents.resize(static_cast<Eigen::Index>(selection.indices.size()), db.basis.d_s());
    for (std::size_t i = 0; i < selection.indices.size(); ++i) {
        const int idx = selection.indices[i];
        if (idx < 0 || idx >= static_cast<int>(db.anchors.size())) {
            throw std::out_of_range("materialize_prototypes: anchor index out of range");
        }
        Trajectory anchor = db.anchors[static_cast<std::size_t>(idx)];
        anchor.dt = dt;
        set.trajectories.push_back(from_agent_frame(anchor, pose));
        set.latents.row(static_cast<Eigen::Index>(i)) = db.compressed.row(idx);
    }
    return set;
}

double focal_loss(double prob_of_gt, double alpha, double gamma, bool* clamped) {
    double p = std::min(prob_of_gt, 1.0);
    const bool hit_floor = p < kFocalProbFloor;
    if (hit_floor) p = kFocalProbFloor;
    if (clamped) *clamped = hit_floor;
    return -alpha * std::pow(1.0 - p, gamma) * std::log(p);
}

WtaResult wta_regression_loss(const PrototypeSet& prototypes, const Trajectory& gt) {
    if (prototypes.trajectories.empty()) {
        throw std::invalid_argument("wta_regression_loss: empty prototype set");
    }
    WtaResult res;
    res.loss = std::numeric_limits<double>::infinity();
    const Eigen::VectorXd gt_flat = flatten(gt);
    for (std::size_t i = 0; i < prototypes.trajectories.size(); ++i) {
        const Eigen::VectorXd proto_flat = flatten(prototypes.trajectories[i]);
        if (proto_flat.size() != gt_flat.size()) {
            throw std::invalid_argument("wta_regression_loss: horizon mismatch");
        }
        const double l2 = (proto_flat - gt_flat).norm();
        if (l2 < res.loss) {
            res.loss = l2;
            res.winner = static_cast<int>(i);
        }
    }
    return res;
}

double scorer_loss_and_grad(const ScorerParams& params,
                            const std::vector<TrainingExample>& dataset,
                            Eigen::MatrixXd* grad_weights, Eigen::VectorXd* grad_bias,
                            int* skipped_masked_gt, double alpha, double gamma) {
    if (dataset.empty()) {
        throw std::invalid_argument("scorer_loss_and_grad: empty dataset");
    }
    const Eigen::Index n_anchors = params.bias.size();
    if (grad_weights) grad_weights->setZero(params.weights.rows(), params.weights.cols());
    if (grad_bias) grad_bias->setZero(n_anchors);

    double loss = 0.0;
    int used = 0;
    int skipped = 0;
    for (const auto& ex : dataset) {
        if (ex.features.size() != params.weights.rows()) {
            throw std::invalid_argument("scorer_loss_and_grad: feature width mismatch");
        }
        if (ex.gt_winner < 0 || ex.gt_winner >= n_anchors) {
            throw std::invalid_argument("scorer_loss_and_grad: gt winner out of range");
        }
        // A masked-out ground truth carries no gradient; count and move on.
        if (!ex.env_mask[static_cast<std::size_t>(ex.gt_winner)]) {
            ++skipped;
            continue;
        }
        const Eigen::VectorXd logits = params.weights.transpose() * ex.features + params.bias;
        const ScoreVector sv = env_masked_softmax(logits, ex.env_mask);
        const double p = sv.probs[ex.gt_winner];
        bool clamped = false;
        loss += focal_loss(p, alpha, gamma, &clamped);
        ++used;

        if ((grad_weights || grad_bias) && !clamped) {
            // d/dp of -alpha (1-p)^g ln p, then chained through the softmax.
            const double one_minus = 1.0 - p;
            const double dldp = alpha * gamma * std::pow(one_minus, gamma - 1.0) * std::log(p) -
                                alpha * std::pow(one_minus, gamma) / p;
            Eigen::VectorXd dlogits = Eigen::VectorXd::Zero(n_anchors);
            for (Eigen::Index k = 0; k < n_anchors; ++k) {
                if (!ex.env_mask[static_cast<std::size_t>(k)]) continue;
                const double indicator = (k == ex.gt_winner) ? 1.0 : 0.0;
                dlogits[k] = dldp * p * (indicator - sv.probs[k]);
            }
            if (grad_weights) *grad_weights += ex.features * dlogits.transpose();
            if (grad_bias) *grad_bias += dlogits;
        }
    }
    if (skipped_masked_gt) *skipped_masked_gt = skipped;
    if (used == 0) {
        throw std::invalid_argument("scorer_loss_and_grad: every ground truth is masked");
    }
    const double inv = 1.0 / static_cast<double>(used);
    if (grad_weights) *grad_weights *= inv;
    if (grad_bias) *grad_bias *= inv;
    return loss * inv;
}

ScorerTrainReport train_scorer(const std::vector<TrainingExample>& dataset,
                               ScorerParams& params, int epochs, double learning_rate,
                               std::uint64_t seed) {
    if (epochs < 0) throw std::invalid_argument("train_scorer: negative epoch count");
    if (learning_rate < 0.0) {
        throw std::invalid_argument("train_scorer: negative learning rate");
    }
    params.seed = seed;
    ScorerTrainReport report;
    report.loss_curve.reserve(static_cast<std::size_t>(epochs) + 1);
    Eigen::MatrixXd gw;
    Eigen::VectorXd gb;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        const double loss =
            scorer_loss_and_grad(params, dataset, &gw, &gb, &report.skipped_masked_gt);
        if (!std::isfinite(loss)) {
            throw NumericalError("train_scorer: loss diverged at epoch " +
                                     std::to_string(epoch) + " (loss=" +
                                     std::to_string(loss) + "); reduce the learning rate");
        }
        report.loss_curve.push_back(loss);
        params.weights -= learning_rate * gw;
        params.bias -= learning_rate * gb;
    }
    const double final_loss =
        scorer_loss_and_grad(params, dataset, nullptr, nullptr, &report.skipped_masked_gt);
    if (!std::isfinite(final_loss)) {
        throw NumericalError("train_scorer: loss diverged after final update");
    }
    report.loss_curve.push_back(final_loss);
    return report;
}

std::string scorer_params_to_json(const ScorerParams& params) {
    json j;
    json weights = json::array();
    for (Eigen::Index r = 0; r < params.weights.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < params.weights.cols(); ++c) {
            row.push_back(params.weights(r, c));
        }
        weights.push_back(std::move(row));
    }
    j["weights"] = std::move(weights);
    j["bias"] = std::vector<double>(params.bias.data(), params.bias.data() + params.bias.size());
    j["temperature"] = params.temperature;
    j["feature_spec"] = {{"d_s", params.feature_spec.d_s},
                         {"t_f", params.feature_spec.t_f},
                         {"speed_stats", params.feature_spec.speed_stats},
                         {"sectors", params.feature_spec.sectors}};
    j["seed"] = params.seed;
    return j.dump();
}

ScorerParams scorer_params_from_json(const std::string& text) {
    const json j = json::parse(text);
    ScorerParams p;
    const auto& spec = j.at("feature_spec");
    p.feature_spec.d_s = spec.at("d_s").get<int>();
    p.feature_spec.t_f = spec.at("t_f").get<int>();
    p.feature_spec.speed_stats = spec.at("speed_stats").get<int>();
    p.feature_spec.sectors = spec.at("sectors").get<int>();
    p.temperature = j.at("temperature").get<double>();
    p.seed = j.at("seed").get<std::uint64_t>();

    const auto bias = j.at("bias").get<std::vector<double>>();
    p.bias = Eigen::Map<const Eigen::VectorXd>(bias.data(), static_cast<Eigen::Index>(bias.size()));

    const auto& weights = j.at("weights");
    if (static_cast<int>(weights.size()) != p.feature_spec.dim()) {
        throw std::invalid_argument("scorer_params_from_json: weight rows do not match feature spec");
    }
    p.weights.resize(p.feature_spec.dim(), p.bias.size());
    for (Eigen::Index r = 0; r < p.weights.rows(); ++r) {
        const auto& row = weights.at(static_cast<std::size_t>(r));
        if (static_cast<Eigen::Index>(row.size()) != p.bias.size()) {
            throw std::invalid_argument("scorer_params_from_json: ragged weight matrix");
        }
        for (Eigen::Index c = 0; c < p.weights.cols(); ++c) {
            p.weights(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
        }
    }
    return p;
}

void save_scorer_params(const ScorerParams& params, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_scorer_params: cannot open " + path);
    out << scorer_params_to_json(params) << '\n';
    if (!out) throw std::runtime_error("save_scorer_params: write failed for " + path);
}

ScorerParams load_scorer_params(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_scorer_params: cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return scorer_params_from_json(text);
}

}  // namespace scenealign
