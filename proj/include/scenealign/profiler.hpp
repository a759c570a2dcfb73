// Agent-centric profiler: builds a per-agent feature vector, scores every
// anchor, zeroes out environment-violating candidates through a masked
// softmax, keeps the top-K as world-frame prototypes, and provides the focal
// and winner-takes-all losses plus a small trainable linear scorer.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "scenealign/anchors.hpp"
#include "scenealign/environment.hpp"
#include "scenealign/geometry.hpp"

namespace scenealign {

/// Layout of the per-agent feature vector:
/// [0, d_s)              latent of the constant-velocity future
/// [d_s, d_s+3)          step-speed statistics (mean, last, std)
/// [d_s+3, d_s+3+36)     obstacle distance minima over 10-degree sectors
struct FeatureSpec {
    int d_s = 4;
    int t_f = 12;
    int speed_stats = 3;
    int sectors = 36;

    int dim() const { return d_s + speed_stats + sectors; }
    friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

struct AgentFeatures {
    Eigen::VectorXd values;
    FeatureSpec spec;
    bool degenerate = false;  // stationary history; extrapolation latent zeroed
};

AgentFeatures agent_features(const Trajectory& history, const DistanceArray& dist,
                             const SvdBasis& basis);

/// Linear scorer: logits = weights^T features + bias.
struct ScorerParams {
    Eigen::MatrixXd weights;  // d_feat x n_anchors
    Eigen::VectorXd bias;     // n_anchors
    FeatureSpec feature_spec;
    double temperature = 0.1;
    std::uint64_t seed = 0;

    static ScorerParams zeros(const FeatureSpec& spec, int n_anchors);
};

/// Cosine similarity between the feature latent block and each anchor latent,
/// scaled by 1/temperature. Zero-norm inputs score 0.
Eigen::VectorXd score_anchors_baseline(const AgentFeatures& features,
                                       const AnchorDatabase& db,
                                       double temperature = 0.1);

Eigen::VectorXd score_anchors_trained(const AgentFeatures& features,
                                      const ScorerParams& params);

/// Thrown by env_masked_softmax when every anchor is masked out.
struct NoValidAnchorsError : std::runtime_error {
    NoValidAnchorsError() : std::runtime_error("no environment-valid anchors") {}
};

struct ScoreVector {
    Eigen::VectorXd logits;
    Eigen::VectorXd probs;     // masked entries exactly 0; rest sums to 1
    std::vector<bool> env_mask;
    bool fallback_unmasked = false;  // set by callers that recovered from all-masked
};

/// Softmax over unmasked logits (max-subtracted); masked probabilities are
/// exactly zero. Throws NoValidAnchorsError when nothing is unmasked.
ScoreVector env_masked_softmax(const Eigen::VectorXd& logits,
                               const std::vector<bool>& env_mask);

struct TopKSelection {
    std::vector<int> indices;  // distinct, unmasked
    Eigen::VectorXd logits;
    Eigen::VectorXd probs;     // renormalized over the selected K
};

/// K highest-probability unmasked anchors; ties broken by lower anchor index.
TopKSelection select_top_k(const ScoreVector& scores, int k);

/// Prototypes for one agent: selected anchors materialized in world frame.
struct PrototypeSet {
    int agent_id = 0;
    AgentPose pose;  // frame the anchors were materialized from
    std::vector<int> anchor_indices;
    std::vector<Trajectory> trajectories;  // world frame, length t_f
    Eigen::MatrixXd latents;               // k x d_s, compressed anchor rows
    Eigen::VectorXd logits;
    Eigen::VectorXd probs;
    bool fallback_unmasked = false;

    int k() const { return static_cast<int>(anchor_indices.size()); }
};

PrototypeSet materialize_prototypes(const TopKSelection& selection,
                                    const AnchorDatabase& db, const AgentPose& pose,
                                    int agent_id, double dt = 0.4);

/// -alpha * (1-p)^gamma * log(p), with p clamped into [1e-12, 1].
/// `clamped`, when given, reports whether the floor was applied.
double focal_loss(double prob_of_gt, double alpha = 0.25, double gamma = 2.0,
                  bool* clamped = nullptr);

inline constexpr double kFocalProbFloor = 1e-12;

struct WtaResult {
    double loss = 0.0;  // L2 norm of the flattened displacement of the winner
    int winner = -1;
};

WtaResult wta_regression_loss(const PrototypeSet& prototypes, const Trajectory& gt);

struct TrainingExample {
    Eigen::VectorXd features;
    int gt_winner = 0;          // anchor index of the smallest-displacement prototype
    std::vector<bool> env_mask;
};

struct ScorerTrainReport {
    std::vector<double> loss_curve;  // mean focal loss, one entry per epoch plus final
    int skipped_masked_gt = 0;       // examples whose GT anchor was masked out
};

/// Mean focal loss of the GT winner's masked-softmax probability and its
/// analytic gradient with respect to weights and bias.
double scorer_loss_and_grad(const ScorerParams& params,
                            const std::vector<TrainingExample>& dataset,
                            Eigen::MatrixXd* grad_weights, Eigen::VectorXd* grad_bias,
                            int* skipped_masked_gt = nullptr,
                            double alpha = 0.25, double gamma = 2.0);

/// Full-batch gradient descent on the focal objective. Deterministic.
/// Throws std::runtime_error with diagnostics if the loss becomes non-finite.
ScorerTrainReport train_scorer(const std::vector<TrainingExample>& dataset,
                               ScorerParams& params, int epochs, double learning_rate,
                               std::uint64_t seed);

std::string scorer_params_to_json(const ScorerParams& params);
ScorerParams scorer_params_from_json(const std::string& text);
void save_scorer_params(const ScorerParams& params, const std::string& path);
ScorerParams load_scorer_params(const std::string& path);

}  // namespace scenealign
