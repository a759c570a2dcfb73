// Evaluation suite for joint trajectory predictions: displacement errors
// (per-agent best, joint-sample best, and plain average), agent-to-agent and
// environment collision rates, and a KDE-based negative log-likelihood.
//
// All displacement numbers are plain Euclidean distances in meters. Scenes
// are scored independently and combined by numerator/denominator sums, so
// multi-scene aggregation is order-independent.

#pragma once

#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "scenealign/environment.hpp"
#include "scenealign/geometry.hpp"

namespace scenealign {

/// K joint samples for one scene; samples[s][i] is agent i's trajectory in
/// joint sample s. Agent order matches agent_ids.
struct ScenePredictionSet {
    std::string scene_id;
    std::vector<int> agent_ids;
    std::vector<std::vector<Trajectory>> samples;
    std::vector<double> energies;  // joint energy per sample; may be empty
    // Prototype slot chosen per sample/agent; empty when not applicable.
    std::vector<std::vector<int>> assignments;
    bool fallback_unmasked = false;  // some agent had every anchor masked out

    int n_samples() const { return static_cast<int>(samples.size()); }
    int n_agents() const { return static_cast<int>(agent_ids.size()); }
};

/// Mean / final Euclidean displacement between a predicted and true future.
double ade(const Trajectory& pred, const Trajectory& gt);
double fde(const Trajectory& pred, const Trajectory& gt);

/// Per-agent minimum over samples, averaged over agents.
std::pair<double, double> min_ade_fde(const Scene& gt, const ScenePredictionSet& preds);

/// Minimum over joint samples of the across-agent mean displacement.
std::pair<double, double> jade_jfde(const Scene& gt, const ScenePredictionSet& preds);

/// Mean over agents and samples.
std::pair<double, double> avg_ade_fde(const Scene& gt, const ScenePredictionSet& preds);

/// Fraction of (agent, sample) pairs that come strictly within `threshold`
/// of any other agent at some timestep of the same joint sample. An agent
/// counts once per sample no matter how many others it hits.
double a2a_collision_rate(const ScenePredictionSet& preds, double threshold = 0.2);

/// Fraction of (agent, sample) trajectories touching non-navigable space.
double env_collision_rate(const ScenePredictionSet& preds, const NavigabilityMap& map);

/// Mean over agents and timesteps of -log density of the GT point under a 2D
/// product-Gaussian KDE fit to the sample positions. Bandwidth per dimension
/// follows Silverman's rule, h = (4/(d+2))^{1/(d+4)} n^{-1/(d+4)} sigma with
/// d = 2, where sigma uses ddof=1 and is floored at 1e-3 m.
double kde_nll(const Scene& gt, const ScenePredictionSet& preds);

inline constexpr double kKdeBandwidthFloor = 1e-3;

struct MetricsReport {
    static constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

    double min_ade = kUnset;
    double min_fde = kUnset;
    double jade = kUnset;
    double jfde = kUnset;
    double avg_ade = kUnset;
    double avg_fde = kUnset;
    double a2a_rate = kUnset;
    double env_rate = kUnset;  // stays unset when no map was supplied
    double nll = kUnset;
    long n_scenes = 0;
    long n_agents = 0;
    long n_samples = 0;  // joint samples summed over scenes
    double collision_threshold = 0.2;
};

/// Scores one scene end to end; pass map = nullptr to skip the env rate.
MetricsReport evaluate_scene(const Scene& gt, const ScenePredictionSet& preds,
                             const NavigabilityMap* map = nullptr,
                             double collision_threshold = 0.2);

/// Order-independent multi-scene reduction: every ratio is kept as weighted
/// numerator and denominator sums until report() divides them out.
class MetricsAccumulator {
public:
    void add(const MetricsReport& scene);
    MetricsReport report() const;
    bool empty() const { return scenes_ == 0; }

private:
    double min_ade_sum_ = 0, min_fde_sum_ = 0;
    double jade_sum_ = 0, jfde_sum_ = 0;
    double avg_ade_sum_ = 0, avg_fde_sum_ = 0;
    double nll_sum_ = 0, nll_agents_ = 0;
    double a2a_events_ = 0, a2a_pairs_ = 0;
    double env_events_ = 0, env_pairs_ = 0;
    double agents_ = 0;
    long scenes_ = 0, samples_ = 0;
    double threshold_ = 0.2;
};

/// JSON rendering of the report with a small config echo (collision
/// threshold, bandwidth rule). Unset metrics serialize as null.
std::string metrics_report_to_json(const MetricsReport& report);

}  // namespace scenealign
