// Scene-level Markov random field over per-agent prototype choices.
//
// Nodes are agents, states are their candidate prototypes, and edges connect
// agents whose prototype bundles ever come near each other. Unary potentials
// are the selection logits; pairwise potentials reward clearance (analytic
// log-sigmoid of distance, optionally plus a learned bilinear term) and hard-
// mask colliding pairs. The joint distribution is P(k_1..k_N) ∝ exp(energy).

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "scenealign/profiler.hpp"

namespace scenealign {

/// Minimum over timesteps of the distance between two equally long paths.
double min_traj_distance(const Trajectory& a, const Trajectory& b);

/// log(sigmoid((d - clearance) / scale)): ~0 once d is comfortably clear,
/// increasingly negative as the pair closes in.
double clearance_log_sigmoid(double d, double clearance = 0.2, double scale = 0.5);

/// Learned bilinear pairwise term over compressed prototype latents:
/// score(m, n) = z_m^T B z_n + offset. Empty matrix means the term is off.
struct PairwiseParams {
    Eigen::MatrixXd bilinear;  // d_s x d_s, or 0x0 when unused
    double offset = 0.0;

    bool empty() const { return bilinear.size() == 0; }
};

struct MrfConfig {
    double edge_radius = 5.0;       // metres; pairs beyond this never interact
    double clearance = 0.2;         // metres; soft penalty kicks in below ~this
    double scale = 0.5;             // softness of the clearance penalty
    double collision_radius = 0.2;  // metres; hard mask below this
    double collision_penalty = -1e4;
    bool a2a_filter = true;         // apply the hard collision mask
    PairwiseParams learned;         // optional bilinear term
};

struct MrfEdge {
    int a = 0;  // agent slot indices into SceneMrf::agents, a < b
    int b = 0;
    Eigen::MatrixXd pairwise;  // k_a x k_b
};

struct SceneMrf {
    std::vector<PrototypeSet> agents;
    std::vector<Eigen::VectorXd> unary;  // selection logits, one vector per agent
    std::vector<MrfEdge> edges;

    int n_agents() const { return static_cast<int>(agents.size()); }
    int n_states(int agent) const {
        return static_cast<int>(unary[static_cast<std::size_t>(agent)].size());
    }
};

/// Builds the graph: an edge appears wherever any prototype pair of two
/// agents approaches within edge_radius. Pairwise entries combine the
/// analytic clearance term, the learned term (if configured), and the
/// collision mask. The learned term scores z_a^T B z_{b@a}: the first
/// endpoint's own anchor latent against the second endpoint's prototype
/// compressed in the first agent's frame, which is why `basis` is required
/// whenever config.learned is set.
SceneMrf build_scene_mrf(const std::vector<PrototypeSet>& agents, const MrfConfig& config,
                         const SvdBasis* basis = nullptr);

/// Sum of chosen unaries plus pairwise entries along every edge.
double mrf_energy(const SceneMrf& mrf, const std::vector<int>& assignment);

enum class ChainMode { kSequential, kParallel };

struct GibbsConfig {
    int n_samples = 20;  // kept joint samples
    int burn_in = 50;    // discarded sweeps before the first kept sample
    ChainMode mode = ChainMode::kSequential;
    std::uint64_t seed = 0;
    int workers = 1;  // parallel mode only; never changes the output
};

struct SampleSet {
    // assignments[s][i] = prototype slot chosen for agent i in joint sample s.
    std::vector<std::vector<int>> assignments;

    int n_samples() const { return static_cast<int>(assignments.size()); }
};

/// Systematic-sweep Gibbs sampler. Sequential mode runs one chain and keeps
/// the assignment after each post-burn-in sweep; parallel mode runs one chain
/// per kept sample (chain c seeded seed + c, burn_in + 1 sweeps) and merges
/// the final states in chain order, so the worker count cannot change results.
SampleSet gibbs_sample(const SceneMrf& mrf, const GibbsConfig& config);

struct BpConfig {
    int max_iterations = 20;
    double damping = 0.5;
    double tolerance = 1e-10;  // early stop when messages move less than this
};

/// Loopy sum-product in log space. Returns per-agent marginal beliefs
/// (normalized); with no edges this is exactly softmax(unary). `converged`,
/// when given, reports whether the messages settled below the tolerance
/// before the iteration cap (beliefs are still returned either way).
std::vector<Eigen::VectorXd> loopy_bp_beliefs(const SceneMrf& mrf,
                                              const BpConfig& config = {},
                                              bool* converged = nullptr);

/// Deterministic sampler used when Gibbs is disabled: agents are re-ranked by
/// BP belief (ties to the lower slot) and sample s pairs every agent's rank-s
/// prototype, clamping when an agent has fewer than s+1 candidates.
SampleSet rank_aligned_samples(const SceneMrf& mrf,
                               const std::vector<Eigen::VectorXd>& beliefs,
                               int n_samples);

/// World-frame trajectory of each assigned prototype, indexed
/// [sample][agent slot].
std::vector<std::vector<Trajectory>> realize_predictions(const SceneMrf& mrf,
                                                         const SampleSet& samples);

/// Slot pair whose prototypes land jointly closest to the two ground-truth
/// futures: exhaustive k_a x k_b scan of the summed flattened displacements,
/// ties to the lower (a, b) pair. Used to label pairwise training examples.
std::pair<int, int> gt_pair_indices(const PrototypeSet& protos_a,
                                    const PrototypeSet& protos_b,
                                    const Trajectory& gt_a, const Trajectory& gt_b);

struct PairwiseExample {
    Eigen::MatrixXd latents_a;  // k_a x d_s, compressed latents of agent a's prototypes
    Eigen::MatrixXd latents_b;  // k_b x d_s
    int gt_a = 0;               // jointly preferred pair (slot indices)
    int gt_b = 0;
};

struct PairwiseTrainReport {
    std::vector<double> loss_curve;
};

/// Mean focal loss of the ground-truth pair under a softmax over all k_a*k_b
/// bilinear scores, plus analytic gradients.
double pairwise_loss_and_grad(const PairwiseParams& params,
                              const std::vector<PairwiseExample>& dataset,
                              Eigen::MatrixXd* grad_bilinear, double* grad_offset,
                              double alpha = 0.25, double gamma = 2.0);

/// Full-batch gradient descent for the bilinear pairwise term. `params` must
/// arrive sized d_s x d_s (zeros are a fine start). Deterministic.
PairwiseTrainReport train_pairwise(const std::vector<PairwiseExample>& dataset,
                                   PairwiseParams& params, int epochs,
                                   double learning_rate);

}  // namespace scenealign
