#include "scenealign/mrf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>

#include "scenealign/errors.hpp"
#include "scenealign/rng.hpp"

namespace scenealign {

namespace {

Eigen::VectorXd log_softmax(const Eigen::VectorXd& logits) {
    const double m = logits.maxCoeff();
    const double lse = m + std::log((logits.array() - m).exp().sum());
    return logits.array() - lse;
}

double log_sum_exp(const Eigen::VectorXd& v) {
    const double m = v.maxCoeff();
    return m + std::log((v.array() - m).exp().sum());
}

int sample_softmax(const Eigen::VectorXd& logits, Rng& rng) {
    const Eigen::VectorXd probs = log_softmax(logits).array().exp();
    return static_cast<int>(
        rng.discrete(std::span<const double>(probs.data(), static_cast<std::size_t>(probs.size()))));
}

// Per-agent list of (edge index, agent-is-first-endpoint).
std::vector<std::vector<std::pair<int, bool>>> adjacency(const SceneMrf& mrf) {
    std::vector<std::vector<std::pair<int, bool>>> adj(mrf.agents.size());
    for (std::size_t e = 0; e < mrf.edges.size(); ++e) {
        adj[static_cast<std::size_t>(mrf.edges[e].a)].emplace_back(static_cast<int>(e), true);
        adj[static_cast<std::size_t>(mrf.edges[e].b)].emplace_back(static_cast<int>(e), false);
    }
    return adj;
}

Eigen::VectorXd conditional_logits(const SceneMrf& mrf,
                                   const std::vector<std::vector<std::pair<int, bool>>>& adj,
                                   const std::vector<int>& current, int agent) {
    Eigen::VectorXd logits = mrf.unary[static_cast<std::size_t>(agent)];
    for (const auto& [e, is_first] : adj[static_cast<std::size_t>(agent)]) {
        const MrfEdge& edge = mrf.edges[static_cast<std::size_t>(e)];
        if (is_first) {
            logits += edge.pairwise.col(current[static_cast<std::size_t>(edge.b)]);
        } else {
            logits += edge.pairwise.row(current[static_cast<std::size_t>(edge.a)]).transpose();
        }
    }
    return logits;
}

void sweep(const SceneMrf& mrf, const std::vector<std::vector<std::pair<int, bool>>>& adj,
           std::vector<int>& current, Rng& rng) {
    for (int i = 0; i < mrf.n_agents(); ++i) {
        current[static_cast<std::size_t>(i)] = sample_softmax(conditional_logits(mrf, adj, current, i), rng);
    }
}

std::vector<int> init_from_unary(const SceneMrf& mrf, Rng& rng) {
    std::vector<int> current(mrf.agents.size());
    for (int i = 0; i < mrf.n_agents(); ++i) {
        current[static_cast<std::size_t>(i)] = sample_softmax(mrf.unary[static_cast<std::size_t>(i)], rng);
    }
    return current;
}

}  // namespace

double min_traj_distance(const Trajectory& a, const Trajectory& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("min_traj_distance: trajectory lengths differ");
    }
    if (a.empty()) throw std::invalid_argument("min_traj_distance: empty trajectory");
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < a.size(); ++t) best = std::min(best, distance(a[t], b[t]));
    return best;
}

double clearance_log_sigmoid(double d, double clearance, double scale) {
    const double x = (d - clearance) / scale;
    // log(sigmoid(x)) without overflow on either tail.
    if (x >= 0.0) return -std::log1p(std::exp(-x));
    return x - std::log1p(std::exp(x));
}

SceneMrf build_scene_mrf(const std::vector<PrototypeSet>& agents, const MrfConfig& config,
                         const SvdBasis* basis) {
    const bool learned = !config.learned.empty();
    if (learned && basis == nullptr) {
        throw std::invalid_argument("build_scene_mrf: learned pairwise term needs the basis");
    }
    SceneMrf mrf;
    mrf.agents = agents;
    mrf.unary.reserve(agents.size());
    for (const auto& set : agents) {
        if (set.trajectories.empty()) {
            throw std::invalid_argument("build_scene_mrf: agent " +
                                        std::to_string(set.agent_id) + " has no prototypes");
        }
        mrf.unary.push_back(set.logits);
    }
    for (int i = 0; i < mrf.n_agents(); ++i) {
        const auto& pi = agents[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < mrf.n_agents(); ++j) {
            const auto& pj = agents[static_cast<std::size_t>(j)];
            Eigen::MatrixXd dist(pi.k(), pj.k());
            for (int m = 0; m < pi.k(); ++m) {
                for (int n = 0; n < pj.k(); ++n) {
                    dist(m, n) = min_traj_distance(pi.trajectories[static_cast<std::size_t>(m)],
                                                   pj.trajectories[static_cast<std::size_t>(n)]);
                }
            }
            if (dist.minCoeff() >= config.edge_radius) continue;

            // The learned term views j's prototypes from i's frame, so the
            // latents on the column side are re-compressed per edge.
            Eigen::MatrixXd latents_b_at_a;
            if (learned) {
                latents_b_at_a.resize(pj.k(), basis->d_s());
                for (int n = 0; n < pj.k(); ++n) {
                    latents_b_at_a.row(n) = compress(
                        flatten(to_agent_frame(pj.trajectories[static_cast<std::size_t>(n)],
                                               pi.pose)),
                        *basis);
                }
            }

            MrfEdge edge;
            edge.a = i;
            edge.b = j;
            edge.pairwise.resize(pi.k(), pj.k());
            for (int m = 0; m < pi.k(); ++m) {
                for (int n = 0; n < pj.k(); ++n) {
                    // A colliding pair is masked outright; its clearance and
                    // learned scores are irrelevant next to the penalty.
                    if (config.a2a_filter && dist(m, n) < config.collision_radius) {
                        edge.pairwise(m, n) = config.collision_penalty;
                        continue;
                    }
                    double v = clearance_log_sigmoid(dist(m, n), config.clearance, config.scale);
                    if (learned) {
                        v += (pi.latents.row(m) * config.learned.bilinear *
                              latents_b_at_a.row(n).transpose())
                                 .value() +
                             config.learned.offset;
                    }
                    edge.pairwise(m, n) = v;
                }
            }
            mrf.edges.push_back(std::move(edge));
        }
    }
    return mrf;
}

double mrf_energy(const SceneMrf& mrf, const std::vector<int>& assignment) {
    if (static_cast<int>(assignment.size()) != mrf.n_agents()) {
        throw std::invalid_argument("mrf_energy: assignment length mismatch");
    }
    double energy = 0.0;
    for (int i = 0; i < mrf.n_agents(); ++i) {
        const int k = assignment[static_cast<std::size_t>(i)];
        if (k < 0 || k >= mrf.n_states(i)) {
            throw std::out_of_range("mrf_energy: state out of range for agent slot " +
                                    std::to_string(i));
        }
        energy += mrf.unary[static_cast<std::size_t>(i)][k];
    }
    for (const auto& edge : mrf.edges) {
        energy += edge.pairwise(assignment[static_cast<std::size_t>(edge.a)],
                                assignment[static_cast<std::size_t>(edge.b)]);
    }
    return energy;
}

namespace {

SampleSet gibbs_sample_sequential(const SceneMrf& mrf, const GibbsConfig& config,
                                  const std::vector<std::vector<std::pair<int, bool>>>& adj) {
    SampleSet out;
    out.assignments.reserve(static_cast<std::size_t>(config.n_samples));
    Rng rng(config.seed);
    std::vector<int> current = init_from_unary(mrf, rng);
    for (int s = 0; s < config.burn_in + config.n_samples; ++s) {
        sweep(mrf, adj, current, rng);
        if (s >= config.burn_in) out.assignments.push_back(current);
    }
    return out;
}

}  // namespace

SampleSet gibbs_sample(const SceneMrf& mrf, const GibbsConfig& config) {
    if (config.n_samples < 0) throw std::invalid_argument("gibbs_sample: negative sample count");
    if (config.burn_in < 0) throw std::invalid_argument("gibbs_sample: negative burn-in");
    if (mrf.n_agents() == 0) throw std::invalid_argument("gibbs_sample: empty scene");
    if (config.n_samples == 0) return {};

    const auto adj = adjacency(mrf);
    if (config.mode == ChainMode::kSequential) {
        return gibbs_sample_sequential(mrf, config, adj);
    }

    // One independent chain per kept sample; merged by chain index so the
    // thread count never shows up in the output.
    SampleSet out;
    out.assignments.resize(static_cast<std::size_t>(config.n_samples));
    auto run_chain = [&](int c) {
        Rng rng(config.seed + static_cast<std::uint64_t>(c));
        std::vector<int> current = init_from_unary(mrf, rng);
        for (int s = 0; s < config.burn_in + 1; ++s) sweep(mrf, adj, current, rng);
        out.assignments[static_cast<std::size_t>(c)] = std::move(current);
    };
    const int workers = std::clamp(config.workers, 1, config.n_samples);
    if (workers == 1) {
        for (int c = 0; c < config.n_samples; ++c) run_chain(c);
        return out;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (int c = w; c < config.n_samples; c += workers) run_chain(c);
        });
    }
    for (auto& t : pool) t.join();
    return out;
}

std::vector<Eigen::VectorXd> loopy_bp_beliefs(const SceneMrf& mrf, const BpConfig& config,
                                              bool* converged) {
    if (config.damping < 0.0 || config.damping >= 1.0) {
        throw std::invalid_argument("loopy_bp_beliefs: damping must lie in [0, 1)");
    }
    if (converged) *converged = mrf.edges.empty();
    const std::size_t n_edges = mrf.edges.size();
    // Directed messages: slot 2e is a->b along edge e, slot 2e+1 is b->a.
    std::vector<Eigen::VectorXd> msg(2 * n_edges);
    for (std::size_t e = 0; e < n_edges; ++e) {
        msg[2 * e] = Eigen::VectorXd::Zero(mrf.edges[e].pairwise.cols());
        msg[2 * e + 1] = Eigen::VectorXd::Zero(mrf.edges[e].pairwise.rows());
    }
    const auto adj = adjacency(mrf);

    // Incoming log-messages to `agent`, excluding the edge `skip` (-1: none).
    auto gather = [&](int agent, int skip, const std::vector<Eigen::VectorXd>& m) {
        Eigen::VectorXd total = mrf.unary[static_cast<std::size_t>(agent)];
        for (const auto& [e, is_first] : adj[static_cast<std::size_t>(agent)]) {
            if (e == skip) continue;
            total += m[2 * static_cast<std::size_t>(e) + (is_first ? 1 : 0)];
        }
        return total;
    };

    for (int iter = 0; iter < config.max_iterations; ++iter) {
        const std::vector<Eigen::VectorXd> prev = msg;
        double max_delta = 0.0;
        for (std::size_t e = 0; e < n_edges; ++e) {
            const MrfEdge& edge = mrf.edges[e];
            // a -> b: sum out a's states.
            {
                const Eigen::VectorXd in = gather(edge.a, static_cast<int>(e), prev);
                Eigen::VectorXd fresh(edge.pairwise.cols());
                for (Eigen::Index kb = 0; kb < edge.pairwise.cols(); ++kb) {
                    fresh[kb] = log_sum_exp(in + edge.pairwise.col(kb));
                }
                fresh.array() -= log_sum_exp(fresh);
                msg[2 * e] = config.damping * prev[2 * e] + (1.0 - config.damping) * fresh;
                max_delta = std::max(max_delta, (msg[2 * e] - prev[2 * e]).cwiseAbs().maxCoeff());
            }
            // b -> a: sum out b's states.
            {
                const Eigen::VectorXd in = gather(edge.b, static_cast<int>(e), prev);
                Eigen::VectorXd fresh(edge.pairwise.rows());
                for (Eigen::Index ka = 0; ka < edge.pairwise.rows(); ++ka) {
                    fresh[ka] = log_sum_exp(in + edge.pairwise.row(ka).transpose());
                }
                fresh.array() -= log_sum_exp(fresh);
                msg[2 * e + 1] =
                    config.damping * prev[2 * e + 1] + (1.0 - config.damping) * fresh;
                max_delta =
                    std::max(max_delta, (msg[2 * e + 1] - prev[2 * e + 1]).cwiseAbs().maxCoeff());
            }
        }
        if (max_delta < config.tolerance) {
            if (converged) *converged = true;
            break;
        }
    }

    std::vector<Eigen::VectorXd> beliefs;
    beliefs.reserve(mrf.agents.size());
    for (int i = 0; i < mrf.n_agents(); ++i) {
        beliefs.push_back(log_softmax(gather(i, -1, msg)).array().exp());
    }
    return beliefs;
}

SampleSet rank_aligned_samples(const SceneMrf& mrf,
                               const std::vector<Eigen::VectorXd>& beliefs, int n_samples) {
    if (static_cast<int>(beliefs.size()) != mrf.n_agents()) {
        throw std::invalid_argument("rank_aligned_samples: belief count mismatch");
    }
    if (n_samples < 0) throw std::invalid_argument("rank_aligned_samples: negative sample count");
    std::vector<std::vector<int>> ranks(beliefs.size());
    for (std::size_t i = 0; i < beliefs.size(); ++i) {
        ranks[i].resize(static_cast<std::size_t>(beliefs[i].size()));
        std::iota(ranks[i].begin(), ranks[i].end(), 0);
        std::sort(ranks[i].begin(), ranks[i].end(), [&](int a, int b) {
            if (beliefs[i][a] != beliefs[i][b]) return beliefs[i][a] > beliefs[i][b];
            return a < b;
        });
    }
    SampleSet out;
    out.assignments.resize(static_cast<std::size_t>(n_samples));
    for (int s = 0; s < n_samples; ++s) {
        auto& asg = out.assignments[static_cast<std::size_t>(s)];
        asg.resize(beliefs.size());
        for (std::size_t i = 0; i < beliefs.size(); ++i) {
            const int last = static_cast<int>(ranks[i].size()) - 1;
            asg[i] = ranks[i][static_cast<std::size_t>(std::min(s, last))];
        }
    }
    return out;
}

std::vector<std::vector<Trajectory>> realize_predictions(const SceneMrf& mrf,
                                                         const SampleSet& samples) {
    std::vector<std::vector<Trajectory>> out;
    out.reserve(samples.assignments.size());
    for (const auto& assignment : samples.assignments) {
        if (static_cast<int>(assignment.size()) != mrf.n_agents()) {
            throw std::invalid_argument("realize_predictions: assignment length mismatch");
        }
        std::vector<Trajectory> realized;
        realized.reserve(assignment.size());
        for (std::size_t i = 0; i < assignment.size(); ++i) {
            const auto& protos = mrf.agents[i].trajectories;
            const int k = assignment[i];
            if (k < 0 || k >= static_cast<int>(protos.size())) {
                throw std::out_of_range("realize_predictions: state out of range for agent slot " +
                                        std::to_string(i));
            }
            realized.push_back(protos[static_cast<std::size_t>(k)]);
        }
        out.push_back(std::move(realized));
    }
    return out;
}

std::pair<int, int> gt_pair_indices(const PrototypeSet& protos_a,
                                    const PrototypeSet& protos_b, const Trajectory& gt_a,
                                    const Trajectory& gt_b) {
    if (protos_a.trajectories.empty() || protos_b.trajectories.empty()) {
        throw std::invalid_argument("gt_pair_indices: empty prototype set");
    }
    const Eigen::VectorXd flat_a = flatten(gt_a);
    const Eigen::VectorXd flat_b = flatten(gt_b);
    std::pair<int, int> best{0, 0};
    double best_disp = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < protos_a.trajectories.size(); ++m) {
        const double da = (flatten(protos_a.trajectories[m]) - flat_a).norm();
        for (std::size_t n = 0; n < protos_b.trajectories.size(); ++n) {
            const double disp = da + (flatten(protos_b.trajectories[n]) - flat_b).norm();
            if (disp < best_disp) {
                best_disp = disp;
                best = {static_cast<int>(m), static_cast<int>(n)};
            }
        }
    }
    return best;
}

double pairwise_loss_and_grad(const PairwiseParams& params,
                              const std::vector<PairwiseExample>& dataset,
                              Eigen::MatrixXd* grad_bilinear, double* grad_offset,
                              double alpha, double gamma) {
    if (params.empty()) {
        throw std::invalid_argument("pairwise_loss_and_grad: bilinear matrix is unset");
    }
    if (dataset.empty()) {
        throw std::invalid_argument("pairwise_loss_and_grad: empty dataset");
    }
    if (grad_bilinear) grad_bilinear->setZero(params.bilinear.rows(), params.bilinear.cols());
    if (grad_offset) *grad_offset = 0.0;

    double loss = 0.0;
    for (const auto& ex : dataset) {
        if (ex.latents_a.cols() != params.bilinear.rows() ||
            ex.latents_b.cols() != params.bilinear.cols()) {
            throw std::invalid_argument("pairwise_loss_and_grad: latent width mismatch");
        }
        if (ex.gt_a < 0 || ex.gt_a >= ex.latents_a.rows() || ex.gt_b < 0 ||
            ex.gt_b >= ex.latents_b.rows()) {
            throw std::invalid_argument("pairwise_loss_and_grad: gt pair out of range");
        }
        Eigen::MatrixXd scores =
            (ex.latents_a * params.bilinear * ex.latents_b.transpose()).array() + params.offset;
        const double m = scores.maxCoeff();
        Eigen::MatrixXd probs = (scores.array() - m).exp();
        probs /= probs.sum();
        const double p = probs(ex.gt_a, ex.gt_b);
        bool clamped = false;
        loss += focal_loss(p, alpha, gamma, &clamped);
        if ((grad_bilinear || grad_offset) && !clamped) {
            const double one_minus = 1.0 - p;
            const double dldp = alpha * gamma * std::pow(one_minus, gamma - 1.0) * std::log(p) -
                                alpha * std::pow(one_minus, gamma) / p;
            Eigen::MatrixXd dscores = -probs * probs(ex.gt_a, ex.gt_b);
            dscores(ex.gt_a, ex.gt_b) += probs(ex.gt_a, ex.gt_b);
            dscores *= dldp;
            if (grad_bilinear) *grad_bilinear += ex.latents_a.transpose() * dscores * ex.latents_b;
            if (grad_offset) *grad_offset += dscores.sum();
        }
    }
    const double inv = 1.0 / static_cast<double>(dataset.size());
    if (grad_bilinear) *grad_bilinear *= inv;
    if (grad_offset) *grad_offset *= inv;
    return loss * inv;
}

PairwiseTrainReport train_pairwise(const std::vector<PairwiseExample>& dataset,
                                   PairwiseParams& params, int epochs, double learning_rate) {
    if (epochs < 0) throw std::invalid_argument("train_pairwise: negative epoch count");
    if (learning_rate <= 0.0) {
        throw std::invalid_argument("train_pairwise: learning rate must be positive");
    }
    PairwiseTrainReport report;
    report.loss_curve.reserve(static_cast<std::size_t>(epochs) + 1);
    Eigen::MatrixXd gb;
    double go = 0.0;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        const double loss = pairwise_loss_and_grad(params, dataset, &gb, &go);
        if (!std::isfinite(loss)) {
            throw NumericalError("train_pairwise: loss diverged at epoch " +
                                     std::to_string(epoch) + "; reduce the learning rate");
        }
        report.loss_curve.push_back(loss);
        params.bilinear -= learning_rate * gb;
        params.offset -= learning_rate * go;
    }
    const double final_loss = pairwise_loss_and_grad(params, dataset, nullptr, nullptr);
    if (!std::isfinite(final_loss)) {
        throw NumericalError("train_pairwise: loss diverged after final update");
    }
    report.loss_curve.push_back(final_loss);
    return report;
}

}  // namespace scenealign
