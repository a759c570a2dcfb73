// Anchor trajectory database: normalized ground-truth futures are flattened
// into a motion matrix, compressed with a truncated SVD basis, clustered with
// seeded k-means, and the cluster centers are kept as reusable motion
// hypotheses in the canonical agent frame.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "scenealign/geometry.hpp"

namespace scenealign {

/// One row per (scene, agent): the agent-frame future flattened as
/// (x1, y1, ..., x_Tf, y_Tf).
struct MotionMatrix {
    Eigen::MatrixXd data;  // rows x 2*t_f
    int t_f = 0;
    double dt = 0.4;
};

/// Top right-singular-vector rows of the motion matrix.
struct SvdBasis {
    Eigen::MatrixXd v_rows;           // d_s x 2*t_f, orthonormal rows
    Eigen::VectorXd singular_values;  // d_s, non-increasing, zero-padded past rank

    int d_s() const { return static_cast<int>(v_rows.rows()); }
    int t_f() const { return static_cast<int>(v_rows.cols()) / 2; }
};

struct KMeansResult {
    Eigen::MatrixXd centers;  // k x dim
    std::vector<int> assignments;
    int iterations = 0;
    double inertia = 0.0;
};

struct AnchorDatabase {
    std::vector<Trajectory> anchors;  // canonical agent frame, length t_f
    Eigen::MatrixXd compressed;       // n_anchors x d_s
    SvdBasis basis;
    std::uint64_t seed = 0;
    int kmeans_iterations = 0;
    double kmeans_inertia = 0.0;

    int size() const { return static_cast<int>(anchors.size()); }
    int t_f() const { return basis.t_f(); }
};

Eigen::VectorXd flatten(const Trajectory& traj);
Trajectory unflatten(const Eigen::VectorXd& row, double dt);

/// One row per (scene, agent), scene order then agent order. Scenes must
/// carry futures and histories of length >= 2.
MotionMatrix build_motion_matrix(const std::vector<Scene>& training_scenes);

/// Top-d_s right singular vectors of the motion matrix. Rank-deficient input
/// keeps the available components; singular values past the rank are ~0.
SvdBasis fit_svd_basis(const MotionMatrix& a, int d_s = 4);

Eigen::VectorXd compress(const Eigen::VectorXd& row, const SvdBasis& basis);
Eigen::VectorXd decompress(const Eigen::VectorXd& latent, const SvdBasis& basis);

/// Lloyd's algorithm with k-means++ initialization. Deterministic for a fixed
/// seed; stops when no assignment changes or after max_iterations sweeps.
/// Empty clusters are reseeded from the point farthest from its center.
KMeansResult kmeans_cluster(const Eigen::MatrixXd& points, int k, std::uint64_t seed,
                            int max_iterations = 300);

AnchorDatabase build_anchor_db(const std::vector<Scene>& training_scenes, int d_s,
                               int n_anchors, std::uint64_t seed);

/// JSON document with keys d_s, t_f, basis (row-major), singular_values,
/// anchors (n x t_f x 2), seed, kmeans_iterations. Floats round-trip exactly.
std::string anchor_db_to_json(const AnchorDatabase& db);
AnchorDatabase anchor_db_from_json(const std::string& text);
void save_anchor_db(const AnchorDatabase& db, const std::string& path);
AnchorDatabase load_anchor_db(const std::string& path);

}  // namespace scenealign
