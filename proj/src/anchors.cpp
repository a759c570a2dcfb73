#include "scenealign/anchors.hpp"

#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "scenealign/rng.hpp"

namespace scenealign {

using nlohmann::json;

Eigen::VectorXd flatten(const Trajectory& traj) {
    Eigen::VectorXd row(2 * static_cast<Eigen::Index>(traj.size()));
    for (std::size_t t = 0; t < traj.size(); ++t) {
        row[2 * t] = traj.points[t].x;
        row[2 * t + 1] = traj.points[t].y;
    }
    return row;
}

Trajectory unflatten(const Eigen::VectorXd& row, double dt) {
    if (row.size() % 2 != 0) {
        throw std::invalid_argument("unflatten: row length must be even");
    }
    Trajectory traj;
    traj.dt = dt;
    traj.points.resize(static_cast<std::size_t>(row.size() / 2));
    for (std::size_t t = 0; t < traj.points.size(); ++t) {
        traj.points[t] = {row[2 * t], row[2 * t + 1]};
    }
    return traj;
}

MotionMatrix build_motion_matrix(const std::vector<Scene>& training_scenes) {
    if (training_scenes.empty()) {
        throw std::invalid_argument("build_motion_matrix: empty training set");
    }
    int t_f = -1;
    double dt = 0.4;
    std::size_t rows = 0;
    for (const auto& scene : training_scenes) {
        if (!scene.has_futures()) {
            throw std::invalid_argument("build_motion_matrix: scene " + scene.id + " has no futures");
        }
        for (const auto& h : scene.histories) {
            if (h.size() < 2) {
                throw std::invalid_argument("build_motion_matrix: history shorter than 2 points");
            }
        }
        for (const auto& f : scene.futures) {
            if (t_f < 0) {
                t_f = static_cast<int>(f.size());
                dt = f.dt;
            } else if (static_cast<int>(f.size()) != t_f) {
                throw std::invalid_argument("build_motion_matrix: futures disagree on length");
            }
        }
        rows += scene.n_agents();
    }

    MotionMatrix mm;
    mm.t_f = t_f;
    mm.dt = dt;
    mm.data.resize(static_cast<Eigen::Index>(rows), 2 * t_f);
    Eigen::Index r = 0;
    for (const auto& scene : training_scenes) {
        for (std::size_t a = 0; a < scene.n_agents(); ++a) {
            const AgentPose pose = pose_from_history(scene.histories[a]);
            mm.data.row(r++) = flatten(to_agent_frame(scene.futures[a], pose));
        }
    }
    return mm;
}

SvdBasis fit_svd_basis(const MotionMatrix& a, int d_s) {
    const Eigen::Index n = a.data.rows();
    const Eigen::Index cols = a.data.cols();
    if (d_s < 1 || d_s > std::min(n, cols)) {
        throw std::invalid_argument("fit_svd_basis: d_s out of range");
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a.data, Eigen::ComputeThinV);
    SvdBasis basis;
    basis.v_rows = svd.matrixV().leftCols(d_s).transpose();
    basis.singular_values = svd.singularValues().head(d_s);
    return basis;
}

Eigen::VectorXd compress(const Eigen::VectorXd& row, const SvdBasis& basis) {
    if (row.size() != basis.v_rows.cols()) {
        throw std::invalid_argument("compress: row length does not match basis");
    }
    return basis.v_rows * row;
}

Eigen::VectorXd decompress(const Eigen::VectorXd& latent, const SvdBasis& basis) {
    if (latent.size() != basis.v_rows.rows()) {
        throw std::invalid_argument("decompress: latent length does not match basis");
    }
    return basis.v_rows.transpose() * latent;
}

namespace {

double squared_distance_to(const Eigen::MatrixXd& points, Eigen::Index i,
                           const Eigen::RowVectorXd& center) {
    return (points.row(i) - center).squaredNorm();
}

Eigen::MatrixXd kmeanspp_init(const Eigen::MatrixXd& points, int k, Rng& rng) {
    const Eigen::Index m = points.rows();
    Eigen::MatrixXd centers(k, points.cols());
    centers.row(0) = points.row(static_cast<Eigen::Index>(rng.uniform_index(m)));
    std::vector<double> d2(static_cast<std::size_t>(m), 0.0);
    for (int c = 1; c < k; ++c) {
        for (Eigen::Index i = 0; i < m; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (int j = 0; j < c; ++j) {
                best = std::min(best, squared_distance_to(points, i, centers.row(j)));
            }
            d2[static_cast<std::size_t>(i)] = best;
        }
        double total = 0.0;
        for (double v : d2) total += v;
        if (total > 0.0) {
            centers.row(c) = points.row(static_cast<Eigen::Index>(rng.discrete(d2)));
        } else {
            // all remaining points coincide with a chosen center
            centers.row(c) = points.row(static_cast<Eigen::Index>(rng.uniform_index(m)));
        }
    }
    return centers;
}

}  // namespace

KMeansResult kmeans_cluster(const Eigen::MatrixXd& points, int k, std::uint64_t seed,
                            int max_iterations) {
    const Eigen::Index m = points.rows();
    if (k < 1 || m < k) {
        throw std::invalid_argument("kmeans_cluster: need at least k points");
    }
    Rng rng(mix_seed(seed, 0x6b6d65616e73ULL));
    KMeansResult result;
    result.centers = kmeanspp_init(points, k, rng);
    result.assignments.assign(static_cast<std::size_t>(m), -1);

    for (int iter = 0; iter < max_iterations; ++iter) {
        result.iterations = iter + 1;
        bool changed = false;
        for (Eigen::Index i = 0; i < m; ++i) {
            int best = 0;
            double best_d = squared_distance_to(points, i, result.centers.row(0));
            for (int c = 1; c < k; ++c) {
                const double d = squared_distance_to(points, i, result.centers.row(c));
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (result.assignments[static_cast<std::size_t>(i)] != best) {
                result.assignments[static_cast<std::size_t>(i)] = best;
                changed = true;
            }
        }

        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (Eigen::Index i = 0; i < m; ++i) {
            const int c = result.assignments[static_cast<std::size_t>(i)];
            sums.row(c) += points.row(i);
            counts[static_cast<std::size_t>(c)]++;
        }
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) {
                result.centers.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
            } else {
                // reseed from the point farthest from its assigned center
                Eigen::Index far = 0;
                double far_d = -1.0;
                for (Eigen::Index i = 0; i < m; ++i) {
                    const int ci = result.assignments[static_cast<std::size_t>(i)];
                    const double d = squared_distance_to(points, i, result.centers.row(ci));
                    if (d > far_d) {
                        far_d = d;
                        far = i;
                    }
                }
                result.centers.row(c) = points.row(far);
                result.assignments[static_cast<std::size_t>(far)] = c;
                changed = true;
            }
        }
        if (!changed) break;
    }

    result.inertia = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        const int c = result.assignments[static_cast<std::size_t>(i)];
        result.inertia += squared_distance_to(points, i, result.centers.row(c));
    }
    return result;
}

AnchorDatabase build_anchor_db(const std::vector<Scene>& training_scenes, int d_s,
                               int n_anchors, std::uint64_t seed) {
    const MotionMatrix mm = build_motion_matrix(training_scenes);
    AnchorDatabase db;
    db.basis = fit_svd_basis(mm, d_s);
    db.seed = seed;

    Eigen::MatrixXd latents = mm.data * db.basis.v_rows.transpose();
    const KMeansResult km = kmeans_cluster(latents, n_anchors, seed);
    db.kmeans_iterations = km.iterations;
    db.kmeans_inertia = km.inertia;
    db.anchors.reserve(static_cast<std::size_t>(n_anchors));
    for (int c = 0; c < n_anchors; ++c) {
        db.anchors.push_back(unflatten(decompress(km.centers.row(c), db.basis), mm.dt));
    }
    // Latents are re-compressed from the stored anchors, not kept as the raw
    // k-means centers: the serialized form carries only the anchors, so this
    // keeps save -> load bit-exact.
    db.compressed.resize(n_anchors, d_s);
    for (int c = 0; c < n_anchors; ++c) {
        db.compressed.row(c) = compress(flatten(db.anchors[c]), db.basis);
    }
    return db;
}

std::string anchor_db_to_json(const AnchorDatabase& db) {
    json j;
    j["d_s"] = db.basis.d_s();
    j["t_f"] = db.t_f();
    std::vector<double> basis_flat;
    basis_flat.reserve(static_cast<std::size_t>(db.basis.v_rows.size()));
    for (Eigen::Index r = 0; r < db.basis.v_rows.rows(); ++r) {
        for (Eigen::Index c = 0; c < db.basis.v_rows.cols(); ++c) {
            basis_flat.push_back(db.basis.v_rows(r, c));
        }
    }
    j["basis"] = basis_flat;
    j["singular_values"] = std::vector<double>(
        db.basis.singular_values.data(),
        db.basis.singular_values.data() + db.basis.singular_values.size());
    json anchors = json::array();
    for (const auto& anchor : db.anchors) {
        json pts = json::array();
        for (const auto& p : anchor.points) pts.push_back({p.x, p.y});
        anchors.push_back(std::move(pts));
    }
    j["anchors"] = std::move(anchors);
    j["seed"] = db.seed;
    j["kmeans_iterations"] = db.kmeans_iterations;
    return j.dump();
}

AnchorDatabase anchor_db_from_json(const std::string& text) {
    const json j = json::parse(text);
    AnchorDatabase db;
    const int d_s = j.at("d_s").get<int>();
    const int t_f = j.at("t_f").get<int>();
    const auto basis_flat = j.at("basis").get<std::vector<double>>();
    if (basis_flat.size() != static_cast<std::size_t>(d_s) * 2 * t_f) {
        throw std::invalid_argument("anchor_db_from_json: basis size mismatch");
    }
    db.basis.v_rows.resize(d_s, 2 * t_f);
    for (int r = 0; r < d_s; ++r) {
        for (int c = 0; c < 2 * t_f; ++c) {
            db.basis.v_rows(r, c) = basis_flat[static_cast<std::size_t>(r) * 2 * t_f + c];
        }
    }
    const auto sv = j.at("singular_values").get<std::vector<double>>();
    db.basis.singular_values = Eigen::Map<const Eigen::VectorXd>(sv.data(), static_cast<Eigen::Index>(sv.size()));
    for (const auto& anchor : j.at("anchors")) {
        Trajectory traj;
        traj.points.reserve(anchor.size());
        for (const auto& p : anchor) traj.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        db.anchors.push_back(std::move(traj));
    }
    db.seed = j.at("seed").get<std::uint64_t>();
    db.kmeans_iterations = j.at("kmeans_iterations").get<int>();
    db.compressed.resize(static_cast<Eigen::Index>(db.anchors.size()), d_s);
    for (std::size_t a = 0; a < db.anchors.size(); ++a) {
        db.compressed.row(static_cast<Eigen::Index>(a)) = compress(flatten(db.anchors[a]), db.basis);
    }
    return db;
}

void save_anchor_db(const AnchorDatabase& db, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_anchor_db: cannot open " + path);
    out << anchor_db_to_json(db) << '\n';
    if (!out) throw std::runtime_error("save_anchor_db: write failed for " + path);
}

AnchorDatabase load_anchor_db(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_anchor_db: cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return anchor_db_from_json(text);
}

}  // namespace scenealign
