#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include "doctest.h"
#include "nlohmann/json.hpp"
#include "scenealign/environment.hpp"
#include "scenealign/metrics.hpp"
#include "support.hpp"

using namespace scenealign;
using testutil::line_trajectory;
using testutil::random_trajectory;

namespace {

constexpr double kPi = 3.14159265358979323846;

Trajectory shifted(const Trajectory& base, Point2 offset) {
    std::vector<Point2> pts;
    pts.reserve(base.size());
    for (const Point2& p : base.points) pts.push_back({p.x + offset.x, p.y + offset.y});
    return Trajectory(std::move(pts), base.dt);
}

Scene make_gt(const std::vector<Trajectory>& futures) {
    Scene scene;
    scene.id = "metrics-scene";
    for (std::size_t i = 0; i < futures.size(); ++i) {
        scene.agent_ids.push_back(static_cast<int>(i));
        scene.histories.push_back(line_trajectory({0.0, double(i)}, {0.1, 0.0}, 2));
    }
    scene.futures = futures;
    return scene;
}

ScenePredictionSet make_preds(std::vector<std::vector<Trajectory>> samples) {
    ScenePredictionSet preds;
    preds.scene_id = "metrics-scene";
    if (!samples.empty()) {
        for (std::size_t i = 0; i < samples.front().size(); ++i) {
            preds.agent_ids.push_back(static_cast<int>(i));
        }
    }
    preds.samples = std::move(samples);
    return preds;
}

// ---------------------------------------------------------------------------
// Independent oracles, written from the definitions rather than the library
// code: plain loops, no shared helpers with src/metrics.cpp.

double disp_mean(const Trajectory& a, const Trajectory& b) {
    double total = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) {
        total += std::hypot(a[t].x - b[t].x, a[t].y - b[t].y);
    }
    return total / static_cast<double>(a.size());
}

double disp_final(const Trajectory& a, const Trajectory& b) {
    const Point2 p = a.points.back();
    const Point2 q = b.points.back();
    return std::hypot(p.x - q.x, p.y - q.y);
}

std::pair<double, double> oracle_min(const Scene& gt, const ScenePredictionSet& preds) {
    double ade_sum = 0.0, fde_sum = 0.0;
    for (std::size_t i = 0; i < gt.n_agents(); ++i) {
        double best_a = std::numeric_limits<double>::infinity();
        double best_f = std::numeric_limits<double>::infinity();
        for (const auto& sample : preds.samples) {
            best_a = std::min(best_a, disp_mean(sample[i], gt.futures[i]));
            best_f = std::min(best_f, disp_final(sample[i], gt.futures[i]));
        }
        ade_sum += best_a;
        fde_sum += best_f;
    }
    const double n = static_cast<double>(gt.n_agents());
    return {ade_sum / n, fde_sum / n};
}

std::pair<double, double> oracle_joint(const Scene& gt, const ScenePredictionSet& preds) {
    double best_a = std::numeric_limits<double>::infinity();
    double best_f = std::numeric_limits<double>::infinity();
    for (const auto& sample : preds.samples) {
        double a = 0.0, f = 0.0;
        for (std::size_t i = 0; i < gt.n_agents(); ++i) {
            a += disp_mean(sample[i], gt.futures[i]);
            f += disp_final(sample[i], gt.futures[i]);
        }
        best_a = std::min(best_a, a / static_cast<double>(gt.n_agents()));
        best_f = std::min(best_f, f / static_cast<double>(gt.n_agents()));
    }
    return {best_a, best_f};
}

std::pair<double, double> oracle_avg(const Scene& gt, const ScenePredictionSet& preds) {
    double a = 0.0, f = 0.0;
    for (const auto& sample : preds.samples) {
        for (std::size_t i = 0; i < gt.n_agents(); ++i) {
            a += disp_mean(sample[i], gt.futures[i]);
            f += disp_final(sample[i], gt.futures[i]);
        }
    }
    const double count = static_cast<double>(preds.samples.size() * gt.n_agents());
    return {a / count, f / count};
}

double oracle_a2a(const ScenePredictionSet& preds, double threshold) {
    long events = 0, total = 0;
    for (const auto& sample : preds.samples) {
        for (std::size_t i = 0; i < sample.size(); ++i) {
            ++total;
            bool hit = false;
            for (std::size_t j = 0; j < sample.size(); ++j) {
                if (j == i) continue;
                for (std::size_t t = 0; t < sample[i].size(); ++t) {
                    const double d =
                        std::hypot(sample[i][t].x - sample[j][t].x, sample[i][t].y - sample[j][t].y);
                    if (d < threshold) hit = true;
                }
            }
            if (hit) ++events;
        }
    }
    return static_cast<double>(events) / static_cast<double>(total);
}

// Grid lookup done from the raw cell array so the oracle does not lean on
// is_navigable / trajectory_violates.
bool oracle_point_blocked(const NavigabilityMap& map, Point2 p) {
    const int ix = static_cast<int>(std::floor((p.x - map.origin.x) / map.resolution));
    const int iy = static_cast<int>(std::floor((p.y - map.origin.y) / map.resolution));
    if (ix < 0 || iy < 0 || ix >= map.width || iy >= map.height) return true;
    return map.cells[static_cast<std::size_t>(iy) * map.width + ix] == 0;
}

double oracle_env(const ScenePredictionSet& preds, const NavigabilityMap& map) {
    long events = 0, total = 0;
    for (const auto& sample : preds.samples) {
        for (const auto& traj : sample) {
            ++total;
            for (const Point2& p : traj.points) {
                if (oracle_point_blocked(map, p)) {
                    ++events;
                    break;
                }
            }
        }
    }
    return static_cast<double>(events) / static_cast<double>(total);
}

// Product-Gaussian KDE from the defining formula: per timestep fit the
// per-dimension Silverman bandwidth, evaluate the mixture at the true point.
// Kernel weights are summed relative to the largest exponent so far-away
// sample sets do not underflow the density to zero.
double oracle_kde(const Scene& gt, const ScenePredictionSet& preds) {
    const int n = preds.n_samples();
    const double bw_scale = std::pow(static_cast<double>(n), -1.0 / 6.0);
    double total = 0.0;
    for (std::size_t i = 0; i < gt.n_agents(); ++i) {
        double agent = 0.0;
        for (std::size_t t = 0; t < gt.futures[i].size(); ++t) {
            double mx = 0.0, my = 0.0;
            for (const auto& s : preds.samples) {
                mx += s[i][t].x;
                my += s[i][t].y;
            }
            mx /= n;
            my /= n;
            double vx = 0.0, vy = 0.0;
            for (const auto& s : preds.samples) {
                vx += (s[i][t].x - mx) * (s[i][t].x - mx);
                vy += (s[i][t].y - my) * (s[i][t].y - my);
            }
            const double ddof = n > 1 ? n - 1.0 : 1.0;
            const double hx = std::max(1e-3, bw_scale * std::sqrt(vx / ddof));
            const double hy = std::max(1e-3, bw_scale * std::sqrt(vy / ddof));
            std::vector<double> exponents;
            for (const auto& s : preds.samples) {
                const double zx = (gt.futures[i][t].x - s[i][t].x) / hx;
                const double zy = (gt.futures[i][t].y - s[i][t].y) / hy;
                exponents.push_back(-0.5 * (zx * zx + zy * zy));
            }
            const double peak = *std::max_element(exponents.begin(), exponents.end());
            double weight = 0.0;
            for (double e : exponents) weight += std::exp(e - peak);
            const double log_density =
                peak + std::log(weight / (n * 2.0 * kPi * hx * hy));
            agent += -log_density;
        }
        total += agent / static_cast<double>(gt.futures[i].size());
    }
    return total / static_cast<double>(gt.n_agents());
}

// Random scene + prediction set with small, varied shapes.
std::pair<Scene, ScenePredictionSet> random_instance(std::mt19937& rng, int max_agents = 5,
                                                     int max_samples = 5, int max_horizon = 6,
                                                     double span = 5.0) {
    std::uniform_int_distribution<int> n_dist(1, max_agents);
    std::uniform_int_distribution<int> k_dist(1, max_samples);
    std::uniform_int_distribution<int> t_dist(2, max_horizon);
    const int n = n_dist(rng);
    const int k = k_dist(rng);
    const int horizon = t_dist(rng);

    std::vector<Trajectory> futures;
    for (int i = 0; i < n; ++i) futures.push_back(random_trajectory(rng, horizon, span));
    Scene gt = make_gt(futures);

    std::vector<std::vector<Trajectory>> samples;
    for (int s = 0; s < k; ++s) {
        std::vector<Trajectory> sample;
        for (int i = 0; i < n; ++i) sample.push_back(random_trajectory(rng, horizon, span));
        samples.push_back(std::move(sample));
    }
    return {std::move(gt), make_preds(std::move(samples))};
}

Trajectory transformed(const Trajectory& base, double theta, Point2 shift) {
    const double c = std::cos(theta), s = std::sin(theta);
    std::vector<Point2> pts;
    pts.reserve(base.size());
    for (const Point2& p : base.points) {
        pts.push_back({c * p.x - s * p.y + shift.x, s * p.x + c * p.y + shift.y});
    }
    return Trajectory(std::move(pts), base.dt);
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("ade and fde are plain displacement means and endpoints") {
    const Trajectory gt = line_trajectory({0.0, 0.0}, {1.0, 0.0}, 4);

    CHECK(ade(gt, gt) == doctest::Approx(0.0));
    CHECK(fde(gt, gt) == doctest::Approx(0.0));

    const Trajectory offset = shifted(gt, {0.0, 3.0});
    CHECK(ade(offset, gt) == doctest::Approx(3.0));
    CHECK(fde(offset, gt) == doctest::Approx(3.0));

    // Only the endpoint is displaced: the mean spreads it, the final keeps it.
    Trajectory end_only = gt;
    end_only.points.back().y += 2.0;
    CHECK(ade(end_only, gt) == doctest::Approx(0.5));
    CHECK(fde(end_only, gt) == doctest::Approx(2.0));

    const Trajectory shorter = line_trajectory({0.0, 0.0}, {1.0, 0.0}, 3);
    CHECK_THROWS_AS(ade(shorter, gt), std::invalid_argument);
    CHECK_THROWS_AS(fde(shorter, gt), std::invalid_argument);
    CHECK_THROWS_AS(ade(Trajectory{}, Trajectory{}), std::invalid_argument);
    CHECK_THROWS_AS(fde(Trajectory{}, Trajectory{}), std::invalid_argument);
}

TEST_CASE("per-agent best picks each agent's closest sample") {
    const Trajectory gt_line = line_trajectory({0.0, 0.0}, {1.0, 0.0}, 5);
    const Scene gt = make_gt({gt_line});

    // A perfect sample anywhere in the set zeroes both numbers.
    auto perfect = make_preds({{shifted(gt_line, {0.0, 4.0})}, {gt_line}});
    auto [pa, pf] = min_ade_fde(gt, perfect);
    CHECK(pa == doctest::Approx(0.0));
    CHECK(pf == doctest::Approx(0.0));

    // Constant offsets of 1 m and 2 m: the 1 m sample wins both metrics.
    auto offsets = make_preds({{shifted(gt_line, {0.0, 2.0})}, {shifted(gt_line, {0.0, 1.0})}});
    auto [oa, of] = min_ade_fde(gt, offsets);
    CHECK(oa == doctest::Approx(1.0));
    CHECK(of == doctest::Approx(1.0));
}

TEST_CASE("joint best scores whole samples and cannot mix them") {
    // Two agents, two samples. Sample 0 nails agent 0 but misses agent 1 by
    // 2 m; sample 1 misses both by 1 m. Per-agent cherry-picking gets 0.5,
    // the joint score cannot do better than 1.
    const Trajectory gt0 = line_trajectory({0.0, 0.0}, {1.0, 0.0}, 3);
    const Trajectory gt1 = line_trajectory({0.0, 5.0}, {1.0, 0.0}, 3);
    const Scene gt = make_gt({gt0, gt1});

    auto preds = make_preds({
        {gt0, shifted(gt1, {0.0, 2.0})},
        {shifted(gt0, {0.0, 1.0}), shifted(gt1, {0.0, 1.0})},
    });

    auto [mina, minf] = min_ade_fde(gt, preds);
    CHECK(mina == doctest::Approx(0.5));
    CHECK(minf == doctest::Approx(0.5));

    auto [ja, jf] = jade_jfde(gt, preds);
    CHECK(ja == doctest::Approx(1.0));
    CHECK(jf == doctest::Approx(1.0));

    auto [aa, af] = avg_ade_fde(gt, preds);
    CHECK(aa == doctest::Approx(1.0));
    CHECK(af == doctest::Approx(1.0));
}

TEST_CASE("displacement metrics match independent oracles on random shapes") {
    std::mt19937 rng(4101);
    for (int trial = 0; trial < 40; ++trial) {
        auto [gt, preds] = random_instance(rng);

        auto [ma, mf] = min_ade_fde(gt, preds);
        auto [oma, omf] = oracle_min(gt, preds);
        CHECK(ma == doctest::Approx(oma).epsilon(1e-9));
        CHECK(mf == doctest::Approx(omf).epsilon(1e-9));

        auto [ja, jf] = jade_jfde(gt, preds);
        auto [oja, ojf] = oracle_joint(gt, preds);
        CHECK(ja == doctest::Approx(oja).epsilon(1e-9));
        CHECK(jf == doctest::Approx(ojf).epsilon(1e-9));

        auto [aa, af] = avg_ade_fde(gt, preds);
        auto [oaa, oaf] = oracle_avg(gt, preds);
        CHECK(aa == doctest::Approx(oaa).epsilon(1e-9));
        CHECK(af == doctest::Approx(oaf).epsilon(1e-9));

        // Cherry-picking <= joint <= plain average, always.
        CHECK(ma <= ja + 1e-12);
        CHECK(ja <= aa + 1e-12);
        CHECK(mf <= jf + 1e-12);
        CHECK(jf <= af + 1e-12);
    }
}

TEST_CASE("a single sample collapses best, joint, and average") {
    std::mt19937 rng(4102);
    for (int trial = 0; trial < 10; ++trial) {
        auto [gt, preds] = random_instance(rng, 5, 1);
        REQUIRE(preds.n_samples() == 1);
        auto [ma, mf] = min_ade_fde(gt, preds);
        auto [ja, jf] = jade_jfde(gt, preds);
        auto [aa, af] = avg_ade_fde(gt, preds);
        CHECK(ma == doctest::Approx(ja).epsilon(1e-12));
        CHECK(ja == doctest::Approx(aa).epsilon(1e-12));
        CHECK(mf == doctest::Approx(jf).epsilon(1e-12));
        CHECK(jf == doctest::Approx(af).epsilon(1e-12));
    }
}

TEST_CASE("displacement and agent-collision metrics survive rigid motion") {
    std::mt19937 rng(4103);
    for (int trial = 0; trial < 10; ++trial) {
        auto [gt, preds] = random_instance(rng, 4, 4, 6);

        const double theta = 0.3 + 0.4 * trial;
        const Point2 shift{13.5, -7.25};
        Scene gt2 = gt;
        ScenePredictionSet preds2 = preds;
        for (auto& f : gt2.futures) f = transformed(f, theta, shift);
        for (auto& sample : preds2.samples) {
            for (auto& traj : sample) traj = transformed(traj, theta, shift);
        }

        auto [ma, mf] = min_ade_fde(gt, preds);
        auto [ma2, mf2] = min_ade_fde(gt2, preds2);
        CHECK(ma2 == doctest::Approx(ma).epsilon(1e-9));
        CHECK(mf2 == doctest::Approx(mf).epsilon(1e-9));

        auto [ja, jf] = jade_jfde(gt, preds);
        auto [ja2, jf2] = jade_jfde(gt2, preds2);
        CHECK(ja2 == doctest::Approx(ja).epsilon(1e-9));
        CHECK(jf2 == doctest::Approx(jf).epsilon(1e-9));

        auto [aa, af] = avg_ade_fde(gt, preds);
        auto [aa2, af2] = avg_ade_fde(gt2, preds2);
        CHECK(aa2 == doctest::Approx(aa).epsilon(1e-9));
        CHECK(af2 == doctest::Approx(af).epsilon(1e-9));

        if (preds.n_agents() > 1) {
            CHECK(a2a_collision_rate(preds2, 0.5) ==
                  doctest::Approx(a2a_collision_rate(preds, 0.5)).epsilon(1e-12));
        }
    }
}

TEST_CASE("agent collision rate flags each agent once per sample") {
    const Trajectory walk = line_trajectory({0.0, 0.0}, {0.5, 0.0}, 6);

    // One agent can never collide.
    auto solo = make_preds({{walk}, {shifted(walk, {0.0, 1.0})}});
    solo.agent_ids = {0};
    for (auto& s : solo.samples) s.resize(1);
    CHECK(a2a_collision_rate(solo, 0.2) == doctest::Approx(0.0));

    // Two agents sharing a trajectory collide in every sample.
    auto shared = make_preds({{walk, walk}, {walk, walk}});
    CHECK(a2a_collision_rate(shared, 0.2) == doctest::Approx(1.0));

    // The threshold is strict: exactly 0.2 m apart is not a collision...
    auto at_threshold = make_preds({{walk, shifted(walk, {0.0, 0.2})}});
    CHECK(a2a_collision_rate(at_threshold, 0.2) == doctest::Approx(0.0));
    // ...but anything inside it is.
    auto inside = make_preds({{walk, shifted(walk, {0.0, 0.19})}});
    CHECK(a2a_collision_rate(inside, 0.2) == doctest::Approx(1.0));

    // Hub agent grazing two well-separated agents at different timesteps:
    // three flagged agents out of three, never more than one event each.
    std::vector<Point2> hub_pts = {{0.0, 0.0}, {0.0, 10.0}};
    auto hub = make_preds({{Trajectory(std::move(hub_pts), 0.4),
                            line_trajectory({0.05, 0.0}, {0.0, 0.0}, 2),
                            line_trajectory({0.05, 10.0}, {0.0, 0.0}, 2)}});
    CHECK(a2a_collision_rate(hub, 0.2) == doctest::Approx(1.0));

    // Distinct trajectories at threshold zero never collide.
    auto distinct = make_preds({{walk, shifted(walk, {0.0, 3.0})}});
    CHECK(a2a_collision_rate(distinct, 0.0) == doctest::Approx(0.0));

    ScenePredictionSet no_agents;
    no_agents.samples = {{}};
    CHECK_THROWS_AS(a2a_collision_rate(no_agents, 0.2), std::invalid_argument);
    ScenePredictionSet no_samples;
    no_samples.agent_ids = {0, 1};
    CHECK_THROWS_AS(a2a_collision_rate(no_samples, 0.2), std::invalid_argument);
    auto ragged = make_preds({{walk, walk}, {walk}});
    CHECK_THROWS_AS(a2a_collision_rate(ragged, 0.2), std::invalid_argument);
}

TEST_CASE("agent collision rate matches the brute-force oracle") {
    std::mt19937 rng(4104);
    for (int trial = 0; trial < 20; ++trial) {
        auto [gt, preds] = random_instance(rng, 5, 5, 6, 1.5);
        if (preds.n_agents() < 2) continue;
        for (double threshold : {0.2, 0.5, 2.0}) {
            CHECK(a2a_collision_rate(preds, threshold) ==
                  doctest::Approx(oracle_a2a(preds, threshold)).epsilon(1e-15));
        }
    }
}

TEST_CASE("environment collision rate counts blocked trajectories") {
    NavigabilityMap open = NavigabilityMap::uniform(40, 40, {-10.0, -10.0}, 0.5);
    NavigabilityMap walled = open;
    // Block everything at x >= 5.
    for (int iy = 0; iy < walled.height; ++iy) {
        for (int ix = 0; ix < walled.width; ++ix) {
            if (walled.origin.x + ix * walled.resolution >= 5.0) walled.cell(ix, iy) = 0;
        }
    }

    const Trajectory safe = line_trajectory({-5.0, 0.0}, {0.5, 0.0}, 6);     // ends at -2.5
    const Trajectory crossing = line_trajectory({3.0, 0.0}, {0.5, 0.0}, 6);  // ends at 5.5
    const Trajectory off_map = line_trajectory({9.0, 0.0}, {0.5, 0.0}, 6);   // leaves the grid

    CHECK(env_collision_rate(make_preds({{safe, crossing}}), open) == doctest::Approx(0.0));
    CHECK(env_collision_rate(make_preds({{crossing}, {crossing}}), walled) == doctest::Approx(1.0));
    CHECK(env_collision_rate(make_preds({{off_map}}), open) == doctest::Approx(1.0));

    // Exactly one of four trajectories crosses the wall.
    auto mixed = make_preds({{safe, crossing}, {safe, shifted(safe, {0.0, 1.0})}});
    CHECK(env_collision_rate(mixed, walled) == doctest::Approx(0.25));

    std::mt19937 rng(4105);
    for (int trial = 0; trial < 20; ++trial) {
        auto [gt, preds] = random_instance(rng, 4, 4, 6, 8.0);
        CHECK(env_collision_rate(preds, walled) ==
              doctest::Approx(oracle_env(preds, walled)).epsilon(1e-15));
    }

    ScenePredictionSet empty;
    CHECK_THROWS_AS(env_collision_rate(empty, open), std::invalid_argument);
}

TEST_CASE("kde likelihood matches a direct density computation") {
    std::mt19937 rng(4106);
    for (int trial = 0; trial < 30; ++trial) {
        auto [gt, preds] = random_instance(rng);
        const double got = kde_nll(gt, preds);
        const double want = oracle_kde(gt, preds);
        CHECK(std::isfinite(got));
        CHECK(got == doctest::Approx(want).epsilon(1e-6));
    }
}

TEST_CASE("kde likelihood rewards mass near the truth") {
    std::mt19937 rng(4107);
    std::normal_distribution<double> jitter(0.0, 0.05);
    const Trajectory truth = line_trajectory({0.0, 0.0}, {0.5, 0.1}, 5);
    const Scene gt = make_gt({truth});

    std::vector<std::vector<Trajectory>> near_samples, far_samples;
    for (int s = 0; s < 20; ++s) {
        std::vector<Point2> near_pts, far_pts;
        for (const Point2& p : truth.points) {
            const double dx = jitter(rng), dy = jitter(rng);
            near_pts.push_back({p.x + dx, p.y + dy});
            far_pts.push_back({p.x + 100.0 + dx, p.y + dy});
        }
        near_samples.push_back({Trajectory(std::move(near_pts), truth.dt)});
        far_samples.push_back({Trajectory(std::move(far_pts), truth.dt)});
    }

    const double near_nll = kde_nll(gt, make_preds(near_samples));
    const double far_nll = kde_nll(gt, make_preds(far_samples));
    CHECK(near_nll < 0.0);       // tight density around the truth
    CHECK(far_nll > 100.0);      // all mass 100 m away
    CHECK(near_nll < far_nll);

    // A single exact sample runs on the floored bandwidth and stays finite.
    const double exact = kde_nll(gt, make_preds({{truth}}));
    CHECK(std::isfinite(exact));
    CHECK(exact == doctest::Approx(std::log(2.0 * kPi * 1e-3 * 1e-3)).epsilon(1e-9));

    // Translating truth and samples together changes nothing.
    Scene gt_shift = gt;
    gt_shift.futures[0] = shifted(truth, {7.0, -3.0});
    std::vector<std::vector<Trajectory>> near_shift;
    for (const auto& s : near_samples) near_shift.push_back({shifted(s[0], {7.0, -3.0})});
    CHECK(kde_nll(gt_shift, make_preds(near_shift)) == doctest::Approx(near_nll).epsilon(1e-9));
}

TEST_CASE("evaluate_scene assembles every metric and the counts") {
    std::mt19937 rng(4108);
    auto [gt, preds] = random_instance(rng, 4, 4, 6, 6.0);
    NavigabilityMap map = NavigabilityMap::uniform(40, 40, {-12.0, -12.0}, 0.6);

    const MetricsReport r = evaluate_scene(gt, preds, &map, 0.3);
    CHECK(r.min_ade == doctest::Approx(min_ade_fde(gt, preds).first));
    CHECK(r.min_fde == doctest::Approx(min_ade_fde(gt, preds).second));
    CHECK(r.jade == doctest::Approx(jade_jfde(gt, preds).first));
    CHECK(r.jfde == doctest::Approx(jade_jfde(gt, preds).second));
    CHECK(r.avg_ade == doctest::Approx(avg_ade_fde(gt, preds).first));
    CHECK(r.avg_fde == doctest::Approx(avg_ade_fde(gt, preds).second));
    CHECK(r.a2a_rate == doctest::Approx(a2a_collision_rate(preds, 0.3)));
    CHECK(r.env_rate == doctest::Approx(env_collision_rate(preds, map)));
    CHECK(r.nll == doctest::Approx(kde_nll(gt, preds)));
    CHECK(r.n_scenes == 1);
    CHECK(r.n_agents == preds.n_agents());
    CHECK(r.n_samples == preds.n_samples());
    CHECK(r.collision_threshold == doctest::Approx(0.3));

    // Without a map the environment rate stays unset.
    const MetricsReport no_map = evaluate_scene(gt, preds);
    CHECK(std::isnan(no_map.env_rate));
    CHECK_FALSE(std::isnan(no_map.a2a_rate));
    CHECK(no_map.collision_threshold == doctest::Approx(0.2));
}

TEST_CASE("accumulator pools scenes by agent and pair weights") {
    std::mt19937 rng(4109);
    NavigabilityMap map = NavigabilityMap::uniform(40, 40, {-12.0, -12.0}, 0.6);

    // Scene A: 2 agents x 2 samples, no map. Scene B: 3 agents x 4 samples.
    Scene gt_a, gt_b;
    ScenePredictionSet preds_a, preds_b;
    {
        std::vector<Trajectory> futures;
        for (int i = 0; i < 2; ++i) futures.push_back(random_trajectory(rng, 5));
        gt_a = make_gt(futures);
        std::vector<std::vector<Trajectory>> samples(2);
        for (auto& s : samples) {
            for (int i = 0; i < 2; ++i) s.push_back(random_trajectory(rng, 5));
        }
        preds_a = make_preds(samples);
    }
    {
        std::vector<Trajectory> futures;
        for (int i = 0; i < 3; ++i) futures.push_back(random_trajectory(rng, 4));
        gt_b = make_gt(futures);
        std::vector<std::vector<Trajectory>> samples(4);
        for (auto& s : samples) {
            for (int i = 0; i < 3; ++i) s.push_back(random_trajectory(rng, 4));
        }
        preds_b = make_preds(samples);
    }

    const MetricsReport ra = evaluate_scene(gt_a, preds_a, nullptr, 0.2);
    const MetricsReport rb = evaluate_scene(gt_b, preds_b, &map, 0.2);

    MetricsAccumulator acc;
    CHECK(acc.empty());
    acc.add(ra);
    acc.add(rb);
    CHECK_FALSE(acc.empty());
    const MetricsReport pooled = acc.report();

    // Displacement metrics pool per agent.
    CHECK(pooled.min_ade == doctest::Approx((ra.min_ade * 2 + rb.min_ade * 3) / 5).epsilon(1e-12));
    CHECK(pooled.min_fde == doctest::Approx((ra.min_fde * 2 + rb.min_fde * 3) / 5).epsilon(1e-12));
    CHECK(pooled.jade == doctest::Approx((ra.jade * 2 + rb.jade * 3) / 5).epsilon(1e-12));
    CHECK(pooled.jfde == doctest::Approx((ra.jfde * 2 + rb.jfde * 3) / 5).epsilon(1e-12));
    CHECK(pooled.avg_ade == doctest::Approx((ra.avg_ade * 2 + rb.avg_ade * 3) / 5).epsilon(1e-12));
    CHECK(pooled.avg_fde == doctest::Approx((ra.avg_fde * 2 + rb.avg_fde * 3) / 5).epsilon(1e-12));
    CHECK(pooled.nll == doctest::Approx((ra.nll * 2 + rb.nll * 3) / 5).epsilon(1e-12));

    // Collision rates pool per (agent, sample) pair: 2*2 = 4 and 3*4 = 12.
    CHECK(pooled.a2a_rate ==
          doctest::Approx((ra.a2a_rate * 4 + rb.a2a_rate * 12) / 16).epsilon(1e-12));
    // Scene A had no map, so the pooled env rate is scene B's alone.
    CHECK(pooled.env_rate == doctest::Approx(rb.env_rate).epsilon(1e-12));

    CHECK(pooled.n_scenes == 2);
    CHECK(pooled.n_agents == 5);
    CHECK(pooled.n_samples == 6);

    // Order independence.
    MetricsAccumulator acc2;
    acc2.add(rb);
    acc2.add(ra);
    const MetricsReport swapped = acc2.report();
    CHECK(swapped.min_ade == doctest::Approx(pooled.min_ade).epsilon(1e-12));
    CHECK(swapped.a2a_rate == doctest::Approx(pooled.a2a_rate).epsilon(1e-12));
    CHECK(swapped.env_rate == doctest::Approx(pooled.env_rate).epsilon(1e-12));
    CHECK(swapped.nll == doctest::Approx(pooled.nll).epsilon(1e-12));

    // An untouched accumulator reports unset metrics and zero counts.
    const MetricsReport blank = MetricsAccumulator().report();
    CHECK(std::isnan(blank.min_ade));
    CHECK(std::isnan(blank.a2a_rate));
    CHECK(std::isnan(blank.env_rate));
    CHECK(std::isnan(blank.nll));
    CHECK(blank.n_scenes == 0);
    CHECK(blank.n_agents == 0);
}

TEST_CASE("json report keeps values, nulls unset fields, and echoes config") {
    std::mt19937 rng(4110);
    auto [gt, preds] = random_instance(rng, 3, 3, 5);
    const MetricsReport r = evaluate_scene(gt, preds, nullptr, 0.25);

    const nlohmann::json j = nlohmann::json::parse(metrics_report_to_json(r));
    const auto& m = j.at("metrics");
    CHECK(m.at("min_ade").get<double>() == doctest::Approx(r.min_ade));
    CHECK(m.at("min_fde").get<double>() == doctest::Approx(r.min_fde));
    CHECK(m.at("jade").get<double>() == doctest::Approx(r.jade));
    CHECK(m.at("jfde").get<double>() == doctest::Approx(r.jfde));
    CHECK(m.at("avg_ade").get<double>() == doctest::Approx(r.avg_ade));
    CHECK(m.at("avg_fde").get<double>() == doctest::Approx(r.avg_fde));
    CHECK(m.at("a2a_collision_rate").get<double>() == doctest::Approx(r.a2a_rate));
    CHECK(m.at("kde_nll").get<double>() == doctest::Approx(r.nll));
    CHECK(m.at("env_collision_rate").is_null());  // no map supplied

    CHECK(j.at("counts").at("scenes").get<long>() == 1);
    CHECK(j.at("counts").at("agents").get<long>() == r.n_agents);
    CHECK(j.at("counts").at("samples").get<long>() == r.n_samples);
    CHECK(j.at("config").at("collision_threshold_m").get<double>() == doctest::Approx(0.25));
    CHECK(j.at("config").at("kde_bandwidth_rule").get<std::string>() == "silverman_per_dim");
}

TEST_CASE("shape validation rejects malformed prediction sets") {
    const Trajectory line = line_trajectory({0.0, 0.0}, {1.0, 0.0}, 4);
    const Scene gt = make_gt({line, shifted(line, {0.0, 5.0})});

    // Agent count mismatch.
    auto narrow = make_preds({{line}});
    CHECK_THROWS_AS(min_ade_fde(gt, narrow), std::invalid_argument);
    CHECK_THROWS_AS(jade_jfde(gt, narrow), std::invalid_argument);
    CHECK_THROWS_AS(avg_ade_fde(gt, narrow), std::invalid_argument);
    CHECK_THROWS_AS(kde_nll(gt, narrow), std::invalid_argument);

    // Zero samples.
    ScenePredictionSet empty;
    empty.agent_ids = {0, 1};
    CHECK_THROWS_AS(min_ade_fde(gt, empty), std::invalid_argument);

    // Ragged sample.
    auto ragged = make_preds({{line, shifted(line, {0.0, 5.0})}, {line}});
    ragged.agent_ids = {0, 1};
    CHECK_THROWS_AS(avg_ade_fde(gt, ragged), std::invalid_argument);

    // Horizon mismatch.
    auto short_horizon =
        make_preds({{line_trajectory({0.0, 0.0}, {1.0, 0.0}, 3), shifted(line, {0.0, 5.0})}});
    CHECK_THROWS_AS(jade_jfde(gt, short_horizon), std::invalid_argument);

    // Missing ground truth futures.
    Scene no_futures = gt;
    no_futures.futures.clear();
    auto ok = make_preds({{line, shifted(line, {0.0, 5.0})}});
    CHECK_THROWS_AS(min_ade_fde(no_futures, ok), std::invalid_argument);
}

}  // TEST_SUITE
