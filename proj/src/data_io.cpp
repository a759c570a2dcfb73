#include "scenealign/data_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>

#include "nlohmann/json.hpp"
#include "scenealign/errors.hpp"
#include "scenealign/rng.hpp"

namespace scenealign {

using json = nlohmann::json;

std::vector<RawAnnotation> parse_trajectory_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("parse_trajectory_file: cannot open " + path);

    std::vector<RawAnnotation> rows;
    std::map<std::pair<long, int>, long> seen;  // (frame, agent) -> first line
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;

        std::istringstream fields(line);
        double frame = 0, agent = 0;
        RawAnnotation a;
        if (!(fields >> frame >> agent >> a.x >> a.y)) {
            throw DataError(path + ":" + std::to_string(line_no) +
                            ": malformed row (expected 'frame agent_id x y')");
        }
        std::string extra;
        if (fields >> extra) {
            throw DataError(path + ":" + std::to_string(line_no) + ": trailing fields");
        }
        if (!std::isfinite(a.x) || !std::isfinite(a.y)) {
            throw DataError(path + ":" + std::to_string(line_no) + ": non-finite coordinate");
        }
        a.frame = std::lround(frame);
        a.agent_id = static_cast<int>(std::lround(agent));
        const auto [it, inserted] = seen.emplace(std::make_pair(a.frame, a.agent_id), line_no);
        if (!inserted) {
            throw DataError(path + ":" + std::to_string(line_no) + ": duplicate (frame " +
                            std::to_string(a.frame) + ", agent " + std::to_string(a.agent_id) +
                            "), first at line " + std::to_string(it->second));
        }
        rows.push_back(a);
    }
    std::sort(rows.begin(), rows.end(), [](const RawAnnotation& l, const RawAnnotation& r) {
        if (l.frame != r.frame) return l.frame < r.frame;
        return l.agent_id < r.agent_id;
    });
    return rows;
}

void write_trajectory_file(const std::vector<RawAnnotation>& rows, const std::string& path) {
    std::vector<RawAnnotation> sorted = rows;
    std::sort(sorted.begin(), sorted.end(), [](const RawAnnotation& l, const RawAnnotation& r) {
        if (l.frame != r.frame) return l.frame < r.frame;
        return l.agent_id < r.agent_id;
    });
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("write_trajectory_file: cannot open " + path);
    char buf[128];
    for (const auto& a : sorted) {
        std::snprintf(buf, sizeof(buf), "%ld %d %.17g %.17g\n", a.frame, a.agent_id, a.x, a.y);
        out << buf;
    }
    if (!out) throw DataError("write_trajectory_file: write failed for " + path);
}

std::vector<Scene> make_windows(const std::vector<RawAnnotation>& rows,
                                const WindowConfig& cfg, const std::string& id_prefix) {
    if (cfg.obs_len <= 0 || cfg.pred_len <= 0 || cfg.stride <= 0 || cfg.frame_step <= 0 ||
        cfg.dt <= 0) {
        throw std::invalid_argument("make_windows: config fields must be positive");
    }
    std::vector<Scene> scenes;
    if (rows.empty()) return scenes;

    std::map<long, std::map<int, Point2>> by_frame;
    for (const auto& a : rows) by_frame[a.frame][a.agent_id] = {a.x, a.y};
    const long min_frame = by_frame.begin()->first;
    const long max_frame = by_frame.rbegin()->first;
    const int horizon = cfg.horizon();
    const long span = static_cast<long>(horizon - 1) * cfg.frame_step;

    for (long start = min_frame; start + span <= max_frame; start += cfg.stride) {
        const auto first = by_frame.find(start);
        if (first == by_frame.end()) continue;

        Scene scene;
        scene.id = id_prefix + std::to_string(start);
        for (const auto& [agent, p0] : first->second) {
            Trajectory full{{}, cfg.dt};
            full.points.reserve(static_cast<std::size_t>(horizon));
            bool complete = true;
            for (int k = 0; k < horizon; ++k) {
                const auto frame_it = by_frame.find(start + static_cast<long>(k) * cfg.frame_step);
                if (frame_it == by_frame.end()) {
                    complete = false;
                    break;
                }
                const auto agent_it = frame_it->second.find(agent);
                if (agent_it == frame_it->second.end()) {
                    complete = false;
                    break;
                }
                full.points.push_back(agent_it->second);
            }
            if (!complete) continue;
            scene.agent_ids.push_back(agent);
            scene.histories.emplace_back(
                std::vector<Point2>(full.points.begin(), full.points.begin() + cfg.obs_len),
                cfg.dt);
            scene.futures.emplace_back(
                std::vector<Point2>(full.points.begin() + cfg.obs_len, full.points.end()),
                cfg.dt);
        }
        if (!scene.agent_ids.empty()) scenes.push_back(std::move(scene));
    }
    return scenes;
}

ScenarioKind scenario_kind_from_string(const std::string& name) {
    if (name == "crossing") return ScenarioKind::kCrossing;
    if (name == "parallel") return ScenarioKind::kParallel;
    if (name == "circle") return ScenarioKind::kCircle;
    if (name == "head_on") return ScenarioKind::kHeadOn;
    throw std::invalid_argument("unknown scenario kind '" + name +
                                "' (want crossing|parallel|circle|head_on)");
}

std::string to_string(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::kCrossing: return "crossing";
        case ScenarioKind::kParallel: return "parallel";
        case ScenarioKind::kCircle: return "circle";
        case ScenarioKind::kHeadOn: return "head_on";
    }
    throw std::invalid_argument("unknown scenario kind");
}

Scene generate_synthetic_scene(const SyntheticScenario& sc) {
    if (sc.n_agents < 1) throw std::invalid_argument("generate_synthetic_scene: n_agents >= 1");
    if (sc.noise_std < 0) throw std::invalid_argument("generate_synthetic_scene: negative noise");
    if (sc.speed <= 0 || sc.dt <= 0) {
        throw std::invalid_argument("generate_synthetic_scene: speed and dt must be positive");
    }
    if (sc.obs_len < 2 || sc.pred_len < 1) {
        throw std::invalid_argument("generate_synthetic_scene: need obs_len >= 2, pred_len >= 1");
    }
    const int horizon = sc.obs_len + sc.pred_len;
    // Conflicting variants put their meeting point this many steps in, i.e.
    // midway through the future.
    const int t_meet = sc.obs_len + sc.pred_len / 2;
    const double step = sc.speed * sc.dt;

    std::vector<std::vector<Point2>> pts(static_cast<std::size_t>(sc.n_agents),
                                         std::vector<Point2>(static_cast<std::size_t>(horizon)));
    for (int k = 0; k < sc.n_agents; ++k) {
        const double lane = static_cast<double>(k / 2) * sc.gap;
        for (int t = 0; t < horizon; ++t) {
            const double advance = static_cast<double>(t - t_meet) * step;
            Point2 p;
            switch (sc.kind) {
                case ScenarioKind::kCrossing:
                    // Pairs cross orthogonally at (lane, lane).
                    p = (k % 2 == 0) ? Point2{advance + lane, lane} : Point2{lane, advance + lane};
                    break;
                case ScenarioKind::kParallel:
                    p = {static_cast<double>(t - sc.obs_len + 1) * step,
                         static_cast<double>(k) * sc.gap};
                    break;
                case ScenarioKind::kCircle: {
                    const double angle = 2.0 * 3.14159265358979323846 * k /
                                         static_cast<double>(sc.n_agents);
                    const double radial = static_cast<double>(t_meet - t) * step;
                    p = {radial * std::cos(angle), radial * std::sin(angle)};
                    break;
                }
                case ScenarioKind::kHeadOn:
                    p = {(k % 2 == 0) ? advance : -advance, lane};
                    break;
            }
            pts[static_cast<std::size_t>(k)][static_cast<std::size_t>(t)] = p;
        }
    }
    if (sc.noise_std > 0) {
        Rng rng(mix_seed(sc.seed, 0x73796e7468ULL));
        for (auto& agent : pts) {
            for (auto& p : agent) {
                p.x += rng.gaussian() * sc.noise_std;
                p.y += rng.gaussian() * sc.noise_std;
            }
        }
    }

    Scene scene;
    scene.id = to_string(sc.kind) + "-" + std::to_string(sc.seed);
    for (int k = 0; k < sc.n_agents; ++k) {
        const auto& full = pts[static_cast<std::size_t>(k)];
        scene.agent_ids.push_back(k);
        scene.histories.emplace_back(
            std::vector<Point2>(full.begin(), full.begin() + sc.obs_len), sc.dt);
        scene.futures.emplace_back(
            std::vector<Point2>(full.begin() + sc.obs_len, full.end()), sc.dt);
    }
    return scene;
}

namespace {

struct PngImage {
    int width = 0;
    int height = 0;
    std::vector<unsigned char> pixels;  // row-major, top row first
};

// Reads any PNG down to 8-bit grayscale (colors go through the standard
// luminance conversion, alpha is stripped).
PngImage read_png_gray8(const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw DataError("load_navigability_map: cannot open " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw DataError("load_navigability_map: libpng initialization failed");
    }

    PngImage img;
    std::vector<png_bytep> row_ptrs;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw DataError("load_navigability_map: failed to decode " + path);
    }
    png_init_io(png, fp);
    png_read_info(png, info);

    const png_byte color_type = png_get_color_type(png, info);
    const png_byte bit_depth = png_get_bit_depth(png, info);
    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type & PNG_COLOR_MASK_COLOR) png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    if (color_type & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS)) {
        png_set_strip_alpha(png);
    }
    png_read_update_info(png, info);

    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    if (png_get_rowbytes(png, info) != static_cast<std::size_t>(img.width)) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw DataError("load_navigability_map: unexpected row layout in " + path);
    }
    img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
    row_ptrs.resize(static_cast<std::size_t>(img.height));
    for (int r = 0; r < img.height; ++r) {
        row_ptrs[static_cast<std::size_t>(r)] =
            img.pixels.data() + static_cast<std::size_t>(r) * img.width;
    }
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    return img;
}

void write_png_gray8(const std::string& path, int width, int height,
                     const std::vector<unsigned char>& pixels) {
    std::FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw DataError("save_navigability_map: cannot open " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw DataError("save_navigability_map: libpng initialization failed");
    }
    std::vector<png_bytep> row_ptrs(static_cast<std::size_t>(height));
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw DataError("save_navigability_map: failed to encode " + path);
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int r = 0; r < height; ++r) {
        row_ptrs[static_cast<std::size_t>(r)] = const_cast<png_bytep>(
            pixels.data() + static_cast<std::size_t>(r) * width);
    }
    png_write_image(png, row_ptrs.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

}  // namespace

NavigabilityMap load_navigability_map(const std::string& png_path,
                                      const std::string& json_path) {
    const PngImage img = read_png_gray8(png_path);

    std::ifstream in(json_path);
    if (!in) throw DataError("load_navigability_map: missing sidecar " + json_path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("load_navigability_map: bad sidecar " + json_path + ": " + e.what());
    }
    NavigabilityMap map;
    try {
        map.origin = {j.at("origin_x").get<double>(), j.at("origin_y").get<double>()};
        map.resolution = j.at("resolution_m_per_px").get<double>();
        map.scene_id = j.at("scene_id").get<std::string>();
    } catch (const json::exception& e) {
        throw DataError("load_navigability_map: sidecar " + json_path +
                        " lacks a required field: " + e.what());
    }
    if (map.resolution <= 0) {
        throw DataError("load_navigability_map: non-positive resolution in " + json_path);
    }
    const bool y_up = j.value("y_up", false);
    if (j.contains("width") && j.at("width").get<int>() != img.width) {
        throw DataError("load_navigability_map: sidecar width disagrees with " + png_path);
    }
    if (j.contains("height") && j.at("height").get<int>() != img.height) {
        throw DataError("load_navigability_map: sidecar height disagrees with " + png_path);
    }

    map.width = img.width;
    map.height = img.height;
    map.cells.assign(static_cast<std::size_t>(img.width) * img.height, 0);
    for (int r = 0; r < img.height; ++r) {
        const int iy = y_up ? r : img.height - 1 - r;
        for (int c = 0; c < img.width; ++c) {
            map.cell(c, iy) =
                img.pixels[static_cast<std::size_t>(r) * img.width + c] >= 128 ? 1 : 0;
        }
    }
    return map;
}

void save_navigability_map(const NavigabilityMap& map, const std::string& png_path,
                           const std::string& json_path) {
    if (map.width < 1 || map.height < 1) {
        throw std::invalid_argument("save_navigability_map: empty map");
    }
    // Written in the default orientation: top pixel row = highest-y cells.
    std::vector<unsigned char> pixels(static_cast<std::size_t>(map.width) * map.height);
    for (int r = 0; r < map.height; ++r) {
        const int iy = map.height - 1 - r;
        for (int c = 0; c < map.width; ++c) {
            pixels[static_cast<std::size_t>(r) * map.width + c] =
                map.navigable_cell(c, iy) ? 255 : 0;
        }
    }
    write_png_gray8(png_path, map.width, map.height, pixels);

    json j;
    j["origin_x"] = map.origin.x;
    j["origin_y"] = map.origin.y;
    j["resolution_m_per_px"] = map.resolution;
    j["scene_id"] = map.scene_id;
    j["width"] = map.width;
    j["height"] = map.height;
    std::ofstream out(json_path, std::ios::binary);
    if (!out) throw DataError("save_navigability_map: cannot open " + json_path);
    out << j.dump() << '\n';
    if (!out) throw DataError("save_navigability_map: write failed for " + json_path);
}

SplitConfig load_split_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("load_split_config: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("load_split_config: bad JSON in " + path + ": " + e.what());
    }
    SplitConfig cfg;
    try {
        cfg.train = j.at("train").get<std::vector<std::string>>();
        cfg.test = j.at("test").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw DataError("load_split_config: " + path + " needs 'train' and 'test' lists: " +
                        e.what());
    }
    cfg.frame_step = j.value("frame_step", cfg.frame_step);
    cfg.stride = j.value("stride", cfg.stride);
    if (cfg.frame_step <= 0 || cfg.stride <= 0) {
        throw DataError("load_split_config: frame_step and stride must be positive in " + path);
    }
    return cfg;
}

void write_predictions(const std::vector<ScenePredictionSet>& scenes, std::uint64_t seed,
                       const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("write_predictions: cannot open " + path);
    for (const auto& scene : scenes) {
        for (int s = 0; s < scene.n_samples(); ++s) {
            json line;
            line["scene"] = scene.scene_id;
            line["sample"] = s;
            line["energy"] = s < static_cast<int>(scene.energies.size())
                                 ? scene.energies[static_cast<std::size_t>(s)]
                                 : 0.0;
            line["seed"] = seed;
            json agents = json::object();
            for (int i = 0; i < scene.n_agents(); ++i) {
                json pts = json::array();
                for (const auto& p : scene.samples[static_cast<std::size_t>(s)]
                                                  [static_cast<std::size_t>(i)]
                                                      .points) {
                    pts.push_back({p.x, p.y});
                }
                agents[std::to_string(scene.agent_ids[static_cast<std::size_t>(i)])] =
                    std::move(pts);
            }
            line["agents"] = std::move(agents);
            out << line.dump() << '\n';
        }
    }
    if (!out) throw DataError("write_predictions: write failed for " + path);
}

std::vector<ScenePredictionSet> read_predictions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("read_predictions: cannot open " + path);

    std::vector<ScenePredictionSet> scenes;
    std::map<std::string, std::size_t> index_of;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw DataError(path + ":" + std::to_string(line_no) + ": bad JSON: " + e.what());
        }
        try {
            const std::string scene_id = j.at("scene").get<std::string>();
            auto [it, inserted] = index_of.emplace(scene_id, scenes.size());
            if (inserted) {
                scenes.emplace_back();
                scenes.back().scene_id = scene_id;
            }
            ScenePredictionSet& scene = scenes[it->second];

            std::vector<std::pair<int, Trajectory>> agents;
            for (const auto& [key, pts] : j.at("agents").items()) {
                int id = 0;
                try {
                    std::size_t used = 0;
                    id = std::stoi(key, &used);
                    if (used != key.size()) throw std::invalid_argument(key);
                } catch (const std::exception&) {
                    throw DataError(path + ":" + std::to_string(line_no) +
                                    ": non-numeric agent id '" + key + "'");
                }
                Trajectory traj;
                traj.points.reserve(pts.size());
                for (const auto& p : pts) {
                    traj.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
                }
                agents.emplace_back(id, std::move(traj));
            }
            std::sort(agents.begin(), agents.end(),
                      [](const auto& l, const auto& r) { return l.first < r.first; });

            if (scene.agent_ids.empty()) {
                for (const auto& [id, traj] : agents) scene.agent_ids.push_back(id);
            } else {
                std::vector<int> ids;
                for (const auto& [id, traj] : agents) ids.push_back(id);
                if (ids != scene.agent_ids) {
                    throw DataError(path + ":" + std::to_string(line_no) +
                                    ": agent set changed within scene '" + scene.scene_id + "'");
                }
            }
            std::vector<Trajectory> sample;
            sample.reserve(agents.size());
            for (auto& [id, traj] : agents) sample.push_back(std::move(traj));
            scene.samples.push_back(std::move(sample));
            scene.energies.push_back(j.value("energy", 0.0));
        } catch (const json::exception& e) {
            throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return scenes;
}

}  // namespace scenealign
