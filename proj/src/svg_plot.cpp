#include "scenealign/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace scenealign {

namespace {

struct Bounds {
    double min_x = std::numeric_limits<double>::infinity();
    double min_y = std::numeric_limits<double>::infinity();
    double max_x = -std::numeric_limits<double>::infinity();
    double max_y = -std::numeric_limits<double>::infinity();

    void include(const Point2& p) {
        min_x = std::min(min_x, p.x);
        min_y = std::min(min_y, p.y);
        max_x = std::max(max_x, p.x);
        max_y = std::max(max_y, p.y);
    }
    void include(const Trajectory& t) {
        for (const auto& p : t.points) include(p);
    }
};

void append_fmt(std::string& out, const char* fmt, double a, double b) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), fmt, a, b);
    out += buf;
}

}  // namespace

std::string render_scene_svg(const ScenePredictionSet& preds, const Scene* gt,
                             const NavigabilityMap* map, double collision_threshold) {
    if (preds.samples.empty()) {
        throw std::invalid_argument("render_scene_svg: no samples to draw");
    }

    Bounds b;
    if (map) {
        b.include(map->origin);
        b.include({map->origin.x + map->width * map->resolution,
                   map->origin.y + map->height * map->resolution});
    }
    if (gt) {
        for (const auto& h : gt->histories) b.include(h);
        for (const auto& f : gt->futures) b.include(f);
    }
    for (const auto& sample : preds.samples) {
        for (const auto& traj : sample) b.include(traj);
    }
    const double margin = 1.0;  // meters
    b.min_x -= margin;
    b.min_y -= margin;
    b.max_x += margin;
    b.max_y += margin;
    const double span = std::max(b.max_x - b.min_x, b.max_y - b.min_y);
    const double scale = 720.0 / span;
    const double width = (b.max_x - b.min_x) * scale;
    const double height = (b.max_y - b.min_y) * scale;

    // World +y is up; SVG +y is down.
    auto sx = [&](double x) { return (x - b.min_x) * scale; };
    auto sy = [&](double y) { return (b.max_y - y) * scale; };

    std::string svg;
    svg.reserve(1 << 16);
    {
        char head[256];
        std::snprintf(head, sizeof(head),
                      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
                      "viewBox=\"0 0 %.0f %.0f\">\n",
                      width, height, width, height);
        svg += head;
    }
    append_fmt(svg, "<rect width=\"%.0f\" height=\"%.0f\" fill=\"#ffffff\"/>\n", width, height);

    if (map) {
        svg += "<g fill=\"#c8c8c8\">\n";
        const double cell_px = map->resolution * scale;
        for (int iy = 0; iy < map->height; ++iy) {
            for (int ix = 0; ix < map->width; ++ix) {
                if (map->navigable_cell(ix, iy)) continue;
                const double wx = map->origin.x + ix * map->resolution;
                const double wy = map->origin.y + (iy + 1) * map->resolution;  // top edge
                char buf[160];
                std::snprintf(buf, sizeof(buf),
                              "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\"/>\n",
                              sx(wx), sy(wy), cell_px, cell_px);
                svg += buf;
            }
        }
        svg += "</g>\n";
    }

    auto polyline = [&](const Trajectory& traj, const char* style) {
        svg += "<polyline points=\"";
        for (std::size_t i = 0; i < traj.size(); ++i) {
            if (i) svg += ' ';
            append_fmt(svg, "%.2f,%.2f", sx(traj[i].x), sy(traj[i].y));
        }
        svg += "\" fill=\"none\" ";
        svg += style;
        svg += "/>\n";
    };

    // Predictions first so context draws on top of the red cloud.
    for (const auto& sample : preds.samples) {
        for (const auto& traj : sample) {
            polyline(traj,
                     "stroke=\"#d62728\" stroke-width=\"1.5\" stroke-dasharray=\"5 4\" "
                     "stroke-opacity=\"0.55\"");
        }
    }
    if (gt) {
        for (const auto& h : gt->histories) {
            polyline(h, "stroke=\"#1f77b4\" stroke-width=\"2.5\"");
        }
        for (const auto& f : gt->futures) {
            polyline(f, "stroke=\"#2ca02c\" stroke-width=\"2.5\"");
        }
    }

    // Collision markers: midpoint of any same-sample agent pair that comes
    // within the threshold.
    svg += "<g fill=\"none\" stroke=\"#ff7f0e\" stroke-width=\"2\">\n";
    for (const auto& sample : preds.samples) {
        for (std::size_t i = 0; i < sample.size(); ++i) {
            for (std::size_t j = i + 1; j < sample.size(); ++j) {
                const std::size_t steps = std::min(sample[i].size(), sample[j].size());
                for (std::size_t t = 0; t < steps; ++t) {
                    if (distance(sample[i][t], sample[j][t]) >= collision_threshold) continue;
                    const Point2 mid{(sample[i][t].x + sample[j][t].x) / 2,
                                     (sample[i][t].y + sample[j][t].y) / 2};
                    char buf[96];
                    std::snprintf(buf, sizeof(buf), "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"5\"/>\n",
                                  sx(mid.x), sy(mid.y));
                    svg += buf;
                }
            }
        }
    }
    svg += "</g>\n</svg>\n";
    return svg;
}

}  // namespace scenealign
