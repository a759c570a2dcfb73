// Static SVG rendering of one scene: map obstacles, agent histories, ground
// truth futures, predicted samples, and collision markers.

#pragma once

#include <string>

#include "scenealign/environment.hpp"
#include "scenealign/geometry.hpp"
#include "scenealign/metrics.hpp"

namespace scenealign {

/// Histories are solid blue, GT futures solid green, predicted samples
/// dashed red, and any point where two agents of one sample come within
/// collision_threshold gets an orange marker. `gt` and `map` may be null.
/// Output is byte-deterministic for identical inputs (fixed precision, no
/// timestamps).
std::string render_scene_svg(const ScenePredictionSet& preds, const Scene* gt,
                             const NavigabilityMap* map, double collision_threshold = 0.2);

}  // namespace scenealign
