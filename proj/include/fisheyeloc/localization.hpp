// Copyright (c) 2026 fisheyeloc contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "fisheyeloc/camera.hpp"
#include "fisheyeloc/geometry.hpp"
#include "fisheyeloc/sim.hpp"
#include "fisheyeloc/types.hpp"

namespace fisheyeloc::localization {

/// Image point taken to correspond to the person's floor position.
enum class AnchorStrategy {
    /// Midpoint of the box side nearest the principal point.
    radial_near_midpoint,
    /// Centre of the box; the baseline carried over from prior detectors.
    box_center,
    /// A provided head pixel mapped directly; quantifies how far the head
    /// projection sits from the true floor position.
    head_center,
};

const char* strategy_name(AnchorStrategy strategy);
std::optional<AnchorStrategy> strategy_from_name(const std::string& name);

struct LocalizationResult {
    double x = 0.0;  // metres east of nadir (+u direction)
    double y = 0.0;  // metres north of nadir (+v direction)
    ImagePoint anchor;
    double theta = 0.0;
    double phi = 0.0;
};

/// Horizon guard: tan(theta) diverges at pi/2, so anchors at the image-circle
/// rim are reported unlocalizable instead of emitting huge coordinates.
inline constexpr double kHorizonMargin = 1e-6;

/// Maps a pixel through the camera model to a floor position:
/// (x, y) = Z * (tan(theta) cos(phi), tan(theta) sin(phi)).
/// Requires a model altitude; throws UnlocalizableError at the horizon guard.
LocalizationResult localize_pixel(const ImagePoint& pixel,
                                  const camera::FisheyeModel& model);

/// Localizes a pixel-space box under the chosen anchor strategy. head_pixel
/// is required by head_center and ignored otherwise.
LocalizationResult localize(const geometry::RadiusAlignedBox& box_px,
                            const camera::FisheyeModel& model, AnchorStrategy strategy,
                            const std::optional<ImagePoint>& head_pixel = std::nullopt);

struct StrategyErrors {
    double radial_near_midpoint = 0.0;
    double box_center = 0.0;
    double head_center = 0.0;
    std::size_t person_count = 0;
    std::size_t skipped = 0;  // unprojectable or degenerate persons
};

/// Localizes every ground-truth box of a simulated scene under each strategy
/// and returns the mean Euclidean positional error per strategy.
StrategyErrors compare_strategies(const sim::Scene& scene);

}  // namespace fisheyeloc::localization
