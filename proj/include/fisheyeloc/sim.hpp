// Copyright (c) 2026 fisheyeloc contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fisheyeloc/camera.hpp"
#include "fisheyeloc/eval.hpp"
#include "fisheyeloc/geometry.hpp"
#include "fisheyeloc/matching.hpp"
#include "fisheyeloc/types.hpp"

namespace fisheyeloc::sim {

/// Capture envelope of the overhead rigs this simulator mirrors.
inline constexpr double kMinAltitude = 2.5;
inline constexpr double kMaxAltitude = 4.0;

/// A person as a vertical segment with a lateral radius, standing at (x, y)
/// metres from nadir.
struct PersonSpec {
    double x = 0.0;
    double y = 0.0;
    double height = 1.7;
    double radius = 0.25;
};

struct Scene {
    camera::FisheyeModel model;
    double image_side = 2952.0;
    std::vector<PersonSpec> persons;
    std::uint64_t seed = 0;
};

struct SceneConfig {
    double altitude = 3.0;  // metres, within [kMinAltitude, kMaxAltitude]
    std::size_t person_count = 10;
    /// Placement annulus around nadir in metres (uniform by area).
    double min_distance = 0.0;
    double max_distance = 10.0;
    std::array<double, 2> height_range{1.7, 1.7};
    std::array<double, 2> body_radius_range{0.25, 0.25};
    double image_side = 2952.0;
    /// Reject placements whose body discs overlap an earlier person's.
    bool enforce_separation = true;
    int max_placement_retries = 1000;
    /// Custom camera (must carry an altitude); the default is an equidistant
    /// model centred on the image with the circle just inside the frame.
    std::optional<camera::FisheyeModel> camera;
};

/// Equidistant model centred on an image_side x image_side frame.
camera::FisheyeModel default_camera(double altitude, double image_side);

/// Deterministic for a given seed. Throws ValidationError on an invalid
/// config and NumericalError when the density is infeasible under the
/// separation constraint.
Scene generate_scene(const SceneConfig& config, std::uint64_t seed);

/// Ground-truth record for one person. box is absent when any part of the
/// body reaches the camera plane (unprojectable). The anchor equals the
/// projected foot point; for off-nadir persons it coincides with the box's
/// near-side midpoint by construction.
struct SimulatedAnnotation {
    std::size_t person_index = 0;
    std::optional<geometry::RadiusAlignedBox> box;  // pixels
    ImagePoint anchor;                              // projected foot point
    ImagePoint head_pixel;                          // projected head point
    std::array<double, 2> world{0.0, 0.0};          // (x, y) metres from nadir
    eval::DistanceBucket bucket = eval::DistanceBucket::near;
};

/// Projects every person through the scene camera into a radius-aligned box:
/// the radial extent spans the projected foot-to-head pixel span, the
/// tangential extent the projected lateral width at mid-height.
std::vector<SimulatedAnnotation> render_annotations(const Scene& scene);

struct PerturbConfig {
    double center_sigma_px = 0.0;
    double size_sigma_px = 0.0;
    double miss_rate = 0.0;
    double false_positive_rate = 0.0;
    std::array<double, 2> tp_score_range{1.0, 1.0};
    std::array<double, 2> fp_score_range{0.1, 0.9};
};

/// Synthetic detector output: jittered copies of the ground truth with
/// misses dropped and false positives injected uniformly in the image
/// circle, sized from the empirical box distribution. Detections are
/// normalised by the scene's image side. Deterministic for a given seed.
std::vector<matching::Detection> perturb_detections(
    std::span<const SimulatedAnnotation> annotations, const Scene& scene,
    const PerturbConfig& config, std::uint64_t seed);

}  // namespace fisheyeloc::sim
