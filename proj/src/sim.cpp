// Copyright (c) 2026 fisheyeloc contributors
// SPDX-License-Identifier: Apache-2.0

#include "fisheyeloc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "fisheyeloc/errors.hpp"

namespace fisheyeloc::sim {

namespace {

constexpr double kPi = std::numbers::pi;

void validate_range(const std::array<double, 2>& range, const char* what) {
    if (!std::isfinite(range[0]) || !std::isfinite(range[1]) || range[0] <= 0.0 ||
        range[1] < range[0])
        throw ValidationError(std::string("scene config: invalid ") + what + " range");
}

}  // namespace

camera::FisheyeModel default_camera(double altitude, double image_side) {
    // Equidistant model with the image circle at 95% of the half side.
    const double focal = 0.95 * (image_side / 2.0) / camera::kThetaMax;
    return camera::FisheyeModel(focal, image_side / 2.0, image_side / 2.0,
                                {1.0, 0.0, 0.0, 0.0, 0.0}, altitude);
}

Scene generate_scene(const SceneConfig& config, std::uint64_t seed) {
    if (!std::isfinite(config.altitude) || config.altitude < kMinAltitude ||
        config.altitude > kMaxAltitude)
        throw ValidationError("scene config: altitude must lie in [" +
                              std::to_string(kMinAltitude) + ", " +
                              std::to_string(kMaxAltitude) + "] m");
    if (!std::isfinite(config.min_distance) || config.min_distance < 0.0 ||
        !std::isfinite(config.max_distance) || config.max_distance <= config.min_distance)
        throw ValidationError("scene config: placement annulus requires 0 <= min < max");
    validate_range(config.height_range, "height");
    validate_range(config.body_radius_range, "body radius");
    if (config.image_side <= 0.0)
        throw ValidationError("scene config: image side must be > 0");

    Scene scene{config.camera ? *config.camera
                              : default_camera(config.altitude, config.image_side),
                config.image_side,
                {},
                seed};
    if (!scene.model.altitude())
        throw ValidationError("scene config: camera must carry an altitude");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> angle(-kPi, kPi);
    std::uniform_real_distribution<double> height(config.height_range[0],
                                                  config.height_range[1]);
    std::uniform_real_distribution<double> body_radius(config.body_radius_range[0],
                                                       config.body_radius_range[1]);
    const double r0_sq = config.min_distance * config.min_distance;
    const double r1_sq = config.max_distance * config.max_distance;

    scene.persons.reserve(config.person_count);
    for (std::size_t i = 0; i < config.person_count; ++i) {
        PersonSpec person;
        person.height = height(rng);
        person.radius = body_radius(rng);
        bool placed = false;
        for (int attempt = 0; attempt < config.max_placement_retries; ++attempt) {
            const double rho = std::sqrt(r0_sq + unit(rng) * (r1_sq - r0_sq));
            const double phi = angle(rng);
            person.x = rho * std::cos(phi);
            person.y = rho * std::sin(phi);
            if (config.enforce_separation) {
                bool clash = false;
                for (const auto& other : scene.persons) {
                    const double gap = std::hypot(person.x - other.x, person.y - other.y);
                    if (gap < person.radius + other.radius) {
                        clash = true;
                        break;
                    }
                }
                if (clash) continue;
            }
            placed = true;
            break;
        }
        if (!placed)
            throw NumericalError(
                "generate_scene: placement retries exhausted; density infeasible");
        scene.persons.push_back(person);
    }
    return scene;
}

std::vector<SimulatedAnnotation> render_annotations(const Scene& scene) {
    if (!scene.model.altitude())
        throw ValidationError("render_annotations: scene camera lacks an altitude");
    const double altitude = *scene.model.altitude();
    const ImagePoint principal = scene.model.principal();

    std::vector<SimulatedAnnotation> out;
    out.reserve(scene.persons.size());
    for (std::size_t i = 0; i < scene.persons.size(); ++i) {
        const PersonSpec& person = scene.persons[i];
        SimulatedAnnotation ann;
        ann.person_index = i;
        ann.world = {person.x, person.y};
        ann.bucket = eval::bucket_of(std::hypot(person.x, person.y));

        const double head_depth = altitude - person.height;
        const double mid_depth = altitude - 0.5 * person.height;
        if (head_depth <= 0.0 || mid_depth <= 0.0) {
            // Body reaches the camera plane; leave the box unset.
            out.push_back(ann);
            continue;
        }

        const double rho = std::hypot(person.x, person.y);
        const ImagePoint foot_px =
            camera::ray_to_pixel(scene.model, {person.x, person.y, altitude});
        const ImagePoint head_px =
            camera::ray_to_pixel(scene.model, {person.x, person.y, head_depth});
        ann.anchor = foot_px;
        ann.head_pixel = head_px;

        // Tangential extremes at mid-height.
        double tx = 0.0, ty = 1.0;
        if (rho > 0.0) {
            tx = -person.y / rho;
            ty = person.x / rho;
        }
        const ImagePoint side_a = camera::ray_to_pixel(
            scene.model,
            {person.x + person.radius * tx, person.y + person.radius * ty, mid_depth});
        const ImagePoint side_b = camera::ray_to_pixel(
            scene.model,
            {person.x - person.radius * tx, person.y - person.radius * ty, mid_depth});
        const double width = std::hypot(side_a.u - side_b.u, side_a.v - side_b.v);

        if (rho < 1e-8) {
            // At nadir the radial direction is undefined; foot and head both
            // project to the principal point, so the box degenerates to the
            // lateral disc.
            ann.box = geometry::RadiusAlignedBox(principal.u, principal.v, width, width);
            out.push_back(ann);
            continue;
        }

        const double foot_dist = std::hypot(foot_px.u - principal.u, foot_px.v - principal.v);
        const double head_dist = std::hypot(head_px.u - principal.u, head_px.v - principal.v);
        const double box_h = head_dist - foot_dist;
        const double center_dist = 0.5 * (foot_dist + head_dist);
        const double phi = std::atan2(person.y, person.x);
        ann.box = geometry::RadiusAlignedBox(principal.u + center_dist * std::cos(phi),
                                             principal.v + center_dist * std::sin(phi),
                                             width, box_h);
        out.push_back(ann);
    }
    return out;
}

std::vector<matching::Detection> perturb_detections(
    std::span<const SimulatedAnnotation> annotations, const Scene& scene,
    const PerturbConfig& config, std::uint64_t seed) {
    if (config.miss_rate < 0.0 || config.miss_rate > 1.0 ||
        config.false_positive_rate < 0.0 || config.false_positive_rate > 1.0)
        throw ValidationError("perturb config: rates must lie in [0, 1]");
    if (config.center_sigma_px < 0.0 || config.size_sigma_px < 0.0)
        throw ValidationError("perturb config: sigmas must be >= 0");
    for (const auto& range : {config.tp_score_range, config.fp_score_range})
        if (range[0] < 0.0 || range[1] > 1.0 || range[1] < range[0])
            throw ValidationError("perturb config: score ranges must lie in [0, 1]");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> center_jitter(0.0,
                                                   std::max(config.center_sigma_px, 1e-300));
    std::normal_distribution<double> size_jitter(0.0, std::max(config.size_sigma_px, 1e-300));
    const double side = scene.image_side;

    const auto normalize = [&](double cx, double cy, double w, double h, double score) {
        return matching::Detection(
            geometry::RadiusAlignedBox(std::clamp(cx / side, 0.0, 1.0),
                                       std::clamp(cy / side, 0.0, 1.0),
                                       std::clamp(w / side, 1e-5, 1.0),
                                       std::clamp(h / side, 1e-5, 1.0)),
            score);
    };

    std::vector<const geometry::RadiusAlignedBox*> gt_boxes;
    for (const auto& ann : annotations)
        if (ann.box) gt_boxes.push_back(&*ann.box);

    std::vector<matching::Detection> out;
    for (const auto* box : gt_boxes) {
        const bool miss = unit(rng) < config.miss_rate;
        double cx = box->cx(), cy = box->cy(), w = box->w(), h = box->h();
        if (config.center_sigma_px > 0.0) {
            cx += center_jitter(rng);
            cy += center_jitter(rng);
        }
        if (config.size_sigma_px > 0.0) {
            w += size_jitter(rng);
            h += size_jitter(rng);
        }
        const double score =
            config.tp_score_range[0] +
            (config.tp_score_range[1] - config.tp_score_range[0]) * unit(rng);
        if (!miss) out.push_back(normalize(cx, cy, w, h, score));
    }

    if (!gt_boxes.empty() && config.false_positive_rate > 0.0) {
        const ImagePoint principal = scene.model.principal();
        const double circle = 0.98 * scene.model.focal() * scene.model.max_radius();
        std::uniform_int_distribution<std::size_t> pick(0, gt_boxes.size() - 1);
        for (std::size_t i = 0; i < gt_boxes.size(); ++i) {
            if (unit(rng) >= config.false_positive_rate) continue;
            const double rho = circle * std::sqrt(unit(rng));
            const double phi = -kPi + 2.0 * kPi * unit(rng);
            const geometry::RadiusAlignedBox& shape = *gt_boxes[pick(rng)];
            const double score =
                config.fp_score_range[0] +
                (config.fp_score_range[1] - config.fp_score_range[0]) * unit(rng);
            out.push_back(normalize(principal.u + rho * std::cos(phi),
                                    principal.v + rho * std::sin(phi), shape.w(), shape.h(),
                                    score));
        }
    }
    return out;
}

}  // namespace fisheyeloc::sim
