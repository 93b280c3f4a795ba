// Copyright (c) 2026 fisheyeloc contributors
// SPDX-License-Identifier: Apache-2.0

#include "fisheyeloc/localization.hpp"

#include <cmath>

#include "fisheyeloc/errors.hpp"

namespace fisheyeloc::localization {

const char* strategy_name(AnchorStrategy strategy) {
    switch (strategy) {
        case AnchorStrategy::radial_near_midpoint: return "radial-near-midpoint";
        case AnchorStrategy::box_center: return "box-center";
        case AnchorStrategy::head_center: return "head-center";
    }
    return "?";
}

std::optional<AnchorStrategy> strategy_from_name(const std::string& name) {
    if (name == "radial-near-midpoint" || name == "anchor")
        return AnchorStrategy::radial_near_midpoint;
    if (name == "box-center" || name == "center") return AnchorStrategy::box_center;
    if (name == "head-center" || name == "head") return AnchorStrategy::head_center;
    return std::nullopt;
}

LocalizationResult localize_pixel(const ImagePoint& pixel,
                                  const camera::FisheyeModel& model) {
    if (!model.altitude())
        throw ValidationError("localize: camera model carries no altitude");
    const camera::NormalizedRay ray = camera::pixel_to_ray(model, pixel);
    if (ray.theta >= camera::kThetaMax - kHorizonMargin)
        throw UnlocalizableError("localize: ray at the horizon guard (theta ~ pi/2)");
    const double ground = *model.altitude() * std::tan(ray.theta);
    LocalizationResult result;
    result.x = ground * std::cos(ray.phi);
    result.y = ground * std::sin(ray.phi);
    result.anchor = pixel;
    result.theta = ray.theta;
    result.phi = ray.phi;
    return result;
}

LocalizationResult localize(const geometry::RadiusAlignedBox& box_px,
                            const camera::FisheyeModel& model, AnchorStrategy strategy,
                            const std::optional<ImagePoint>& head_pixel) {
    ImagePoint anchor;
    switch (strategy) {
        case AnchorStrategy::radial_near_midpoint:
            anchor = geometry::anchor_point(box_px, model.principal());
            break;
        case AnchorStrategy::box_center:
            anchor = {box_px.cx(), box_px.cy()};
            break;
        case AnchorStrategy::head_center:
            if (!head_pixel)
                throw ValidationError("localize: head-center strategy needs a head pixel");
            anchor = *head_pixel;
            break;
    }
    return localize_pixel(anchor, model);
}

StrategyErrors compare_strategies(const sim::Scene& scene) {
    StrategyErrors out;
    const auto annotations = sim::render_annotations(scene);
    double sum_anchor = 0.0, sum_center = 0.0, sum_head = 0.0;
    for (const auto& ann : annotations) {
        if (!ann.box) {
            ++out.skipped;
            continue;
        }
        LocalizationResult anchor_result, center_result, head_result;
        try {
            anchor_result =
                localize(*ann.box, scene.model, AnchorStrategy::radial_near_midpoint);
            center_result = localize(*ann.box, scene.model, AnchorStrategy::box_center);
            head_result = localize_pixel(ann.head_pixel, scene.model);
        } catch (const Error&) {
            ++out.skipped;
            continue;
        }
        sum_anchor += std::hypot(anchor_result.x - ann.world[0],
                                 anchor_result.y - ann.world[1]);
        sum_center += std::hypot(center_result.x - ann.world[0],
                                 center_result.y - ann.world[1]);
        sum_head += std::hypot(head_result.x - ann.world[0], head_result.y - ann.world[1]);
        ++out.person_count;
    }
    if (out.person_count > 0) {
        const double n = static_cast<double>(out.person_count);
        out.radial_near_midpoint = sum_anchor / n;
        out.box_center = sum_center / n;
        out.head_center = sum_head / n;
    }
    return out;
}

}  // namespace fisheyeloc::localization
