// Copyright (c) 2026 fisheyeloc contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>

#include "fisheyeloc/types.hpp"

namespace fisheyeloc::camera {

/// Incidence angles are capped at the vertical half-FOV; rays past the
/// horizon are rejected rather than extrapolated.
inline constexpr double kThetaMax = 1.5707963267948966;  // pi/2
inline constexpr std::size_t kNumCoeffs = 5;

/// Focal-normalised ray through a pixel. theta is the incidence angle against
/// the optical axis, phi the polar angle about it. x = r*cos(phi) and
/// y = r*sin(phi); phi is 0 by convention at the principal point.
struct NormalizedRay {
    double x = 0.0;
    double y = 0.0;
    double r = 0.0;
    double theta = 0.0;
    double phi = 0.0;
};

/// Odd-power polynomial projection r(theta) = sum_i k_i * theta^(2i-1) with
/// focal length f and principal point (u0, v0) in pixels. r is expressed in
/// focal-normalised units, so f and k1 form a joint scale; calibration pins
/// k1 = 1 and folds the scale into f.
///
/// Construction rejects models whose dr/dtheta is not strictly positive on
/// [0, pi/2]; the numerical inverse relies on that monotonicity.
class FisheyeModel {
 public:
    FisheyeModel(double focal, double u0, double v0,
                 const std::array<double, kNumCoeffs>& coeffs,
                 std::optional<double> altitude = std::nullopt);

    double focal() const noexcept { return focal_; }
    ImagePoint principal() const noexcept { return {u0_, v0_}; }
    const std::array<double, kNumCoeffs>& coeffs() const noexcept { return coeffs_; }
    /// Camera height above the floor in metres; required for localization.
    std::optional<double> altitude() const noexcept { return altitude_; }
    /// r(pi/2): the focal-normalised radius of the image circle.
    double max_radius() const noexcept { return max_radius_; }

 private:
    double focal_;
    double u0_;
    double v0_;
    std::array<double, kNumCoeffs> coeffs_;
    std::optional<double> altitude_;
    double max_radius_;
};

/// r(theta) for theta in [0, pi/2]. Horner evaluation on theta^2.
double radial_forward(const FisheyeModel& model, double theta);

/// dr/dtheta; strictly positive on the domain for any constructed model.
double radial_derivative(const FisheyeModel& model, double theta);

/// Solves r(theta) = r on [0, pi/2] by safeguarded Newton iteration with a
/// bisection fallback. The result satisfies |r(theta) - r| <= 1e-10.
/// Throws OutOfRangeError (carrying max_radius) for r outside [0, r(pi/2)].
double radial_inverse(const FisheyeModel& model, double r);

/// Back-projects a pixel inside the image circle to a normalised ray.
NormalizedRay pixel_to_ray(const FisheyeModel& model, const ImagePoint& pixel);

/// Projects a world point with z > 0 onto the image plane. The projection is
/// purely radial: the polar angle of the pixel about the principal point
/// equals atan2(y, x) of the world point.
ImagePoint ray_to_pixel(const FisheyeModel& model, const WorldPoint& point);

struct Correspondence {
    WorldPoint world;
    ImagePoint pixel;
};

struct CalibrationOptions {
    double initial_focal = 1000.0;
    /// Estimate the principal point unless pinned here.
    std::optional<ImagePoint> pinned_principal;
    int max_iterations = 200;
};

struct CalibrationResult {
    FisheyeModel model;
    /// Root-mean-square 2D reprojection residual in pixels.
    double rms_px = 0.0;
    int iterations = 0;
};

/// Fits (f, u0, v0, k2..k5) under the k1 = 1 gauge by damped least squares
/// over squared pixel reprojection residuals. Requires at least 7
/// correspondences spanning at least 3 distinct ground radial distances.
/// Throws ValidationError on degenerate input or a non-monotonic solution,
/// NonConvergenceError (carrying the best RMS) at the iteration cap.
CalibrationResult calibrate(std::span<const Correspondence> correspondences,
                            const CalibrationOptions& options);

}  // namespace fisheyeloc::camera
