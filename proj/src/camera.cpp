// Copyright (c) 2026 fisheyeloc contributors
// SPDX-License-Identifier: Apache-2.0

#include "fisheyeloc/camera.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "fisheyeloc/errors.hpp"

namespace fisheyeloc::camera {

namespace {

bool all_finite(std::span<const double> values) {
    return std::all_of(values.begin(), values.end(),
                       [](double v) { return std::isfinite(v); });
}

// dr/dtheta as a polynomial in s = theta^2.
double derivative_poly(const std::array<double, kNumCoeffs>& k, double s) {
    return k[0] + s * (3.0 * k[1] + s * (5.0 * k[2] + s * (7.0 * k[3] + s * 9.0 * k[4])));
}

// Certifies derivative_poly > 0 on [0, s_max] by interval subdivision with a
// Lipschitz bound. Models whose derivative merely touches zero are rejected.
bool derivative_strictly_positive(const std::array<double, kNumCoeffs>& k, double s_max) {
    if (derivative_poly(k, 0.0) <= 0.0 || derivative_poly(k, s_max) <= 0.0) return false;
    const double lipschitz = 3.0 * std::abs(k[1]) + 10.0 * std::abs(k[2]) * s_max +
                             21.0 * std::abs(k[3]) * s_max * s_max +
                             36.0 * std::abs(k[4]) * s_max * s_max * s_max;
    std::vector<std::pair<double, double>> stack{{0.0, s_max}};
    while (!stack.empty()) {
        const auto [a, b] = stack.back();
        stack.pop_back();
        const double mid = 0.5 * (a + b);
        const double value = derivative_poly(k, mid);
        if (value <= 0.0) return false;
        const double halfwidth = 0.5 * (b - a);
        if (lipschitz * halfwidth < value) continue;  // positive on [a, b]
        if (b - a < 1e-13) return false;              // cannot certify: borderline model
        stack.push_back({a, mid});
        stack.push_back({mid, b});
    }
    return true;
}

double forward_poly(const std::array<double, kNumCoeffs>& k, double theta) {
    const double s = theta * theta;
    return theta * (k[0] + s * (k[1] + s * (k[2] + s * (k[3] + s * k[4]))));
}

}  // namespace

FisheyeModel::FisheyeModel(double focal, double u0, double v0,
                           const std::array<double, kNumCoeffs>& coeffs,
                           std::optional<double> altitude)
    : focal_(focal), u0_(u0), v0_(v0), coeffs_(coeffs), altitude_(altitude) {
    if (!std::isfinite(focal_) || focal_ <= 0.0)
        throw ValidationError("fisheye model: focal length must be finite and > 0");
    if (!std::isfinite(u0_) || !std::isfinite(v0_))
        throw ValidationError("fisheye model: principal point must be finite");
    if (!all_finite(coeffs_))
        throw ValidationError("fisheye model: coefficients must be finite");
    if (altitude_ && (!std::isfinite(*altitude_) || *altitude_ <= 0.0))
        throw ValidationError("fisheye model: altitude must be finite and > 0");
    if (!derivative_strictly_positive(coeffs_, kThetaMax * kThetaMax))
        throw ValidationError(
            "fisheye model: r(theta) is not strictly increasing on [0, pi/2]");
    max_radius_ = forward_poly(coeffs_, kThetaMax);
}

double radial_forward(const FisheyeModel& model, double theta) {
    if (!std::isfinite(theta) || theta < 0.0 || theta > kThetaMax)
        throw ValidationError("radial_forward: theta outside [0, pi/2]");
    return forward_poly(model.coeffs(), theta);
}

double radial_derivative(const FisheyeModel& model, double theta) {
    return derivative_poly(model.coeffs(), theta * theta);
}

double radial_inverse(const FisheyeModel& model, double r) {
    constexpr double kResidualTol = 1e-10;  // on r
    constexpr double kThetaTol = 5e-10;     // first-order bound on theta
    const double max_r = model.max_radius();
    if (!std::isfinite(r) || r < 0.0 || r > max_r + 1e-9)
        throw OutOfRangeError("radial_inverse: radius outside the image circle", max_r);
    if (r == 0.0) return 0.0;
    r = std::min(r, max_r);

    double lo = 0.0;
    double hi = kThetaMax;
    double theta = std::clamp(r / model.coeffs()[0], 0.0, kThetaMax);
    for (int iter = 0; iter < 200; ++iter) {
        const double residual = forward_poly(model.coeffs(), theta) - r;
        const double slope = derivative_poly(model.coeffs(), theta * theta);
        if (std::abs(residual) <= kResidualTol && std::abs(residual / slope) <= kThetaTol)
            return theta;
        if (residual > 0.0)
            hi = theta;
        else
            lo = theta;
        double next = theta - residual / slope;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        theta = next;
    }
    throw NumericalError("radial_inverse: solver failed to reach tolerance");
}

NormalizedRay pixel_to_ray(const FisheyeModel& model, const ImagePoint& pixel) {
    if (!std::isfinite(pixel.u) || !std::isfinite(pixel.v))
        throw ValidationError("pixel_to_ray: pixel coordinates must be finite");
    const ImagePoint c = model.principal();
    NormalizedRay ray;
    ray.x = (pixel.u - c.u) / model.focal();
    ray.y = (pixel.v - c.v) / model.focal();
    ray.r = std::hypot(ray.x, ray.y);
    if (ray.r > model.max_radius() + 1e-9)
        throw OutOfRangeError("pixel_to_ray: pixel outside the image circle",
                              model.max_radius());
    ray.theta = radial_inverse(model, std::min(ray.r, model.max_radius()));
    ray.phi = ray.r == 0.0 ? 0.0 : std::atan2(ray.y, ray.x);
    return ray;
}

ImagePoint ray_to_pixel(const FisheyeModel& model, const WorldPoint& point) {
    if (!std::isfinite(point.x) || !std::isfinite(point.y) || !std::isfinite(point.z))
        throw ValidationError("ray_to_pixel: world coordinates must be finite");
    if (point.z <= 0.0)
        throw ValidationError("ray_to_pixel: point at or behind the camera plane (z <= 0)");
    const double rho = std::hypot(point.x, point.y);
    const double theta = std::atan2(rho, point.z);  // [0, pi/2) for z > 0
    const double phi = rho == 0.0 ? 0.0 : std::atan2(point.y, point.x);
    const double r = forward_poly(model.coeffs(), theta);
    const ImagePoint c = model.principal();
    return {c.u + model.focal() * r * std::cos(phi),
            c.v + model.focal() * r * std::sin(phi)};
}

namespace {

struct CalibrationFrame {
    double theta = 0.0;
    double cos_phi = 0.0;
    double sin_phi = 0.0;
    double u = 0.0;
    double v = 0.0;
};

// Parameter order: f, [u0, v0 unless pinned], k2..k5. k1 is pinned to 1.
struct ParamLayout {
    bool estimate_principal = true;
    int count() const { return estimate_principal ? 7 : 5; }
    int k_offset() const { return estimate_principal ? 3 : 1; }
};

double evaluate_residuals(const std::vector<CalibrationFrame>& frames,
                          const Eigen::VectorXd& params, const ParamLayout& layout,
                          const ImagePoint& pinned, Eigen::VectorXd& residuals) {
    const double f = params[0];
    const double u0 = layout.estimate_principal ? params[1] : pinned.u;
    const double v0 = layout.estimate_principal ? params[2] : pinned.v;
    double cost = 0.0;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const auto& fr = frames[i];
        const double s = fr.theta * fr.theta;
        const int k0 = layout.k_offset();
        const double poly =
            fr.theta *
            (1.0 + s * (params[k0] +
                        s * (params[k0 + 1] + s * (params[k0 + 2] + s * params[k0 + 3]))));
        const double du = u0 + f * poly * fr.cos_phi - fr.u;
        const double dv = v0 + f * poly * fr.sin_phi - fr.v;
        residuals[2 * i] = du;
        residuals[2 * i + 1] = dv;
        cost += du * du + dv * dv;
    }
    return cost;
}

void evaluate_jacobian(const std::vector<CalibrationFrame>& frames,
                       const Eigen::VectorXd& params, const ParamLayout& layout,
                       Eigen::MatrixXd& jac) {
    const double f = params[0];
    const int k0 = layout.k_offset();
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const auto& fr = frames[i];
        const double s = fr.theta * fr.theta;
        const double poly =
            fr.theta *
            (1.0 + s * (params[k0] +
                        s * (params[k0 + 1] + s * (params[k0 + 2] + s * params[k0 + 3]))));
        jac(2 * i, 0) = poly * fr.cos_phi;
        jac(2 * i + 1, 0) = poly * fr.sin_phi;
        if (layout.estimate_principal) {
            jac(2 * i, 1) = 1.0;
            jac(2 * i + 1, 1) = 0.0;
            jac(2 * i, 2) = 0.0;
            jac(2 * i + 1, 2) = 1.0;
        }
        double theta_pow = fr.theta * s;  // theta^3
        for (int j = 0; j < 4; ++j) {
            jac(2 * i, k0 + j) = f * theta_pow * fr.cos_phi;
            jac(2 * i + 1, k0 + j) = f * theta_pow * fr.sin_phi;
            theta_pow *= s;
        }
    }
}

}  // namespace

CalibrationResult calibrate(std::span<const Correspondence> correspondences,
                            const CalibrationOptions& options) {
    const std::size_t m = correspondences.size();
    if (m < 7)
        throw ValidationError("calibrate: at least 7 correspondences required, got " +
                              std::to_string(m));
    if (!std::isfinite(options.initial_focal) || options.initial_focal <= 0.0)
        throw ValidationError("calibrate: initial focal guess must be finite and > 0");

    std::vector<CalibrationFrame> frames(m);
    std::vector<double> radial(m);
    std::optional<double> altitude = correspondences[0].world.z;
    for (std::size_t i = 0; i < m; ++i) {
        const auto& c = correspondences[i];
        if (!std::isfinite(c.world.x) || !std::isfinite(c.world.y) ||
            !std::isfinite(c.world.z) || !std::isfinite(c.pixel.u) ||
            !std::isfinite(c.pixel.v))
            throw ValidationError("calibrate: correspondence values must be finite");
        if (c.world.z <= 0.0)
            throw ValidationError("calibrate: world points must lie in front of the camera");
        const double rho = std::hypot(c.world.x, c.world.y);
        radial[i] = rho;
        frames[i].theta = std::atan2(rho, c.world.z);
        const double phi = rho == 0.0 ? 0.0 : std::atan2(c.world.y, c.world.x);
        frames[i].cos_phi = std::cos(phi);
        frames[i].sin_phi = std::sin(phi);
        frames[i].u = c.pixel.u;
        frames[i].v = c.pixel.v;
        if (altitude && std::abs(c.world.z - *altitude) > 1e-9) altitude.reset();
    }

    std::sort(radial.begin(), radial.end());
    std::size_t distinct = 1;
    for (std::size_t i = 1; i < m; ++i)
        if (radial[i] - radial[i - 1] > 1e-6 * (1.0 + radial[i])) ++distinct;
    if (distinct < 3)
        throw ValidationError(
            "calibrate: correspondences must span at least 3 distinct radial distances");

    ParamLayout layout{!options.pinned_principal.has_value()};
    const ImagePoint pinned = options.pinned_principal.value_or(ImagePoint{});
    Eigen::VectorXd params = Eigen::VectorXd::Zero(layout.count());
    params[0] = options.initial_focal;
    if (layout.estimate_principal) {
        // The correspondence closest to nadir anchors the principal point.
        std::size_t nadir = 0;
        for (std::size_t i = 1; i < m; ++i)
            if (std::hypot(correspondences[i].world.x, correspondences[i].world.y) <
                std::hypot(correspondences[nadir].world.x, correspondences[nadir].world.y))
                nadir = i;
        params[1] = correspondences[nadir].pixel.u;
        params[2] = correspondences[nadir].pixel.v;
    }

    const int n = layout.count();
    Eigen::VectorXd residuals(2 * m);
    Eigen::VectorXd trial_residuals(2 * m);
    Eigen::MatrixXd jac(2 * m, n);
    double cost = evaluate_residuals(frames, params, layout, pinned, residuals);
    double best_cost = cost;
    double lambda = 1e-3;
    int iterations = 0;
    bool converged = false;

    while (iterations < options.max_iterations) {
        ++iterations;
        evaluate_jacobian(frames, params, layout, jac);
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd gradient = jac.transpose() * residuals;
        if (gradient.lpNorm<Eigen::Infinity>() < 1e-8 * (1.0 + cost)) {
            converged = true;
            break;
        }
        Eigen::VectorXd damping = jtj.diagonal();
        const double max_diag = std::max(damping.maxCoeff(), 1e-12);
        for (int i = 0; i < n; ++i) damping[i] = std::max(damping[i], 1e-8 * max_diag);
        Eigen::MatrixXd lhs = jtj;
        lhs.diagonal() += lambda * damping;
        const Eigen::VectorXd step = lhs.ldlt().solve(-gradient);
        const Eigen::VectorXd trial = params + step;
        const double trial_cost =
            evaluate_residuals(frames, trial, layout, pinned, trial_residuals);
        if (trial_cost < cost) {
            const double reduction = cost - trial_cost;
            params = trial;
            residuals = trial_residuals;
            cost = trial_cost;
            best_cost = std::min(best_cost, cost);
            lambda = std::max(lambda / 3.0, 1e-14);
            if (reduction <= 1e-14 * std::max(cost, 1e-30) ||
                step.lpNorm<Eigen::Infinity>() <=
                    1e-14 * (1.0 + params.lpNorm<Eigen::Infinity>())) {
                converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if (lambda > 1e14 ||
                step.lpNorm<Eigen::Infinity>() <=
                    1e-12 * (1.0 + params.lpNorm<Eigen::Infinity>())) {
                // Damping has shrunk the step to nothing: numerically
                // stationary.
                converged = true;
                break;
            }
        }
        if (cost <= 1e-22 * static_cast<double>(m)) {
            converged = true;
            break;
        }
    }

    const double rms = std::sqrt(best_cost / static_cast<double>(m));
    if (!converged)
        throw NonConvergenceError(
            "calibrate: no convergence within " + std::to_string(options.max_iterations) +
                " iterations (best RMS " + std::to_string(rms) + " px)",
            rms);

    const double f = params[0];
    const double u0 = layout.estimate_principal ? params[1] : pinned.u;
    const double v0 = layout.estimate_principal ? params[2] : pinned.v;
    const int k0 = layout.k_offset();
    const std::array<double, kNumCoeffs> coeffs = {1.0, params[k0], params[k0 + 1],
                                                   params[k0 + 2], params[k0 + 3]};
    try {
        return {FisheyeModel(f, u0, v0, coeffs, altitude), rms, iterations};
    } catch (const ValidationError& e) {
        throw ValidationError(std::string("calibrate: solution rejected: ") + e.what());
    }
}

}  // namespace fisheyeloc::camera
