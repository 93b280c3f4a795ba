// Copyright (c) 2026 fisheyeloc contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <vector>

#include "fisheyeloc/types.hpp"

namespace fisheyeloc::geometry {

/// Boxes thinner than this are rejected at construction: zero-area boxes
/// poison IoU denominators.
inline constexpr double kMinBoxSide = 1e-6;

/// Wraps an angle into (-pi, pi].
double wrap_angle(double angle);

/// Oriented rectangle on the image plane. alpha is the direction of the
/// h-axis (the radial extent) measured from +u; w spans the perpendicular
/// tangential direction.
class RotatedBox {
 public:
    RotatedBox(double cx, double cy, double w, double h, double alpha);

    double cx() const noexcept { return cx_; }
    double cy() const noexcept { return cy_; }
    double w() const noexcept { return w_; }
    double h() const noexcept { return h_; }
    double alpha() const noexcept { return alpha_; }
    double area() const noexcept { return w_ * h_; }

    /// Corners in counter-clockwise order starting from the corner at
    /// (-w/2, -h/2) in box-local coordinates.
    std::array<ImagePoint, 4> corners() const;

    friend bool operator==(const RotatedBox&, const RotatedBox&) = default;

 private:
    double cx_, cy_, w_, h_, alpha_;
};

/// 4-parameter box whose orientation is not stored: it is derived as the
/// polar angle of the centre about a given principal point. Two boxes are
/// equal iff their four stored fields are equal.
class RadiusAlignedBox {
 public:
    RadiusAlignedBox(double cx, double cy, double w, double h);

    double cx() const noexcept { return cx_; }
    double cy() const noexcept { return cy_; }
    double w() const noexcept { return w_; }
    double h() const noexcept { return h_; }

    double derived_alpha(const ImagePoint& principal) const;
    RotatedBox to_rotated(const ImagePoint& principal) const;
    /// Multiplies all four fields; converts between pixel and normalised units.
    RadiusAlignedBox scaled(double factor) const;

    friend bool operator==(const RadiusAlignedBox&, const RadiusAlignedBox&) = default;

 private:
    double cx_, cy_, w_, h_;
};

/// Intersection intermediate; vertices in counter-clockwise order.
struct ConvexPolygon {
    std::vector<ImagePoint> vertices;
    double area() const;
};

/// Rotates the centre about the pivot and adds angle to alpha (wrapped).
RotatedBox rotate_box(const RotatedBox& box, double angle, const ImagePoint& pivot);

/// Rotating a radius-aligned box about the principal point yields another
/// radius-aligned box: the derived orientation still points radially.
RadiusAlignedBox rotate_radius_aligned(const RadiusAlignedBox& box, double angle,
                                       const ImagePoint& principal);

/// Clips a's rectangle against b's (Sutherland-Hodgman).
ConvexPolygon intersect_polygon(const RotatedBox& a, const RotatedBox& b);
double intersect_area(const RotatedBox& a, const RotatedBox& b);

double rotated_iou(const RotatedBox& a, const RotatedBox& b);

/// Minimum-area oriented rectangle containing both boxes, computed exactly:
/// the optimal rectangle has a side collinear with a convex-hull edge, so
/// hull edges are enumerated and the smallest candidate wins.
RotatedBox min_enclosing_box(const RotatedBox& a, const RotatedBox& b);

/// Brute-force enclosing box over orientation steps of step_deg degrees,
/// scanning [0, 90). Kept as the reference oracle for min_enclosing_box.
RotatedBox min_enclosing_box_grid(const RotatedBox& a, const RotatedBox& b,
                                  double step_deg = 0.1);

/// IoU minus (enclosing - union) / enclosing over the minimum enclosing box.
double rotated_giou(const RotatedBox& a, const RotatedBox& b);

/// Midpoint of the box side nearest the principal point: the centre moved
/// toward the principal point by h/2 along the radial direction. Throws
/// ValidationError when the centre coincides with the principal point.
ImagePoint anchor_point(const RadiusAlignedBox& box, const ImagePoint& principal);

}  // namespace fisheyeloc::geometry
