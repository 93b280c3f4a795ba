// Copyright (c) 2026 fisheyeloc contributors
// SPDX-License-Identifier: Apache-2.0

#include "fisheyeloc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "fisheyeloc/errors.hpp"

namespace fisheyeloc::geometry {

namespace {

constexpr double kPi = std::numbers::pi;

double cross(const ImagePoint& o, const ImagePoint& a, const ImagePoint& b) {
    return (a.u - o.u) * (b.v - o.v) - (a.v - o.v) * (b.u - o.u);
}

void validate_box_fields(double cx, double cy, double w, double h, const char* what) {
    if (!std::isfinite(cx) || !std::isfinite(cy) || !std::isfinite(w) || !std::isfinite(h))
        throw ValidationError(std::string(what) + ": fields must be finite");
    if (w <= kMinBoxSide || h <= kMinBoxSide)
        throw ValidationError(std::string(what) + ": degenerate extent (w, h must exceed " +
                              std::to_string(kMinBoxSide) + ")");
}

// Counter-clockwise convex hull; collinear and duplicate points are dropped.
std::vector<ImagePoint> convex_hull(std::vector<ImagePoint> pts) {
    std::sort(pts.begin(), pts.end(), [](const ImagePoint& a, const ImagePoint& b) {
        return a.u < b.u || (a.u == b.u && a.v < b.v);
    });
    const std::size_t n = pts.size();
    std::vector<ImagePoint> hull(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    const std::size_t lower = k + 1;
    for (std::size_t i = n - 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

struct RectCandidate {
    double area = std::numeric_limits<double>::infinity();
    double dir_u = 1.0, dir_v = 0.0;  // unit direction of the h-axis
    double lo_d = 0.0, hi_d = 0.0;    // extent along the direction
    double lo_n = 0.0, hi_n = 0.0;    // extent along the left normal
};

RectCandidate rect_for_direction(const std::vector<ImagePoint>& pts, double du, double dv) {
    RectCandidate c;
    c.dir_u = du;
    c.dir_v = dv;
    double lo_d = std::numeric_limits<double>::infinity(), hi_d = -lo_d;
    double lo_n = lo_d, hi_n = -lo_d;
    for (const auto& p : pts) {
        const double d = p.u * du + p.v * dv;
        const double t = -p.u * dv + p.v * du;
        lo_d = std::min(lo_d, d);
        hi_d = std::max(hi_d, d);
        lo_n = std::min(lo_n, t);
        hi_n = std::max(hi_n, t);
    }
    c.lo_d = lo_d;
    c.hi_d = hi_d;
    c.lo_n = lo_n;
    c.hi_n = hi_n;
    c.area = (hi_d - lo_d) * (hi_n - lo_n);
    return c;
}

RotatedBox box_from_candidate(const RectCandidate& c) {
    const double mid_d = 0.5 * (c.lo_d + c.hi_d);
    const double mid_n = 0.5 * (c.lo_n + c.hi_n);
    // Invert the projection: p = d * dir + n * normal with normal = (-dv, du).
    const double cx = mid_d * c.dir_u - mid_n * c.dir_v;
    const double cy = mid_d * c.dir_v + mid_n * c.dir_u;
    return RotatedBox(cx, cy, c.hi_n - c.lo_n, c.hi_d - c.lo_d,
                      std::atan2(c.dir_v, c.dir_u));
}

std::vector<ImagePoint> gather_corners(const RotatedBox& a, const RotatedBox& b) {
    std::vector<ImagePoint> pts;
    pts.reserve(8);
    for (const auto& p : a.corners()) pts.push_back(p);
    for (const auto& p : b.corners()) pts.push_back(p);
    return pts;
}

}  // namespace

double wrap_angle(double angle) {
    double wrapped = std::remainder(angle, 2.0 * kPi);
    if (wrapped <= -kPi) wrapped += 2.0 * kPi;
    return wrapped;
}

RotatedBox::RotatedBox(double cx, double cy, double w, double h, double alpha)
    : cx_(cx), cy_(cy), w_(w), h_(h) {
    validate_box_fields(cx, cy, w, h, "rotated box");
    if (!std::isfinite(alpha)) throw ValidationError("rotated box: alpha must be finite");
    alpha_ = wrap_angle(alpha);
}

std::array<ImagePoint, 4> RotatedBox::corners() const {
    const double c = std::cos(alpha_);
    const double s = std::sin(alpha_);
    // Box-local (t, s) axes: t along w with unit (sin a, -cos a), s along h
    // with unit (cos a, sin a); the pair is a proper rotation.
    const auto corner = [&](double t, double u) -> ImagePoint {
        return {cx_ + t * s + u * c, cy_ - t * c + u * s};
    };
    const double hw = 0.5 * w_;
    const double hh = 0.5 * h_;
    return {corner(-hw, -hh), corner(hw, -hh), corner(hw, hh), corner(-hw, hh)};
}

RadiusAlignedBox::RadiusAlignedBox(double cx, double cy, double w, double h)
    : cx_(cx), cy_(cy), w_(w), h_(h) {
    validate_box_fields(cx, cy, w, h, "radius-aligned box");
}

double RadiusAlignedBox::derived_alpha(const ImagePoint& principal) const {
    return std::atan2(cy_ - principal.v, cx_ - principal.u);
}

RotatedBox RadiusAlignedBox::to_rotated(const ImagePoint& principal) const {
    return RotatedBox(cx_, cy_, w_, h_, derived_alpha(principal));
}

RadiusAlignedBox RadiusAlignedBox::scaled(double factor) const {
    return RadiusAlignedBox(cx_ * factor, cy_ * factor, w_ * factor, h_ * factor);
}

double ConvexPolygon::area() const {
    if (vertices.size() < 3) return 0.0;
    double twice = 0.0;
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        const auto& p = vertices[i];
        const auto& q = vertices[(i + 1) % vertices.size()];
        twice += p.u * q.v - q.u * p.v;
    }
    return std::max(0.0, 0.5 * twice);
}

RotatedBox rotate_box(const RotatedBox& box, double angle, const ImagePoint& pivot) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double dx = box.cx() - pivot.u;
    const double dy = box.cy() - pivot.v;
    return RotatedBox(pivot.u + c * dx - s * dy, pivot.v + s * dx + c * dy, box.w(),
                      box.h(), box.alpha() + angle);
}

RadiusAlignedBox rotate_radius_aligned(const RadiusAlignedBox& box, double angle,
                                       const ImagePoint& principal) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double dx = box.cx() - principal.u;
    const double dy = box.cy() - principal.v;
    return RadiusAlignedBox(principal.u + c * dx - s * dy, principal.v + s * dx + c * dy,
                            box.w(), box.h());
}

ConvexPolygon intersect_polygon(const RotatedBox& a, const RotatedBox& b) {
    const auto clip_rect = b.corners();
    const auto subject = a.corners();
    std::vector<ImagePoint> poly(subject.begin(), subject.end());
    for (std::size_t e = 0; e < 4 && !poly.empty(); ++e) {
        const ImagePoint& e0 = clip_rect[e];
        const ImagePoint& e1 = clip_rect[(e + 1) % 4];
        const double ex = e1.u - e0.u;
        const double ey = e1.v - e0.v;
        std::vector<ImagePoint> out;
        out.reserve(poly.size() + 4);
        for (std::size_t i = 0; i < poly.size(); ++i) {
            const ImagePoint& cur = poly[i];
            const ImagePoint& nxt = poly[(i + 1) % poly.size()];
            const double side_cur = ex * (cur.v - e0.v) - ey * (cur.u - e0.u);
            const double side_nxt = ex * (nxt.v - e0.v) - ey * (nxt.u - e0.u);
            if (side_cur >= 0.0) out.push_back(cur);
            if ((side_cur > 0.0 && side_nxt < 0.0) || (side_cur < 0.0 && side_nxt > 0.0)) {
                const double t = side_cur / (side_cur - side_nxt);
                out.push_back({cur.u + t * (nxt.u - cur.u), cur.v + t * (nxt.v - cur.v)});
            }
        }
        poly = std::move(out);
    }
    return ConvexPolygon{std::move(poly)};
}

double intersect_area(const RotatedBox& a, const RotatedBox& b) {
    return intersect_polygon(a, b).area();
}

double rotated_iou(const RotatedBox& a, const RotatedBox& b) {
    const double inter = intersect_area(a, b);
    const double uni = a.area() + b.area() - inter;
    return std::clamp(inter / uni, 0.0, 1.0);
}

RotatedBox min_enclosing_box(const RotatedBox& a, const RotatedBox& b) {
    const auto hull = convex_hull(gather_corners(a, b));
    RectCandidate best;
    for (std::size_t i = 0; i < hull.size(); ++i) {
        const ImagePoint& p = hull[i];
        const ImagePoint& q = hull[(i + 1) % hull.size()];
        const double len = std::hypot(q.u - p.u, q.v - p.v);
        if (len == 0.0) continue;
        const RectCandidate c =
            rect_for_direction(hull, (q.u - p.u) / len, (q.v - p.v) / len);
        if (c.area < best.area) best = c;
    }
    return box_from_candidate(best);
}

RotatedBox min_enclosing_box_grid(const RotatedBox& a, const RotatedBox& b,
                                  double step_deg) {
    if (!(step_deg > 0.0)) throw ValidationError("enclosing box grid: step must be > 0");
    const auto pts = gather_corners(a, b);
    RectCandidate best;
    for (double deg = 0.0; deg < 90.0; deg += step_deg) {
        const double rad = deg * kPi / 180.0;
        const RectCandidate c = rect_for_direction(pts, std::cos(rad), std::sin(rad));
        if (c.area < best.area) best = c;
    }
    return box_from_candidate(best);
}

double rotated_giou(const RotatedBox& a, const RotatedBox& b) {
    const double inter = intersect_area(a, b);
    const double uni = a.area() + b.area() - inter;
    const double iou = std::clamp(inter / uni, 0.0, 1.0);
    const double enclosing = min_enclosing_box(a, b).area();
    return iou - std::max(0.0, enclosing - uni) / enclosing;
}

ImagePoint anchor_point(const RadiusAlignedBox& box, const ImagePoint& principal) {
    const double dx = box.cx() - principal.u;
    const double dy = box.cy() - principal.v;
    const double dist = std::hypot(dx, dy);
    if (dist < 1e-12)
        throw ValidationError(
            "anchor_point: box centre coincides with the principal point; "
            "radial direction undefined");
    const double scale = 0.5 * box.h() / dist;
    return {box.cx() - scale * dx, box.cy() - scale * dy};
}

}  // namespace fisheyeloc::geometry
