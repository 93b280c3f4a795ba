// Copyright (c) 2026 fisheyeloc contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fisheyeloc/camera.hpp"
#include "fisheyeloc/errors.hpp"
#include "fisheyeloc/eval.hpp"
#include "fisheyeloc/geometry.hpp"
#include "fisheyeloc/matching.hpp"
#include "fisheyeloc/types.hpp"

namespace testsupport {

using namespace fisheyeloc;

inline constexpr double kPi = std::numbers::pi;

// Rejection-samples a monotone polynomial model with spread-out intrinsics.
inline camera::FisheyeModel random_valid_model(std::mt19937_64& rng,
                                               bool with_altitude = false) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (;;) {
        const double k1 = 0.6 + 0.8 * u01(rng);
        const std::array<double, 5> k = {
            k1,
            k1 * (-0.20 + 0.25 * u01(rng)),
            k1 * (-0.010 + 0.030 * u01(rng)),
            k1 * (-0.004 + 0.008 * u01(rng)),
            k1 * (-0.001 + 0.002 * u01(rng)),
        };
        const double f = 400.0 + 1200.0 * u01(rng);
        const double u0 = 1200.0 + 500.0 * u01(rng);
        const double v0 = 1200.0 + 500.0 * u01(rng);
        std::optional<double> altitude;
        if (with_altitude) altitude = 2.5 + 1.5 * u01(rng);
        try {
            return camera::FisheyeModel(f, u0, v0, k, altitude);
        } catch (const ValidationError&) {
            // non-monotone draw; try again
        }
    }
}

inline geometry::RotatedBox random_rotated_box(std::mt19937_64& rng, double center_span,
                                               double size_lo, double size_hi) {
    std::uniform_real_distribution<double> center(-center_span, center_span);
    std::uniform_real_distribution<double> size(size_lo, size_hi);
    std::uniform_real_distribution<double> angle(-kPi, kPi);
    return geometry::RotatedBox(center(rng), center(rng), size(rng), size(rng), angle(rng));
}

// Uniform samples inside box a; returns how many fall inside b.
inline std::size_t monte_carlo_hits(const geometry::RotatedBox& a,
                                    const geometry::RotatedBox& b, std::size_t samples,
                                    std::mt19937_64& rng) {
    std::uniform_real_distribution<double> tw(-0.5 * a.w(), 0.5 * a.w());
    std::uniform_real_distribution<double> th(-0.5 * a.h(), 0.5 * a.h());
    const double ca = std::cos(a.alpha()), sa = std::sin(a.alpha());
    const double cb = std::cos(b.alpha()), sb = std::sin(b.alpha());
    std::size_t hits = 0;
    for (std::size_t i = 0; i < samples; ++i) {
        const double t = tw(rng);
        const double s = th(rng);
        // Matches the box-local axes used by RotatedBox::corners().
        const double u = a.cx() + t * sa + s * ca;
        const double v = a.cy() - t * ca + s * sa;
        const double du = u - b.cx();
        const double dv = v - b.cy();
        const double local_h = du * cb + dv * sb;
        const double local_w = du * sb - dv * cb;
        if (std::abs(local_w) <= 0.5 * b.w() && std::abs(local_h) <= 0.5 * b.h()) ++hits;
    }
    return hits;
}

// Exhaustive minimum assignment cost over all injections of rows (ground
// truths) into columns (queries); rows <= cols <= ~8.
inline double brute_force_min_cost(const std::vector<std::vector<double>>& cost) {
    const std::size_t rows = cost.size();
    const std::size_t cols = rows == 0 ? 0 : cost[0].size();
    double best = rows == 0 ? 0.0 : std::numeric_limits<double>::infinity();
    std::vector<bool> used(cols, false);
    const auto recurse = [&](auto&& self, std::size_t row, double acc) -> void {
        if (row == rows) {
            best = std::min(best, acc);
            return;
        }
        for (std::size_t col = 0; col < cols; ++col) {
            if (used[col]) continue;
            used[col] = true;
            self(self, row + 1, acc + cost[row][col]);
            used[col] = false;
        }
    };
    if (rows > 0) recurse(recurse, 0, 0.0);
    return best;
}

// Straight-line recomputation of the detection loss formula.
inline double reference_detection_loss(std::span<const matching::Detection> dets,
                                       std::span<const matching::GroundTruthBox> gts,
                                       const matching::Assignment& assignment,
                                       const matching::MatchWeights& weights,
                                       const ImagePoint& principal) {
    const double eps = 1e-12;
    double cls = 0.0, l1 = 0.0, giou = 0.0;
    std::size_t matched = 0;
    for (std::size_t i = 0; i < dets.size(); ++i) {
        if (assignment.gt_for_query[i]) {
            const auto& gt = gts[*assignment.gt_for_query[i]];
            cls += -std::log(std::max(dets[i].score(), eps));
            l1 += std::abs(dets[i].box().cx() - gt.box().cx()) +
                  std::abs(dets[i].box().cy() - gt.box().cy()) +
                  std::abs(dets[i].box().w() - gt.box().w()) +
                  std::abs(dets[i].box().h() - gt.box().h());
            giou += 1.0 - geometry::rotated_giou(dets[i].box().to_rotated(principal),
                                                 gt.box().to_rotated(principal));
            ++matched;
        } else {
            cls += -std::log(std::max(1.0 - dets[i].score(), eps));
        }
    }
    if (dets.empty()) return 0.0;
    cls /= static_cast<double>(dets.size());
    if (matched > 0) {
        l1 /= static_cast<double>(matched);
        giou /= static_cast<double>(matched);
    }
    return weights.cls * cls + weights.l1 * l1 + weights.giou * giou;
}

// Second, flat implementation of the COCO-style AP used as the metric oracle.
inline std::optional<double> reference_average_precision(
    std::span<const eval::EvalImage> images, double threshold,
    const ImagePoint& principal) {
    std::size_t total_gts = 0, total_dets = 0;
    struct Entry {
        double score;
        std::size_t image, det;
        bool tp;
    };
    std::vector<Entry> entries;
    for (std::size_t i = 0; i < images.size(); ++i) {
        const auto& img = images[i];
        total_gts += img.gts.size();
        total_dets += img.detections.size();
        std::vector<std::size_t> order(img.detections.size());
        for (std::size_t d = 0; d < order.size(); ++d) order[d] = d;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const double sa = img.detections[a].score();
            const double sb = img.detections[b].score();
            return sa > sb || (sa == sb && a < b);
        });
        std::vector<bool> taken(img.gts.size(), false);
        std::vector<bool> tp(img.detections.size(), false);
        for (const std::size_t d : order) {
            double best = -1.0;
            std::size_t best_g = 0;
            bool found = false;
            for (std::size_t g = 0; g < img.gts.size(); ++g) {
                if (taken[g]) continue;
                const double v = geometry::rotated_iou(
                    img.detections[d].box().to_rotated(principal),
                    img.gts[g].box().to_rotated(principal));
                if (v >= threshold && v > best) {
                    best = v;
                    best_g = g;
                    found = true;
                }
            }
            if (found) {
                taken[best_g] = true;
                tp[d] = true;
            }
        }
        for (std::size_t d = 0; d < img.detections.size(); ++d)
            entries.push_back({img.detections[d].score(), i, d, tp[d]});
    }
    if (total_gts == 0) {
        if (total_dets == 0) return std::nullopt;
        return 0.0;
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.image != b.image) return a.image < b.image;
        return a.det < b.det;
    });
    double ap = 0.0;
    for (int r = 0; r <= 100; ++r) {
        const double target = static_cast<double>(r) / 100.0;
        double best_precision = 0.0;
        std::size_t tp = 0;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            if (entries[i].tp) ++tp;
            const double recall = static_cast<double>(tp) / static_cast<double>(total_gts);
            const double precision = static_cast<double>(tp) / static_cast<double>(i + 1);
            if (recall >= target - 1e-12) best_precision = std::max(best_precision, precision);
        }
        ap += best_precision;
    }
    return ap / 101.0;
}

inline matching::Detection make_det(double cx, double cy, double w, double h, double score) {
    return matching::Detection(geometry::RadiusAlignedBox(cx, cy, w, h), score);
}

inline matching::GroundTruthBox make_gt(
    double cx, double cy, double w, double h,
    std::optional<std::array<double, 2>> world = std::nullopt) {
    return matching::GroundTruthBox(geometry::RadiusAlignedBox(cx, cy, w, h), world);
}

struct TmpDir {
    std::filesystem::path path;
    explicit TmpDir(const std::string& name) {
        path = std::filesystem::current_path() / ("tmp_" + name);
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TmpDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
};

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace testsupport
