// Copyright (c) 2026 fisheyeloc contributors
// SPDX-License-Identifier: Apache-2.0

#include "fisheyeloc/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fisheyeloc/errors.hpp"

namespace fisheyeloc::matching {

namespace {

constexpr double kLogEps = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

void check_normalized(const geometry::RadiusAlignedBox& box, const char* what) {
    if (box.cx() < 0.0 || box.cx() > 1.0 || box.cy() < 0.0 || box.cy() > 1.0 ||
        box.w() > 1.0 || box.h() > 1.0)
        throw ValidationError(std::string(what) + ": box fields must lie in [0, 1]");
}

// Hungarian algorithm with potentials; rows are ground truths (M <= N columns
// of queries). p[j] holds the 1-based row matched to column j.
std::vector<int> solve_assignment(const std::vector<std::vector<double>>& cost,
                                  std::size_t rows, std::size_t cols) {
    std::vector<double> u(rows + 1, 0.0), v(cols + 1, 0.0);
    std::vector<int> p(cols + 1, 0), way(cols + 1, 0);
    for (std::size_t i = 1; i <= rows; ++i) {
        p[0] = static_cast<int>(i);
        std::size_t j0 = 0;
        std::vector<double> minv(cols + 1, kInf);
        std::vector<bool> used(cols + 1, false);
        do {
            used[j0] = true;
            const int i0 = p[j0];
            double delta = kInf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= cols; ++j) {
                if (used[j]) continue;
                const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = static_cast<int>(j0);
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= cols; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    return p;
}

double safe_neg_log(double p) { return -std::log(std::max(p, kLogEps)); }

}  // namespace

Detection::Detection(const geometry::RadiusAlignedBox& box, double score)
    : box_(box), score_(score) {
    check_normalized(box_, "detection");
    if (!std::isfinite(score_) || score_ < 0.0 || score_ > 1.0)
        throw ValidationError("detection: score must lie in [0, 1]");
}

GroundTruthBox::GroundTruthBox(const geometry::RadiusAlignedBox& box,
                               std::optional<std::array<double, 2>> world)
    : box_(box), world_(std::move(world)) {
    check_normalized(box_, "ground truth");
    if (world_ && (!std::isfinite((*world_)[0]) || !std::isfinite((*world_)[1])))
        throw ValidationError("ground truth: world position must be finite");
}

Detection no_object_detection() {
    return Detection(geometry::RadiusAlignedBox(0.5, 0.5, 1e-3, 1e-3), 0.0);
}

OracleDetector::OracleDetector(std::vector<GroundTruthBox> gts, const ImagePoint& principal,
                               std::size_t query_count, const OracleNoise& noise,
                               std::uint64_t seed)
    : gts_(std::move(gts)),
      principal_(principal),
      query_count_(query_count),
      noise_(noise),
      rng_(seed) {
    if (query_count_ < gts_.size())
        throw ValidationError("oracle detector: query count below ground-truth count");
    if (noise_.center_sigma < 0.0 || noise_.size_sigma < 0.0)
        throw ValidationError("oracle detector: noise sigmas must be >= 0");
    if (!std::isfinite(noise_.score) || noise_.score < 0.0 || noise_.score > 1.0)
        throw ValidationError("oracle detector: score must lie in [0, 1]");
}

std::vector<Detection> OracleDetector::detect(const std::string& /*image_id*/,
                                              double rotation_angle) {
    std::vector<Detection> out;
    out.reserve(query_count_);
    const double applied = noise_.ignore_rotation ? 0.0 : rotation_angle;
    std::normal_distribution<double> center_jitter(0.0, std::max(noise_.center_sigma, 1e-300));
    std::normal_distribution<double> size_jitter(0.0, std::max(noise_.size_sigma, 1e-300));
    for (const auto& gt : gts_) {
        geometry::RadiusAlignedBox box =
            geometry::rotate_radius_aligned(gt.box(), applied, principal_);
        double cx = box.cx(), cy = box.cy(), w = box.w(), h = box.h();
        if (noise_.center_sigma > 0.0) {
            cx += center_jitter(rng_);
            cy += center_jitter(rng_);
        }
        if (noise_.size_sigma > 0.0) {
            w += size_jitter(rng_);
            h += size_jitter(rng_);
        }
        out.emplace_back(geometry::RadiusAlignedBox(std::clamp(cx, 0.0, 1.0),
                                                    std::clamp(cy, 0.0, 1.0),
                                                    std::clamp(w, 1e-4, 1.0),
                                                    std::clamp(h, 1e-4, 1.0)),
                         noise_.score);
    }
    while (out.size() < query_count_) out.push_back(no_object_detection());
    return out;
}

ReplayDetector::ReplayDetector(std::vector<ReplayRecord> records)
    : records_(std::move(records)), query_count_(0) {
    for (const auto& rec : records_)
        query_count_ = std::max(query_count_, rec.detections.size());
}

std::vector<Detection> ReplayDetector::detect(const std::string& image_id,
                                              double rotation_angle) {
    for (const auto& rec : records_) {
        if (rec.image_id != image_id || std::abs(rec.angle - rotation_angle) > 1e-12)
            continue;
        std::vector<Detection> out = rec.detections;
        while (out.size() < query_count_) out.push_back(no_object_detection());
        return out;
    }
    throw ValidationError("replay detector: no record for image '" + image_id +
                          "' at angle " + std::to_string(rotation_angle));
}

Assignment hungarian_match(std::span<const Detection> detections,
                           std::span<const GroundTruthBox> gts,
                           const MatchWeights& weights, const ImagePoint& principal) {
    const std::size_t n = detections.size();
    const std::size_t m = gts.size();
    if (m > n)
        throw ValidationError("hungarian_match: " + std::to_string(m) +
                              " ground truths exceed " + std::to_string(n) + " queries");
    Assignment assignment;
    assignment.gt_for_query.assign(n, std::nullopt);
    if (m == 0) return assignment;

    std::vector<geometry::RotatedBox> det_boxes;
    det_boxes.reserve(n);
    for (const auto& d : detections) det_boxes.push_back(d.box().to_rotated(principal));
    std::vector<std::vector<double>> cost(m, std::vector<double>(n));
    for (std::size_t g = 0; g < m; ++g) {
        const geometry::RotatedBox gt_box = gts[g].box().to_rotated(principal);
        for (std::size_t d = 0; d < n; ++d) {
            const auto& det = detections[d];
            const double l1 = std::abs(det.box().cx() - gts[g].box().cx()) +
                              std::abs(det.box().cy() - gts[g].box().cy()) +
                              std::abs(det.box().w() - gts[g].box().w()) +
                              std::abs(det.box().h() - gts[g].box().h());
            cost[g][d] = weights.cls * (1.0 - det.score()) + weights.l1 * l1 +
                         weights.giou * (1.0 - geometry::rotated_giou(det_boxes[d], gt_box));
        }
    }
    const std::vector<int> matched_row = solve_assignment(cost, m, n);
    for (std::size_t j = 1; j <= n; ++j)
        if (matched_row[j] != 0)
            assignment.gt_for_query[j - 1] = static_cast<std::size_t>(matched_row[j] - 1);
    return assignment;
}

LossBreakdown detection_loss(std::span<const Detection> detections,
                             std::span<const GroundTruthBox> gts,
                             const Assignment& assignment, const MatchWeights& weights,
                             const ImagePoint& principal) {
    const std::size_t n = detections.size();
    if (assignment.gt_for_query.size() != n)
        throw ValidationError("detection_loss: assignment size differs from query count");
    std::vector<bool> gt_seen(gts.size(), false);
    for (const auto& slot : assignment.gt_for_query) {
        if (!slot) continue;
        if (*slot >= gts.size())
            throw ValidationError("detection_loss: assignment references unknown ground truth");
        if (gt_seen[*slot])
            throw ValidationError("detection_loss: assignment maps a ground truth twice");
        gt_seen[*slot] = true;
    }

    LossBreakdown out;
    if (n == 0) return out;

    double cls_sum = 0.0;
    double l1_sum = 0.0;
    double giou_sum = 0.0;
    std::size_t matched = 0;
    for (std::size_t d = 0; d < n; ++d) {
        const auto& det = detections[d];
        const auto& slot = assignment.gt_for_query[d];
        if (!slot) {
            cls_sum += safe_neg_log(1.0 - det.score());
            continue;
        }
        ++matched;
        cls_sum += safe_neg_log(det.score());
        const auto& gt = gts[*slot];
        l1_sum += std::abs(det.box().cx() - gt.box().cx()) +
                  std::abs(det.box().cy() - gt.box().cy()) +
                  std::abs(det.box().w() - gt.box().w()) +
                  std::abs(det.box().h() - gt.box().h());
        giou_sum += 1.0 - geometry::rotated_giou(det.box().to_rotated(principal),
                                                 gt.box().to_rotated(principal));
    }
    out.cls = cls_sum / static_cast<double>(n);
    if (matched > 0) {
        out.l1 = l1_sum / static_cast<double>(matched);
        out.giou = giou_sum / static_cast<double>(matched);
    }
    out.det = weights.cls * out.cls + weights.l1 * out.l1 + weights.giou * out.giou;
    out.total = out.det;
    return out;
}

LossBreakdown rotat_equi_loss(Detector& detector, const std::string& image_id,
                              std::span<const GroundTruthBox> gts, double angle,
                              const ImagePoint& principal, const MatchWeights& weights) {
    std::vector<GroundTruthBox> rotated;
    rotated.reserve(gts.size());
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    for (const auto& gt : gts) {
        std::optional<std::array<double, 2>> world = gt.world();
        if (world) {
            const double x = (*world)[0];
            const double y = (*world)[1];
            world = std::array<double, 2>{c * x - s * y, s * x + c * y};
        }
        rotated.emplace_back(geometry::rotate_radius_aligned(gt.box(), angle, principal),
                             world);
    }
    std::vector<Detection> dets = detector.detect(image_id, angle);
    if (dets.size() != detector.query_count())
        throw ValidationError("detector returned " + std::to_string(dets.size()) +
                              " detections, contract requires " +
                              std::to_string(detector.query_count()));
    const Assignment assignment = hungarian_match(dets, rotated, weights, principal);
    LossBreakdown bd = detection_loss(dets, rotated, assignment, weights, principal);
    bd.rotat_equi = bd.det;
    bd.total = bd.det;
    return bd;
}

LossBreakdown total_loss(const LossBreakdown& det_branch, double rotat_equi,
                         double lambda) {
    if (!std::isfinite(lambda) || lambda < 0.0)
        throw ValidationError("total_loss: lambda must be finite and >= 0");
    LossBreakdown out = det_branch;
    out.rotat_equi = rotat_equi;
    out.total = det_branch.det + lambda * rotat_equi;
    return out;
}

LossBreakdown equivariant_training_loss(Detector& detector, const std::string& image_id,
                                        std::span<const GroundTruthBox> gts, double angle,
                                        const ImagePoint& principal,
                                        const MatchWeights& weights, double lambda) {
    std::vector<Detection> dets = detector.detect(image_id, 0.0);
    if (dets.size() != detector.query_count())
        throw ValidationError("detector returned " + std::to_string(dets.size()) +
                              " detections, contract requires " +
                              std::to_string(detector.query_count()));
    const Assignment assignment = hungarian_match(dets, gts, weights, principal);
    const LossBreakdown det_branch =
        detection_loss(dets, gts, assignment, weights, principal);
    const LossBreakdown equi =
        rotat_equi_loss(detector, image_id, gts, angle, principal, weights);
    return total_loss(det_branch, equi.rotat_equi, lambda);
}

}  // namespace fisheyeloc::matching
