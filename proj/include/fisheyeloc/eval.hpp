// Copyright (c) 2026 fisheyeloc contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fisheyeloc/matching.hpp"
#include "fisheyeloc/types.hpp"

namespace fisheyeloc::eval {

/// Horizontal distance between person and lens: near [0, 10), middle
/// [10, 20), far [20, inf) metres.
enum class DistanceBucket { near = 0, middle = 1, far = 2 };

DistanceBucket bucket_of(double distance_m);
const char* bucket_name(DistanceBucket bucket);

/// IoU thresholds 0.50:0.05:0.95 used for the threshold-averaged AP.
inline constexpr std::array<double, 10> kIouThresholds = {
    0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95};

/// Per-image evaluation input. Boxes are normalised; locations (metres from
/// nadir) run parallel to detections and may be empty when no localization
/// was computed.
struct EvalImage {
    std::string image_id;
    std::string scene_id;
    std::string split;  // one of the annotation split tags, or empty
    std::vector<matching::Detection> detections;
    std::vector<std::optional<std::array<double, 2>>> locations;
    std::vector<matching::GroundTruthBox> gts;
};

/// 101-point interpolated AP at one IoU threshold with score-descending
/// greedy matching per image (each ground truth matched at most once).
/// Absent when there are neither ground truths nor detections; 0 when
/// detections exist without any ground truth.
std::optional<double> average_precision(std::span<const EvalImage> images,
                                        double iou_threshold,
                                        const ImagePoint& principal);

/// Mean of average_precision over the ten standard thresholds.
std::optional<double> mean_ap(std::span<const EvalImage> images,
                              const ImagePoint& principal);

struct BucketedAp {
    std::optional<double> near, middle, far;
    std::optional<double>& operator[](DistanceBucket b) {
        return b == DistanceBucket::near ? near
               : b == DistanceBucket::middle ? middle
                                             : far;
    }
};

/// Threshold-averaged AP per distance bucket. Detections attribute to the
/// bucket of their matched ground truth; unmatched detections count against
/// the bucket of their highest-IoU ground truth, or against every bucket when
/// they overlap none. Empty buckets are absent.
BucketedAp bucketed_ap(std::span<const EvalImage> images, const ImagePoint& principal);

struct PositionalErrorResult {
    std::optional<double> mean, near, middle, far;
    std::size_t matched = 0;          // true-positive pairs contributing to PE
    std::size_t unmatched_gts = 0;    // detection failures, measured by AP
    std::size_t unlocalized = 0;      // matched but no location available
    std::array<std::size_t, 3> bucket_matched{0, 0, 0};
};

/// Euclidean positional error in metres over true-positive matches at
/// IoU 0.50, overall and per bucket.
PositionalErrorResult positional_error(std::span<const EvalImage> images,
                                       const ImagePoint& principal);

/// Precision/recall/F-score at a fixed IoU threshold and score cutoff.
struct OperatingPoint {
    double precision = 0.0;
    double recall = 0.0;
    double f_score = 0.0;
    std::size_t tp = 0, fp = 0, fn = 0;
};

OperatingPoint operating_point(std::span<const EvalImage> images,
                               const ImagePoint& principal, double iou_threshold,
                               double score_cutoff);

/// One aggregation cell of the report: scope is all/seen/unseen, bucket is
/// all/near/middle/far.
struct ReportRow {
    std::string scope;
    std::string bucket;
    std::optional<double> map, ap50, ap75, pe;
    std::size_t gt_count = 0;
};

struct EvalReport {
    std::size_t image_count = 0, gt_count = 0, detection_count = 0;
    std::optional<double> map, ap50, ap75;
    BucketedAp ap_buckets;
    std::optional<double> ap_seen, ap_unseen;
    PositionalErrorResult pe;
    std::optional<double> pe_seen, pe_unseen;
    std::array<std::size_t, 3> bucket_counts{0, 0, 0};  // ground truths per bucket
    OperatingPoint op;
    double op_iou_threshold = 0.5;
    double score_cutoff = 0.5;
    std::vector<ReportRow> rows;
};

/// Full metric sweep. threads parallelizes the per-image IoU preparation;
/// the reduction order is index-deterministic regardless.
EvalReport evaluate(std::span<const EvalImage> images, const ImagePoint& principal,
                    double score_cutoff = 0.5, unsigned threads = 1);

std::string format_report_text(const EvalReport& report);
std::string format_report_csv(const EvalReport& report);

}  // namespace fisheyeloc::eval
