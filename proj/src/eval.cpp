// Copyright (c) 2026 fisheyeloc contributors
// SPDX-License-Identifier: Apache-2.0

#include "fisheyeloc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "fisheyeloc/errors.hpp"
#include "fisheyeloc/parallel.hpp"

namespace fisheyeloc::eval {

namespace {

constexpr std::size_t kThresholdCount = kIouThresholds.size();

struct PreparedImage {
    const EvalImage* src = nullptr;
    std::vector<std::vector<double>> iou;       // [det][gt]
    std::vector<std::size_t> order;             // det indices, score desc then index
    std::vector<std::optional<DistanceBucket>> gt_bucket;
    std::vector<std::optional<std::size_t>> best_gt;  // highest-IoU gt per det (IoU > 0)
    // det -> gt matches per IoU threshold in kIouThresholds order.
    std::array<std::vector<std::optional<std::size_t>>, kThresholdCount> matches;
};

std::vector<std::optional<std::size_t>> greedy_match(const PreparedImage& img,
                                                     double threshold) {
    const std::size_t gt_count = img.src->gts.size();
    std::vector<std::optional<std::size_t>> det_to_gt(img.src->detections.size());
    std::vector<bool> taken(gt_count, false);
    for (const std::size_t d : img.order) {
        double best = threshold;
        std::optional<std::size_t> best_gt;
        for (std::size_t g = 0; g < gt_count; ++g) {
            if (taken[g]) continue;
            if (img.iou[d][g] >= best && (!best_gt || img.iou[d][g] > best)) {
                best = img.iou[d][g];
                best_gt = g;
            }
        }
        if (best_gt) {
            taken[*best_gt] = true;
            det_to_gt[d] = best_gt;
        }
    }
    return det_to_gt;
}

PreparedImage prepare_image(const EvalImage& image, const ImagePoint& principal) {
    if (!image.locations.empty() && image.locations.size() != image.detections.size())
        throw ValidationError("evaluate: locations must run parallel to detections (image '" +
                              image.image_id + "')");
    PreparedImage out;
    out.src = &image;
    const std::size_t n = image.detections.size();
    const std::size_t m = image.gts.size();

    std::vector<geometry::RotatedBox> det_boxes;
    det_boxes.reserve(n);
    for (const auto& d : image.detections) det_boxes.push_back(d.box().to_rotated(principal));
    std::vector<geometry::RotatedBox> gt_boxes;
    gt_boxes.reserve(m);
    for (const auto& g : image.gts) gt_boxes.push_back(g.box().to_rotated(principal));

    out.iou.assign(n, std::vector<double>(m, 0.0));
    out.best_gt.assign(n, std::nullopt);
    for (std::size_t d = 0; d < n; ++d) {
        double best = 0.0;
        for (std::size_t g = 0; g < m; ++g) {
            const double v = geometry::rotated_iou(det_boxes[d], gt_boxes[g]);
            out.iou[d][g] = v;
            if (v > best) {
                best = v;
                out.best_gt[d] = g;
            }
        }
    }

    out.order.resize(n);
    for (std::size_t d = 0; d < n; ++d) out.order[d] = d;
    std::sort(out.order.begin(), out.order.end(), [&](std::size_t a, std::size_t b) {
        const double sa = image.detections[a].score();
        const double sb = image.detections[b].score();
        return sa > sb || (sa == sb && a < b);
    });

    out.gt_bucket.reserve(m);
    for (const auto& g : image.gts) {
        if (g.world())
            out.gt_bucket.push_back(bucket_of(std::hypot((*g.world())[0], (*g.world())[1])));
        else
            out.gt_bucket.push_back(std::nullopt);
    }

    for (std::size_t t = 0; t < kThresholdCount; ++t)
        out.matches[t] = greedy_match(out, kIouThresholds[t]);
    return out;
}

std::vector<PreparedImage> prepare(std::span<const EvalImage> images,
                                   const ImagePoint& principal, unsigned threads) {
    std::vector<PreparedImage> prepared(images.size());
    parallel_for(images.size(), threads,
                 [&](std::size_t i) { prepared[i] = prepare_image(images[i], principal); });
    return prepared;
}

std::size_t threshold_index(double threshold) {
    for (std::size_t t = 0; t < kThresholdCount; ++t)
        if (std::abs(kIouThresholds[t] - threshold) <= 1e-12) return t;
    return kThresholdCount;
}

struct RankedEntry {
    double score;
    std::size_t image;
    std::size_t det;
    bool tp;
};

// 101-point interpolated AP from a ranked TP/FP list.
double ap_from_ranked(std::vector<RankedEntry>& ranked, std::size_t total_gts) {
    std::sort(ranked.begin(), ranked.end(), [](const RankedEntry& a, const RankedEntry& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.image != b.image) return a.image < b.image;
        return a.det < b.det;
    });
    const std::size_t n = ranked.size();
    if (n == 0 || total_gts == 0) return 0.0;
    std::vector<double> precision(n), recall(n);
    std::size_t tp = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (ranked[i].tp) ++tp;
        precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
        recall[i] = static_cast<double>(tp) / static_cast<double>(total_gts);
    }
    for (std::size_t i = n - 1; i-- > 0;)
        precision[i] = std::max(precision[i], precision[i + 1]);
    double sum = 0.0;
    std::size_t idx = 0;
    for (int r = 0; r <= 100; ++r) {
        const double target = static_cast<double>(r) / 100.0;
        while (idx < n && recall[idx] < target - 1e-12) ++idx;
        if (idx < n) sum += precision[idx];
    }
    return sum / 101.0;
}

using ImageSet = std::vector<const PreparedImage*>;

std::size_t count_gts(const ImageSet& set) {
    std::size_t total = 0;
    for (const auto* img : set) total += img->src->gts.size();
    return total;
}

std::size_t count_dets(const ImageSet& set) {
    std::size_t total = 0;
    for (const auto* img : set) total += img->src->detections.size();
    return total;
}

std::optional<double> ap_at(const ImageSet& set, std::size_t thr_idx) {
    const std::size_t total_gts = count_gts(set);
    if (total_gts == 0) {
        if (count_dets(set) == 0) return std::nullopt;
        return 0.0;
    }
    std::vector<RankedEntry> ranked;
    for (std::size_t i = 0; i < set.size(); ++i) {
        const PreparedImage& img = *set[i];
        const auto& match = img.matches[thr_idx];
        for (std::size_t d = 0; d < img.src->detections.size(); ++d)
            ranked.push_back({img.src->detections[d].score(), i, d, match[d].has_value()});
    }
    return ap_from_ranked(ranked, total_gts);
}

std::optional<double> mean_ap_set(const ImageSet& set) {
    double sum = 0.0;
    for (std::size_t t = 0; t < kThresholdCount; ++t) {
        const auto ap = ap_at(set, t);
        if (!ap) return std::nullopt;  // same emptiness at every threshold
        sum += *ap;
    }
    return sum / static_cast<double>(kThresholdCount);
}

std::optional<double> bucket_ap_at(const ImageSet& set, std::size_t thr_idx,
                                   DistanceBucket bucket) {
    std::size_t bucket_gts = 0;
    for (const auto* img : set)
        for (const auto& b : img->gt_bucket)
            if (b && *b == bucket) ++bucket_gts;
    if (bucket_gts == 0) return std::nullopt;

    std::vector<RankedEntry> ranked;
    for (std::size_t i = 0; i < set.size(); ++i) {
        const PreparedImage& img = *set[i];
        const auto& match = img.matches[thr_idx];
        for (std::size_t d = 0; d < img.src->detections.size(); ++d) {
            const double score = img.src->detections[d].score();
            if (match[d]) {
                const auto& gt_b = img.gt_bucket[*match[d]];
                if (gt_b && *gt_b == bucket) ranked.push_back({score, i, d, true});
                continue;
            }
            if (img.best_gt[d]) {
                // Counts against its highest-IoU ground truth's bucket.
                const auto& gt_b = img.gt_bucket[*img.best_gt[d]];
                if (gt_b && *gt_b == bucket) ranked.push_back({score, i, d, false});
                continue;
            }
            // Overlaps no ground truth: penalizes every bucket.
            ranked.push_back({score, i, d, false});
        }
    }
    return ap_from_ranked(ranked, bucket_gts);
}

std::optional<double> bucket_mean_ap(const ImageSet& set, DistanceBucket bucket) {
    double sum = 0.0;
    for (std::size_t t = 0; t < kThresholdCount; ++t) {
        const auto ap = bucket_ap_at(set, t, bucket);
        if (!ap) return std::nullopt;
        sum += *ap;
    }
    return sum / static_cast<double>(kThresholdCount);
}

PositionalErrorResult positional_error_set(const ImageSet& set) {
    PositionalErrorResult out;
    const std::size_t thr_idx = 0;  // IoU 0.50
    double total = 0.0;
    std::array<double, 3> bucket_total{0.0, 0.0, 0.0};
    std::vector<bool> gt_matched;
    for (const auto* img : set) {
        const auto& match = img->matches[thr_idx];
        gt_matched.assign(img->src->gts.size(), false);
        for (std::size_t d = 0; d < img->src->detections.size(); ++d) {
            if (!match[d]) continue;
            const std::size_t g = *match[d];
            gt_matched[g] = true;
            const auto& world = img->src->gts[g].world();
            if (!world) continue;
            if (img->src->locations.empty() || !img->src->locations[d]) {
                ++out.unlocalized;
                continue;
            }
            const auto& loc = *img->src->locations[d];
            const double err = std::hypot(loc[0] - (*world)[0], loc[1] - (*world)[1]);
            const DistanceBucket b = *img->gt_bucket[g];
            total += err;
            bucket_total[static_cast<std::size_t>(b)] += err;
            ++out.bucket_matched[static_cast<std::size_t>(b)];
            ++out.matched;
        }
        for (std::size_t g = 0; g < img->src->gts.size(); ++g)
            if (!gt_matched[g] && img->src->gts[g].world()) ++out.unmatched_gts;
    }
    if (out.matched > 0) out.mean = total / static_cast<double>(out.matched);
    const std::array<std::optional<double>*, 3> slots = {&out.near, &out.middle, &out.far};
    for (std::size_t b = 0; b < 3; ++b)
        if (out.bucket_matched[b] > 0)
            *slots[b] = bucket_total[b] / static_cast<double>(out.bucket_matched[b]);
    return out;
}

OperatingPoint operating_point_set(const ImageSet& set, double iou_threshold,
                                   double score_cutoff) {
    OperatingPoint out;
    std::size_t total_gts = 0;
    for (const auto* img : set) {
        total_gts += img->src->gts.size();
        std::vector<bool> taken(img->src->gts.size(), false);
        std::size_t kept = 0;
        for (const std::size_t d : img->order) {
            if (img->src->detections[d].score() < score_cutoff) continue;
            ++kept;
            double best = iou_threshold;
            std::optional<std::size_t> best_gt;
            for (std::size_t g = 0; g < img->src->gts.size(); ++g) {
                if (taken[g]) continue;
                if (img->iou[d][g] >= best && (!best_gt || img->iou[d][g] > best)) {
                    best = img->iou[d][g];
                    best_gt = g;
                }
            }
            if (best_gt) {
                taken[*best_gt] = true;
                ++out.tp;
            }
        }
        out.fp += kept - std::count(taken.begin(), taken.end(), true);
    }
    out.fn = total_gts - out.tp;
    if (out.tp + out.fp > 0)
        out.precision = static_cast<double>(out.tp) / static_cast<double>(out.tp + out.fp);
    if (total_gts > 0)
        out.recall = static_cast<double>(out.tp) / static_cast<double>(total_gts);
    if (out.precision + out.recall > 0.0)
        out.f_score = 2.0 * out.precision * out.recall / (out.precision + out.recall);
    return out;
}

// Mirrors the annotation split tags; kept local to avoid a header cycle
// with the io module.
constexpr std::array<const char*, 5> kSplitTags = {"train", "val-seen", "val-unseen",
                                                   "test-seen", "test-unseen"};

bool split_is_seen(const std::string& split) {
    return split == "val-seen" || split == "test-seen";
}

bool split_is_unseen(const std::string& split) {
    return split == "val-unseen" || split == "test-unseen";
}

ImageSet full_set(const std::vector<PreparedImage>& prepared) {
    ImageSet set;
    set.reserve(prepared.size());
    for (const auto& img : prepared) set.push_back(&img);
    return set;
}

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

std::string pct_or_absent(const std::optional<double>& v) {
    return v ? fmt("%.4f", *v * 100.0) : "absent";
}

std::string metres_or_absent(const std::optional<double>& v) {
    return v ? fmt("%.6f", *v) : "absent";
}

std::string csv_field(const std::optional<double>& v) {
    return v ? fmt("%.17g", *v) : "";
}

}  // namespace

DistanceBucket bucket_of(double distance_m) {
    if (distance_m < 10.0) return DistanceBucket::near;
    if (distance_m < 20.0) return DistanceBucket::middle;
    return DistanceBucket::far;
}

const char* bucket_name(DistanceBucket bucket) {
    switch (bucket) {
        case DistanceBucket::near: return "near";
        case DistanceBucket::middle: return "middle";
        case DistanceBucket::far: return "far";
    }
    return "?";
}

std::optional<double> average_precision(std::span<const EvalImage> images,
                                        double iou_threshold, const ImagePoint& principal) {
    const std::size_t t = threshold_index(iou_threshold);
    if (t == kThresholdCount)
        throw ValidationError("average_precision: threshold must be one of 0.50:0.05:0.95");
    const auto prepared = prepare(images, principal, 1);
    return ap_at(full_set(prepared), t);
}

std::optional<double> mean_ap(std::span<const EvalImage> images, const ImagePoint& principal) {
    const auto prepared = prepare(images, principal, 1);
    return mean_ap_set(full_set(prepared));
}

BucketedAp bucketed_ap(std::span<const EvalImage> images, const ImagePoint& principal) {
    const auto prepared = prepare(images, principal, 1);
    const ImageSet set = full_set(prepared);
    BucketedAp out;
    for (const DistanceBucket b :
         {DistanceBucket::near, DistanceBucket::middle, DistanceBucket::far})
        out[b] = bucket_mean_ap(set, b);
    return out;
}

PositionalErrorResult positional_error(std::span<const EvalImage> images,
                                       const ImagePoint& principal) {
    const auto prepared = prepare(images, principal, 1);
    return positional_error_set(full_set(prepared));
}

OperatingPoint operating_point(std::span<const EvalImage> images, const ImagePoint& principal,
                               double iou_threshold, double score_cutoff) {
    const auto prepared = prepare(images, principal, 1);
    return operating_point_set(full_set(prepared), iou_threshold, score_cutoff);
}

EvalReport evaluate(std::span<const EvalImage> images, const ImagePoint& principal,
                    double score_cutoff, unsigned threads) {
    const auto prepared = prepare(images, principal, threads);
    const ImageSet all = full_set(prepared);
    ImageSet seen, unseen;
    for (const auto* img : all) {
        if (split_is_seen(img->src->split)) seen.push_back(img);
        if (split_is_unseen(img->src->split)) unseen.push_back(img);
    }

    EvalReport report;
    report.image_count = images.size();
    report.gt_count = count_gts(all);
    report.detection_count = count_dets(all);
    report.score_cutoff = score_cutoff;
    report.map = mean_ap_set(all);
    report.ap50 = ap_at(all, 0);
    report.ap75 = ap_at(all, threshold_index(0.75));
    for (const DistanceBucket b :
         {DistanceBucket::near, DistanceBucket::middle, DistanceBucket::far})
        report.ap_buckets[b] = bucket_mean_ap(all, b);
    report.ap_seen = seen.empty() ? std::nullopt : mean_ap_set(seen);
    report.ap_unseen = unseen.empty() ? std::nullopt : mean_ap_set(unseen);
    report.pe = positional_error_set(all);
    report.pe_seen = seen.empty() ? std::nullopt : positional_error_set(seen).mean;
    report.pe_unseen = unseen.empty() ? std::nullopt : positional_error_set(unseen).mean;
    for (const auto* img : all)
        for (const auto& b : img->gt_bucket)
            if (b) ++report.bucket_counts[static_cast<std::size_t>(*b)];
    report.op = operating_point_set(all, report.op_iou_threshold, score_cutoff);

    // One row group per aggregation scope: the whole input, every split tag
    // present in it, and the seen/unseen groupings.
    std::vector<std::pair<std::string, ImageSet>> scopes;
    scopes.emplace_back("all", all);
    for (const char* tag : kSplitTags) {
        ImageSet subset;
        for (const auto* img : all)
            if (img->src->split == tag) subset.push_back(img);
        if (!subset.empty()) scopes.emplace_back(tag, std::move(subset));
    }
    if (!seen.empty()) scopes.emplace_back("seen", seen);
    if (!unseen.empty()) scopes.emplace_back("unseen", unseen);
    for (const auto& [scope_name, scope_set] : scopes) {
        const ImageSet* set = &scope_set;
        // Whole-scope row, then one row per distance bucket.
        ReportRow row;
        row.scope = scope_name;
        row.bucket = "all";
        row.map = mean_ap_set(*set);
        row.ap50 = ap_at(*set, 0);
        row.ap75 = ap_at(*set, threshold_index(0.75));
        const PositionalErrorResult pe = positional_error_set(*set);
        row.pe = pe.mean;
        row.gt_count = count_gts(*set);
        report.rows.push_back(row);
        for (const DistanceBucket b :
             {DistanceBucket::near, DistanceBucket::middle, DistanceBucket::far}) {
            ReportRow sub;
            sub.scope = scope_name;
            sub.bucket = bucket_name(b);
            sub.map = bucket_mean_ap(*set, b);
            sub.ap50 = bucket_ap_at(*set, 0, b);
            sub.ap75 = bucket_ap_at(*set, threshold_index(0.75), b);
            const std::size_t bi = static_cast<std::size_t>(b);
            sub.pe = (b == DistanceBucket::near   ? pe.near
                      : b == DistanceBucket::middle ? pe.middle
                                                    : pe.far);
            std::size_t gts = 0;
            for (const auto* img : *set)
                for (const auto& gb : img->gt_bucket)
                    if (gb && static_cast<std::size_t>(*gb) == bi) ++gts;
            sub.gt_count = gts;
            report.rows.push_back(sub);
        }
    }
    return report;
}

std::string format_report_text(const EvalReport& r) {
    std::string out;
    out += "fisheyeloc evaluation report\n";
    out += "images " + std::to_string(r.image_count) + "  ground_truths " +
           std::to_string(r.gt_count) + "  detections " + std::to_string(r.detection_count) +
           "\n";
    out += "detection AP (%, IoU 0.50:0.05:0.95)\n";
    out += "  mAP " + pct_or_absent(r.map) + "  AP50 " + pct_or_absent(r.ap50) + "  AP75 " +
           pct_or_absent(r.ap75) + "\n";
    out += "  AP_n " + pct_or_absent(r.ap_buckets.near) + "  AP_m " +
           pct_or_absent(r.ap_buckets.middle) + "  AP_f " + pct_or_absent(r.ap_buckets.far) +
           "\n";
    out += "  AP_seen " + pct_or_absent(r.ap_seen) + "  AP_unseen " +
           pct_or_absent(r.ap_unseen) + "\n";
    out += "operating point (IoU " + fmt("%.2f", r.op_iou_threshold) + ", score >= " +
           fmt("%.4f", r.score_cutoff) + ")\n";
    out += "  precision " + fmt("%.4f", r.op.precision * 100.0) + "  recall " +
           fmt("%.4f", r.op.recall * 100.0) + "  f_score " + fmt("%.4f", r.op.f_score * 100.0) +
           "  tp " + std::to_string(r.op.tp) + "  fp " + std::to_string(r.op.fp) + "  fn " +
           std::to_string(r.op.fn) + "\n";
    out += "localization PE (m)\n";
    out += "  mPE " + metres_or_absent(r.pe.mean) + "  PE_n " + metres_or_absent(r.pe.near) +
           "  PE_m " + metres_or_absent(r.pe.middle) + "  PE_f " + metres_or_absent(r.pe.far) +
           "\n";
    out += "  PE_seen " + metres_or_absent(r.pe_seen) + "  PE_unseen " +
           metres_or_absent(r.pe_unseen) + "\n";
    out += "  matched " + std::to_string(r.pe.matched) + "  unmatched_gts " +
           std::to_string(r.pe.unmatched_gts) + "  unlocalized " +
           std::to_string(r.pe.unlocalized) + "\n";
    out += "gt distance buckets  near " + std::to_string(r.bucket_counts[0]) + "  middle " +
           std::to_string(r.bucket_counts[1]) + "  far " + std::to_string(r.bucket_counts[2]) +
           "\n";
    return out;
}

std::string format_report_csv(const EvalReport& r) {
    std::string out = "scope,bucket,map,ap50,ap75,pe_m,gt_count\n";
    for (const auto& row : r.rows) {
        out += row.scope + "," + row.bucket + "," + csv_field(row.map) + "," +
               csv_field(row.ap50) + "," + csv_field(row.ap75) + "," + csv_field(row.pe) +
               "," + std::to_string(row.gt_count) + "\n";
    }
    return out;
}

}  // namespace fisheyeloc::eval
