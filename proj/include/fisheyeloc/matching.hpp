// Copyright (c) 2026 fisheyeloc contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fisheyeloc/geometry.hpp"
#include "fisheyeloc/types.hpp"

namespace fisheyeloc::matching {

/// Balance factor between the plain detection branch and the equivariant
/// branch of the training objective.
inline constexpr double kDefaultEquivariantWeight = 0.5;

/// Predicted box in normalised image coordinates (all fields in [0, 1])
/// with a confidence score in [0, 1].
class Detection {
 public:
    Detection(const geometry::RadiusAlignedBox& box, double score);
    const geometry::RadiusAlignedBox& box() const noexcept { return box_; }
    double score() const noexcept { return score_; }

 private:
    geometry::RadiusAlignedBox box_;
    double score_;
};

/// Ground-truth box in normalised image coordinates, optionally carrying the
/// person's floor position in metres from nadir.
class GroundTruthBox {
 public:
    explicit GroundTruthBox(const geometry::RadiusAlignedBox& box,
                            std::optional<std::array<double, 2>> world = std::nullopt);
    const geometry::RadiusAlignedBox& box() const noexcept { return box_; }
    const std::optional<std::array<double, 2>>& world() const noexcept { return world_; }

 private:
    geometry::RadiusAlignedBox box_;
    std::optional<std::array<double, 2>> world_;
};

/// Query-to-ground-truth mapping; nullopt means "no object". Injective over
/// the engaged ground truths, and total over them whenever N >= #GT.
struct Assignment {
    std::vector<std::optional<std::size_t>> gt_for_query;
};

/// Pair-cost weights (classification, box L1, rotated GIoU).
struct MatchWeights {
    double cls = 2.0;
    double l1 = 5.0;
    double giou = 2.0;
};

/// cls/l1/giou are the components of the detection branch, det their weighted
/// sum; rotat_equi is the rotated branch's detection loss and
/// total = det + lambda * rotat_equi.
struct LossBreakdown {
    double cls = 0.0;
    double l1 = 0.0;
    double giou = 0.0;
    double det = 0.0;
    double rotat_equi = 0.0;
    double total = 0.0;
};

/// Abstract detector: stands in for the encoder/query/decoder stack. Invoked
/// with an image handle and the rotation applied to the input; must return
/// exactly query_count() detections. Implementations are either pure (safe to
/// call concurrently) or stateful-seeded, in which case callers serialize.
class Detector {
 public:
    virtual ~Detector() = default;
    virtual std::size_t query_count() const = 0;
    virtual std::vector<Detection> detect(const std::string& image_id,
                                          double rotation_angle) = 0;
};

struct OracleNoise {
    double center_sigma = 0.0;  // normalised units
    double size_sigma = 0.0;    // normalised units
    double score = 1.0;
    /// Emits the unrotated ground truth regardless of the requested angle,
    /// modelling a detector with no rotation equivariance at all.
    bool ignore_rotation = false;
};

/// Emits the (rotated) ground truth plus configurable noise; the ideal
/// equivariant detector when the noise is zero. Stateful via its seeded RNG,
/// hence single-threaded.
class OracleDetector final : public Detector {
 public:
    OracleDetector(std::vector<GroundTruthBox> gts, const ImagePoint& principal,
                   std::size_t query_count, const OracleNoise& noise = {},
                   std::uint64_t seed = 0);
    std::size_t query_count() const override { return query_count_; }
    std::vector<Detection> detect(const std::string& image_id,
                                  double rotation_angle) override;

 private:
    std::vector<GroundTruthBox> gts_;
    ImagePoint principal_;
    std::size_t query_count_;
    OracleNoise noise_;
    std::mt19937_64 rng_;
};

/// One stored prediction set for (image, rotation angle).
struct ReplayRecord {
    std::string image_id;
    double angle = 0.0;
    std::vector<Detection> detections;
};

/// Replays stored predictions; pads every record to a common query count
/// with zero-score detections.
class ReplayDetector final : public Detector {
 public:
    explicit ReplayDetector(std::vector<ReplayRecord> records);
    std::size_t query_count() const override { return query_count_; }
    std::vector<Detection> detect(const std::string& image_id,
                                  double rotation_angle) override;

 private:
    std::vector<ReplayRecord> records_;
    std::size_t query_count_;
};

/// Zero-score placeholder emitted for padding and by empty replay slots.
Detection no_object_detection();

/// Minimum-cost bipartite assignment between queries and ground truths with
/// pair cost w_cls*(1 - score) + w_l1*|b - g|_1 + w_giou*(1 - GIoU(b, g)).
/// Exact Hungarian algorithm; requires #detections >= #gts. The principal
/// point (normalised units) supplies the derived box orientations.
Assignment hungarian_match(std::span<const Detection> detections,
                           std::span<const GroundTruthBox> gts,
                           const MatchWeights& weights, const ImagePoint& principal);

/// Detection loss over an assignment: binary log-loss of matched scores and
/// no-object complements, mean L1 over matched normalised boxes, and mean
/// (1 - rotated GIoU); det is their weighted sum.
LossBreakdown detection_loss(std::span<const Detection> detections,
                             std::span<const GroundTruthBox> gts,
                             const Assignment& assignment, const MatchWeights& weights,
                             const ImagePoint& principal);

/// Rotated-branch loss: rotates the ground truths about the principal point,
/// invokes the detector under the same rotation, matches fresh, and returns
/// the resulting detection loss with rotat_equi set to its det value.
LossBreakdown rotat_equi_loss(Detector& detector, const std::string& image_id,
                              std::span<const GroundTruthBox> gts, double angle,
                              const ImagePoint& principal, const MatchWeights& weights);

/// total = det + lambda * rotat_equi; returns the detection branch with the
/// equivariant fields filled in.
LossBreakdown total_loss(const LossBreakdown& det_branch, double rotat_equi,
                         double lambda);

/// Full training-step objective: detection branch at angle 0 plus
/// lambda-weighted rotated branch at the given angle, each matched
/// independently.
LossBreakdown equivariant_training_loss(Detector& detector, const std::string& image_id,
                                        std::span<const GroundTruthBox> gts, double angle,
                                        const ImagePoint& principal,
                                        const MatchWeights& weights, double lambda);

}  // namespace fisheyeloc::matching
