// Copyright (c) 2026 fisheyeloc contributors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>

#include "fisheyeloc/errors.hpp"
#include "fisheyeloc/matching.hpp"
#include "support.hpp"

using namespace fisheyeloc;
using namespace testsupport;

namespace {

const ImagePoint kPrincipal{0.5, 0.5};

std::vector<matching::GroundTruthBox> sample_gts(std::mt19937_64& rng, std::size_t count) {
    std::uniform_real_distribution<double> center(0.1, 0.9);
    std::uniform_real_distribution<double> size(0.02, 0.12);
    std::vector<matching::GroundTruthBox> gts;
    for (std::size_t i = 0; i < count; ++i)
        gts.push_back(make_gt(center(rng), center(rng), size(rng), size(rng)));
    return gts;
}

std::vector<matching::Detection> sample_dets(std::mt19937_64& rng, std::size_t count) {
    std::uniform_real_distribution<double> center(0.1, 0.9);
    std::uniform_real_distribution<double> size(0.02, 0.12);
    std::uniform_real_distribution<double> score(0.0, 1.0);
    std::vector<matching::Detection> dets;
    for (std::size_t i = 0; i < count; ++i)
        dets.push_back(make_det(center(rng), center(rng), size(rng), size(rng), score(rng)));
    return dets;
}

std::vector<std::vector<double>> pair_costs(std::span<const matching::Detection> dets,
                                            std::span<const matching::GroundTruthBox> gts,
                                            const matching::MatchWeights& weights) {
    std::vector<std::vector<double>> cost(gts.size(), std::vector<double>(dets.size()));
    for (std::size_t g = 0; g < gts.size(); ++g)
        for (std::size_t d = 0; d < dets.size(); ++d) {
            const auto& det = dets[d];
            const double l1 = std::abs(det.box().cx() - gts[g].box().cx()) +
                              std::abs(det.box().cy() - gts[g].box().cy()) +
                              std::abs(det.box().w() - gts[g].box().w()) +
                              std::abs(det.box().h() - gts[g].box().h());
            cost[g][d] =
                weights.cls * (1.0 - det.score()) + weights.l1 * l1 +
                weights.giou * (1.0 - geometry::rotated_giou(
                                          det.box().to_rotated(kPrincipal),
                                          gts[g].box().to_rotated(kPrincipal)));
        }
    return cost;
}

double assignment_cost(const std::vector<std::vector<double>>& cost,
                       const matching::Assignment& assignment) {
    double total = 0.0;
    for (std::size_t d = 0; d < assignment.gt_for_query.size(); ++d)
        if (assignment.gt_for_query[d]) total += cost[*assignment.gt_for_query[d]][d];
    return total;
}

}  // namespace

TEST_CASE("detection and ground-truth validation") {
    CHECK_THROWS_AS(make_det(0.5, 0.5, 0.1, 0.1, 1.5), ValidationError);
    CHECK_THROWS_AS(make_det(0.5, 0.5, 0.1, 0.1, -0.1), ValidationError);
    CHECK_THROWS_AS(make_det(1.2, 0.5, 0.1, 0.1, 0.5), ValidationError);
    CHECK_THROWS_AS(make_det(0.5, 0.5, 1.5, 0.1, 0.5), ValidationError);
    CHECK_THROWS_AS(make_gt(-0.1, 0.5, 0.1, 0.1), ValidationError);
    CHECK_NOTHROW(make_det(0.5, 0.5, 0.1, 0.1, 0.0));
}

TEST_CASE("hungarian matching on exact and unique-zero-cost instances") {
    const matching::MatchWeights weights;
    auto gts = std::vector<matching::GroundTruthBox>{make_gt(0.3, 0.3, 0.1, 0.1),
                                                     make_gt(0.7, 0.6, 0.08, 0.12)};
    auto dets = std::vector<matching::Detection>{make_det(0.3, 0.3, 0.1, 0.1, 1.0),
                                                 make_det(0.7, 0.6, 0.08, 0.12, 1.0)};
    const auto assignment = matching::hungarian_match(dets, gts, weights, kPrincipal);
    REQUIRE(assignment.gt_for_query.size() == 2);
    CHECK(assignment.gt_for_query[0] == 0);
    CHECK(assignment.gt_for_query[1] == 1);
    CHECK(assignment_cost(pair_costs(dets, gts, weights), assignment) ==
          doctest::Approx(0.0).epsilon(1e-9));

    // One ground truth, three queries; the coincident query must win.
    auto gts1 = std::vector<matching::GroundTruthBox>{make_gt(0.4, 0.4, 0.1, 0.1)};
    auto dets3 = std::vector<matching::Detection>{make_det(0.8, 0.8, 0.05, 0.05, 0.2),
                                                  make_det(0.4, 0.4, 0.1, 0.1, 1.0),
                                                  make_det(0.2, 0.6, 0.07, 0.07, 0.9)};
    const auto single = matching::hungarian_match(dets3, gts1, weights, kPrincipal);
    CHECK_FALSE(single.gt_for_query[0].has_value());
    CHECK(single.gt_for_query[1] == 0);
    CHECK_FALSE(single.gt_for_query[2].has_value());
}

TEST_CASE("hungarian capacity precondition") {
    const matching::MatchWeights weights;
    auto gts = std::vector<matching::GroundTruthBox>{make_gt(0.3, 0.3, 0.1, 0.1),
                                                     make_gt(0.7, 0.6, 0.08, 0.12)};
    auto dets = std::vector<matching::Detection>{make_det(0.3, 0.3, 0.1, 0.1, 1.0)};
    CHECK_THROWS_AS(matching::hungarian_match(dets, gts, weights, kPrincipal),
                    ValidationError);
}

TEST_CASE("hungarian matches exhaustive enumeration on random instances") {
    std::mt19937_64 rng(31);
    const matching::MatchWeights weights;
    std::uniform_int_distribution<std::size_t> n_dist(1, 8);
    for (int i = 0; i < 200; ++i) {
        const std::size_t n = n_dist(rng);
        std::uniform_int_distribution<std::size_t> m_dist(1, n);
        const std::size_t m = m_dist(rng);
        const auto dets = sample_dets(rng, n);
        const auto gts = sample_gts(rng, m);
        const auto assignment = matching::hungarian_match(dets, gts, weights, kPrincipal);

        std::size_t assigned = 0;
        std::vector<bool> seen(m, false);
        for (const auto& slot : assignment.gt_for_query) {
            if (!slot) continue;
            CHECK_FALSE(seen[*slot]);
            seen[*slot] = true;
            ++assigned;
        }
        CHECK(assigned == m);  // every ground truth engaged when N >= #GT

        const auto cost = pair_costs(dets, gts, weights);
        CHECK(assignment_cost(cost, assignment) ==
              doctest::Approx(brute_force_min_cost(cost)).epsilon(1e-9));
    }
}

TEST_CASE("detection loss closed forms") {
    const matching::MatchWeights weights;

    // Perfect detections: every component vanishes.
    auto gts = std::vector<matching::GroundTruthBox>{make_gt(0.3, 0.3, 0.1, 0.1),
                                                     make_gt(0.7, 0.6, 0.08, 0.12)};
    auto dets = std::vector<matching::Detection>{make_det(0.3, 0.3, 0.1, 0.1, 1.0),
                                                 make_det(0.7, 0.6, 0.08, 0.12, 1.0)};
    const auto assignment = matching::hungarian_match(dets, gts, weights, kPrincipal);
    const auto loss = matching::detection_loss(dets, gts, assignment, weights, kPrincipal);
    CHECK(loss.cls == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(loss.l1 == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(loss.giou == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(loss.det == doctest::Approx(0.0).epsilon(1e-9));

    // Empty problem: all-zero breakdown.
    const auto empty =
        matching::detection_loss(std::vector<matching::Detection>{},
                                 std::vector<matching::GroundTruthBox>{},
                                 matching::Assignment{}, weights, kPrincipal);
    CHECK(empty.det == 0.0);
}

TEST_CASE("detection loss single pair with GIoU -9/11") {
    // Unit squares at distance 10 in a scaled-down normalised frame:
    // 0.01-wide squares 0.1 apart reproduce the -9/11 GIoU closed form.
    const matching::MatchWeights weights{0.0, 0.0, 1.0};
    // Centres on the horizontal line through the principal point so both
    // derived orientations are 0 and the boxes stay axis-aligned.
    auto gts = std::vector<matching::GroundTruthBox>{make_gt(0.6, 0.5, 0.01, 0.01)};
    auto dets = std::vector<matching::Detection>{make_det(0.7, 0.5, 0.01, 0.01, 1.0)};
    matching::Assignment assignment;
    assignment.gt_for_query = {std::optional<std::size_t>{0}};
    const auto loss = matching::detection_loss(dets, gts, assignment, weights, kPrincipal);
    CHECK(loss.giou == doctest::Approx(1.0 + 9.0 / 11.0).epsilon(1e-9));
    CHECK(loss.det == doctest::Approx(1.0 + 9.0 / 11.0).epsilon(1e-9));
}

TEST_CASE("detection loss equals the straight-line recomputation oracle") {
    std::mt19937_64 rng(32);
    const matching::MatchWeights weights;
    for (int i = 0; i < 200; ++i) {
        std::uniform_int_distribution<std::size_t> n_dist(1, 7);
        const std::size_t n = n_dist(rng);
        std::uniform_int_distribution<std::size_t> m_dist(0, n);
        const auto dets = sample_dets(rng, n);
        const auto gts = sample_gts(rng, m_dist(rng));
        const auto assignment = matching::hungarian_match(dets, gts, weights, kPrincipal);
        const auto loss = matching::detection_loss(dets, gts, assignment, weights, kPrincipal);
        CHECK(loss.det == doctest::Approx(reference_detection_loss(dets, gts, assignment,
                                                                   weights, kPrincipal))
                              .epsilon(1e-12));
        CHECK(loss.total == loss.det);
    }
}

TEST_CASE("zero-noise oracle detector has zero equivariant loss") {
    std::mt19937_64 rng(33);
    const matching::MatchWeights weights;
    const auto gts = sample_gts(rng, 5);
    matching::OracleDetector detector(gts, kPrincipal, 7);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
    for (int i = 0; i < 100; ++i) {
        const auto loss =
            matching::rotat_equi_loss(detector, "img", gts, angle(rng), kPrincipal, weights);
        CHECK(loss.rotat_equi <= 1e-9);
    }
}

TEST_CASE("angle zero reduces the equivariant branch to the plain detection loss") {
    std::mt19937_64 rng(34);
    const matching::MatchWeights weights;
    const auto gts = sample_gts(rng, 4);
    matching::OracleNoise noise;
    noise.center_sigma = 0.01;
    noise.size_sigma = 0.004;
    noise.score = 0.9;

    matching::OracleDetector noisy_a(gts, kPrincipal, 6, noise, 99);
    const auto dets = noisy_a.detect("img", 0.0);
    const auto assignment = matching::hungarian_match(dets, gts, weights, kPrincipal);
    const auto direct = matching::detection_loss(dets, gts, assignment, weights, kPrincipal);

    matching::OracleDetector noisy_b(gts, kPrincipal, 6, noise, 99);  // same stream
    const auto equi = matching::rotat_equi_loss(noisy_b, "img", gts, 0.0, kPrincipal, weights);
    CHECK(equi.rotat_equi == doctest::Approx(direct.det).epsilon(1e-12));
}

TEST_CASE("rotation-ignoring detector pays a positive equivariant loss at pi") {
    std::mt19937_64 rng(35);
    const matching::MatchWeights weights;
    const auto gts = sample_gts(rng, 4);
    matching::OracleNoise ignore;
    ignore.ignore_rotation = true;
    matching::OracleDetector detector(gts, kPrincipal, 4, ignore);

    const auto loss = matching::rotat_equi_loss(detector, "img", gts, kPi, kPrincipal, weights);
    CHECK(loss.rotat_equi > 1e-3);

    // Oracle recomputation: unrotated detections against pi-rotated targets.
    std::vector<matching::GroundTruthBox> rotated;
    for (const auto& gt : gts)
        rotated.emplace_back(geometry::rotate_radius_aligned(gt.box(), kPi, kPrincipal),
                             gt.world());
    const auto dets = detector.detect("img", 0.0);
    const auto assignment = matching::hungarian_match(dets, rotated, weights, kPrincipal);
    CHECK(loss.rotat_equi ==
          doctest::Approx(reference_detection_loss(dets, rotated, assignment, weights,
                                                   kPrincipal))
              .epsilon(1e-12));
}

TEST_CASE("total loss composition and lambda validation") {
    matching::LossBreakdown det;
    det.det = 1.0;
    CHECK(matching::total_loss(det, 2.0, 0.5).total == doctest::Approx(2.0));
    CHECK(matching::total_loss(det, 0.0, 0.5).total == doctest::Approx(det.det));
    CHECK(matching::total_loss(det, 123.0, 0.0).total == doctest::Approx(det.det));
    CHECK(matching::total_loss(det, 2.0, 0.5).rotat_equi == doctest::Approx(2.0));
    CHECK_THROWS_AS(matching::total_loss(det, 1.0, -0.5), ValidationError);
}

TEST_CASE("angle composition: rotating by a then b equals a+b") {
    std::mt19937_64 rng(36);
    const matching::MatchWeights weights;
    const auto gts = sample_gts(rng, 4);
    std::uniform_real_distribution<double> angle(-kPi, kPi);
    matching::OracleNoise ignore;
    ignore.ignore_rotation = true;
    matching::OracleDetector detector(gts, kPrincipal, 4, ignore);
    for (int i = 0; i < 50; ++i) {
        const double a = angle(rng);
        const double b = angle(rng);
        std::vector<matching::GroundTruthBox> two_step;
        for (const auto& gt : gts)
            two_step.emplace_back(
                geometry::rotate_radius_aligned(
                    geometry::rotate_radius_aligned(gt.box(), a, kPrincipal), b, kPrincipal),
                gt.world());
        const auto via_two = matching::rotat_equi_loss(detector, "img", two_step, 0.0,
                                                       kPrincipal, weights);
        std::vector<matching::GroundTruthBox> one_step;
        for (const auto& gt : gts)
            one_step.emplace_back(
                geometry::rotate_radius_aligned(gt.box(), a + b, kPrincipal), gt.world());
        const auto via_one = matching::rotat_equi_loss(detector, "img", one_step, 0.0,
                                                       kPrincipal, weights);
        CHECK(via_two.rotat_equi == doctest::Approx(via_one.rotat_equi).epsilon(1e-9));
        CHECK(via_two.cls == doctest::Approx(via_one.cls).epsilon(1e-9));
        CHECK(via_two.l1 == doctest::Approx(via_one.l1).epsilon(1e-9));
    }
}

TEST_CASE("mean box L1 under centre jitter is non-decreasing in sigma") {
    std::mt19937_64 rng(37);
    const matching::MatchWeights weights;
    const auto gts = sample_gts(rng, 3);
    double previous = -1.0;
    for (const double sigma : {0.0, 0.01, 0.02, 0.05}) {
        matching::OracleNoise noise;
        noise.center_sigma = sigma;
        matching::OracleDetector detector(gts, kPrincipal, 3, noise, 7);
        double sum = 0.0;
        for (int trial = 0; trial < 1000; ++trial) {
            const auto loss =
                matching::rotat_equi_loss(detector, "img", gts, 0.0, kPrincipal, weights);
            sum += loss.l1;
        }
        const double mean = sum / 1000.0;
        CHECK(mean >= previous);
        previous = mean;
    }
}

TEST_CASE("replay detector contract") {
    std::vector<matching::ReplayRecord> records;
    records.push_back({"img-a", 0.0,
                       {make_det(0.4, 0.4, 0.1, 0.1, 0.9), make_det(0.6, 0.6, 0.1, 0.1, 0.8)}});
    records.push_back({"img-a", 1.5, {make_det(0.6, 0.4, 0.1, 0.1, 0.7)}});
    matching::ReplayDetector detector(std::move(records));
    CHECK(detector.query_count() == 2);

    const auto at_angle = detector.detect("img-a", 1.5);
    REQUIRE(at_angle.size() == 2);  // padded with a no-object slot
    CHECK(at_angle[1].score() == 0.0);

    CHECK_THROWS_AS(detector.detect("img-b", 0.0), ValidationError);
    CHECK_THROWS_AS(detector.detect("img-a", 0.7), ValidationError);
}
