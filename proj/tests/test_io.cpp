// Copyright (c) 2026 fisheyeloc contributors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstring>
#include <random>
#include <sstream>

#include "fisheyeloc/errors.hpp"
#include "fisheyeloc/io.hpp"
#include "support.hpp"

using namespace fisheyeloc;
using namespace testsupport;

namespace {

io::AnnotationRecord random_annotation(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> coord(1.0, 2900.0);
    std::uniform_real_distribution<double> size(0.5, 400.0);
    std::uniform_real_distribution<double> world(-30.0, 30.0);
    std::uniform_int_distribution<int> count(0, 6);
    std::uniform_int_distribution<int> pick(0, 4);
    std::uniform_int_distribution<int> coin(0, 1);

    static const char* const kIdAlphabet = "abcXYZ019 _-/.\"\\\t";
    std::uniform_int_distribution<std::size_t> idx(0, std::strlen(kIdAlphabet) - 1);
    const auto random_id = [&](std::size_t len) {
        std::string s;
        for (std::size_t i = 0; i < len; ++i) s += kIdAlphabet[idx(rng)];
        return s;
    };

    io::AnnotationRecord rec;
    rec.image_id = random_id(10);
    rec.scene_id = random_id(6);
    rec.split = io::kSplitTags[static_cast<std::size_t>(pick(rng))];
    if (coin(rng)) rec.attributes.push_back(coin(rng) ? "day" : "night");
    if (coin(rng)) rec.attributes.push_back(coin(rng) ? "outdoor" : "indoor");
    if (coin(rng)) rec.attributes.push_back("rain");
    const int boxes = count(rng);
    for (int b = 0; b < boxes; ++b) {
        io::AnnotatedBox box{geometry::RadiusAlignedBox(coord(rng), coord(rng), size(rng),
                                                        size(rng)),
                             std::nullopt};
        if (coin(rng)) box.world = std::array<double, 2>{world(rng), world(rng)};
        rec.boxes.push_back(box);
    }
    return rec;
}

bool equal(const io::AnnotationRecord& a, const io::AnnotationRecord& b) {
    if (a.image_id != b.image_id || a.scene_id != b.scene_id || a.split != b.split ||
        a.attributes != b.attributes || a.boxes.size() != b.boxes.size())
        return false;
    for (std::size_t i = 0; i < a.boxes.size(); ++i) {
        if (!(a.boxes[i].box == b.boxes[i].box)) return false;
        if (a.boxes[i].world != b.boxes[i].world) return false;
    }
    return true;
}

std::vector<io::AnnotationRecord> parse_annotations(const std::string& text) {
    std::istringstream in(text);
    return io::read_annotations(in, "mem");
}

io::PredictionFile parse_predictions(const std::string& text) {
    std::istringstream in(text);
    return io::read_predictions(in, "mem");
}

}  // namespace

TEST_CASE("annotations: empty input, round trips, byte stability") {
    CHECK(parse_annotations("").empty());

    std::mt19937_64 rng(61);
    std::vector<io::AnnotationRecord> records;
    for (int i = 0; i < 1000; ++i) records.push_back(random_annotation(rng));

    std::ostringstream out;
    io::write_annotations(records, out);
    const std::string first = out.str();

    const auto parsed = parse_annotations(first);
    REQUIRE(parsed.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) CHECK(equal(parsed[i], records[i]));

    std::ostringstream again;
    io::write_annotations(parsed, again);
    CHECK(again.str() == first);  // write-read-write is byte-identical
}

TEST_CASE("annotations: validation failures carry line numbers and fields") {
    const std::string header = "{\"format\":\"fisheyeloc-annotations\",\"version\":1}\n";

    // Conflicting attribute pair.
    const std::string conflict =
        header +
        "{\"image_id\":\"a\",\"scene_id\":\"s\",\"split\":\"train\",\"attributes\":"
        "[\"day\",\"night\"],\"boxes\":[]}\n";
    CHECK_THROWS_WITH_AS(parse_annotations(conflict),
                         doctest::Contains("mutually exclusive"), ValidationError);
    try {
        parse_annotations(conflict);
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("mem:2") != std::string::npos);
        CHECK(std::string(e.what()).find("attributes") != std::string::npos);
    }

    const std::string bad_split =
        header +
        "{\"image_id\":\"a\",\"scene_id\":\"s\",\"split\":\"validation\",\"attributes\":[],"
        "\"boxes\":[]}\n";
    CHECK_THROWS_AS(parse_annotations(bad_split), ValidationError);

    const std::string unknown_key =
        header +
        "{\"image_id\":\"a\",\"scene_id\":\"s\",\"split\":\"train\",\"attributes\":[],"
        "\"boxes\":[],\"extra\":1}\n";
    CHECK_THROWS_AS(parse_annotations(unknown_key), ValidationError);

    const std::string degenerate_box =
        header +
        "{\"image_id\":\"a\",\"scene_id\":\"s\",\"split\":\"train\",\"attributes\":[],"
        "\"boxes\":[{\"box\":[10,10,0,5]}]}\n";
    CHECK_THROWS_AS(parse_annotations(degenerate_box), ValidationError);

    // Malformed JSON reports the line.
    const std::string broken = header + "{\"image_id\":\n";
    try {
        parse_annotations(broken);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(e.source() == "mem");
    }

    // Wrong header format tag.
    CHECK_THROWS_AS(
        parse_annotations("{\"format\":\"fisheyeloc-predictions\",\"version\":1}\n"),
        ParseError);
}

TEST_CASE("predictions: round trip and invariants") {
    io::PredictionFile file;
    file.image_side = 2952.0;
    io::PredictionRecord rec;
    rec.image_id = "scene/frame-3";
    rec.angle = 1.25;
    rec.detections.push_back(
        {geometry::RadiusAlignedBox(0.25, 0.75, 0.01, 0.02), 0.875, std::nullopt});
    rec.detections.push_back({geometry::RadiusAlignedBox(0.5, 0.5, 0.1, 0.1), 1.0,
                              ImagePoint{0.5, 0.49}});
    file.records.push_back(rec);

    std::ostringstream out;
    io::write_predictions(file, out);
    const auto parsed = parse_predictions(out.str());
    CHECK(parsed.image_side == 2952.0);
    REQUIRE(parsed.records.size() == 1);
    CHECK(parsed.records[0].angle == 1.25);
    REQUIRE(parsed.records[0].detections.size() == 2);
    CHECK(parsed.records[0].detections[0].score == 0.875);
    CHECK(parsed.records[0].detections[1].head.has_value());
    CHECK(parsed.records[0].detections[1].head->v == 0.49);

    std::ostringstream again;
    io::write_predictions(parsed, again);
    CHECK(again.str() == out.str());

    const std::string header =
        "{\"format\":\"fisheyeloc-predictions\",\"version\":1,\"image_side\":100}\n";
    CHECK_THROWS_AS(
        parse_predictions(header +
                          "{\"image_id\":\"a\",\"detections\":[{\"box\":[0.5,0.5,0.1,0.1],"
                          "\"score\":1.5}]}\n"),
        ValidationError);
    CHECK_THROWS_AS(
        parse_predictions(header +
                          "{\"image_id\":\"a\",\"detections\":[{\"box\":[1.5,0.5,0.1,0.1],"
                          "\"score\":0.5}]}\n"),
        ValidationError);
    CHECK_THROWS_AS(
        parse_predictions(
            "{\"format\":\"fisheyeloc-predictions\",\"version\":1,\"image_side\":-3}\n"),
        ValidationError);

    // Replay conversion keeps boxes and scores.
    const auto replay = io::to_replay_records(file);
    REQUIRE(replay.size() == 1);
    CHECK(replay[0].angle == 1.25);
    CHECK(replay[0].detections[0].score() == 0.875);
}

TEST_CASE("calibration file: field-wise exact round trip") {
    const camera::FisheyeModel model(892.78920308579305, 1476.0, 1475.2071067811865,
                                     {1.0, -1.0 / 6.0, 1.0 / 120.0, 0.0, 0.0}, kPi);
    io::CalibrationFile calibration{model, 0.123456789012345678};

    std::ostringstream out;
    io::write_calibration(calibration, out);
    std::istringstream in(out.str());
    const auto parsed = io::read_calibration(in, "mem");

    CHECK(parsed.model.focal() == model.focal());
    CHECK(parsed.model.principal().u == model.principal().u);
    CHECK(parsed.model.principal().v == model.principal().v);
    for (std::size_t i = 0; i < camera::kNumCoeffs; ++i)
        CHECK(parsed.model.coeffs()[i] == model.coeffs()[i]);
    REQUIRE(parsed.model.altitude().has_value());
    CHECK(*parsed.model.altitude() == kPi);
    REQUIRE(parsed.rms_px.has_value());
    CHECK(*parsed.rms_px == 0.123456789012345678);

    std::ostringstream again;
    io::write_calibration(parsed, again);
    CHECK(again.str() == out.str());

    // A non-monotone stored model is rejected with the file as context.
    std::string text = out.str();
    const auto pos = text.find("\"k\": [1,");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 8, "\"k\": [-1,");
    std::istringstream bad(text);
    CHECK_THROWS_AS(io::read_calibration(bad, "mem"), ValidationError);
}

TEST_CASE("correspondences and scene files round trip") {
    std::vector<camera::Correspondence> correspondences;
    for (int i = 0; i < 25; ++i)
        correspondences.push_back(
            {{0.37 * i, -0.11 * i, 3.0}, {1476.0 + 13.7 * i, 1476.0 - 5.1 * i}});
    std::ostringstream out;
    io::write_correspondences(correspondences, out);
    std::istringstream in(out.str());
    const auto parsed = io::read_correspondences(in, "mem");
    REQUIRE(parsed.size() == correspondences.size());
    for (std::size_t i = 0; i < parsed.size(); ++i) {
        CHECK(parsed[i].world.x == correspondences[i].world.x);
        CHECK(parsed[i].pixel.u == correspondences[i].pixel.u);
    }

    sim::SceneConfig config;
    config.person_count = 7;
    const auto scene = sim::generate_scene(config, 4242);
    std::ostringstream scene_out;
    io::write_scene(scene, scene_out);
    std::istringstream scene_in(scene_out.str());
    const auto parsed_scene = io::read_scene(scene_in, "mem");
    CHECK(parsed_scene.seed == scene.seed);
    CHECK(parsed_scene.image_side == scene.image_side);
    CHECK(parsed_scene.model.focal() == scene.model.focal());
    REQUIRE(parsed_scene.persons.size() == scene.persons.size());
    for (std::size_t i = 0; i < scene.persons.size(); ++i) {
        CHECK(parsed_scene.persons[i].x == scene.persons[i].x);
        CHECK(parsed_scene.persons[i].y == scene.persons[i].y);
        CHECK(parsed_scene.persons[i].height == scene.persons[i].height);
        CHECK(parsed_scene.persons[i].radius == scene.persons[i].radius);
    }

    std::ostringstream scene_again;
    io::write_scene(parsed_scene, scene_again);
    CHECK(scene_again.str() == scene_out.str());
}

TEST_CASE("localization records round trip") {
    std::vector<io::LocalizationRecord> records;
    io::LocalizationRecord ok;
    ok.image_id = "img-1";
    ok.detection_index = 3;
    ok.strategy = "radial-near-midpoint";
    ok.anchor = ImagePoint{100.5, 200.25};
    ok.position = std::array<double, 2>{1.5, -2.25};
    ok.theta = 0.75;
    ok.phi = -1.5;
    records.push_back(ok);
    io::LocalizationRecord failed;
    failed.image_id = "img-1";
    failed.detection_index = 4;
    failed.strategy = "radial-near-midpoint";
    failed.unlocalizable = "ray at the horizon guard";
    records.push_back(failed);

    std::ostringstream out;
    io::write_localizations(records, out);
    std::istringstream in(out.str());
    const auto parsed = io::read_localizations(in, "mem");
    REQUIRE(parsed.size() == 2);
    CHECK(parsed[0].position.has_value());
    CHECK((*parsed[0].position)[1] == -2.25);
    CHECK(parsed[0].theta == 0.75);
    CHECK_FALSE(parsed[1].position.has_value());
    REQUIRE(parsed[1].unlocalizable.has_value());
    CHECK(*parsed[1].unlocalizable == "ray at the horizon guard");

    std::ostringstream again;
    io::write_localizations(parsed, again);
    CHECK(again.str() == out.str());
}

TEST_CASE("fuzzed malformed lines always produce structured errors") {
    std::mt19937_64 rng(62);
    std::vector<io::AnnotationRecord> seeds;
    for (int i = 0; i < 10; ++i) seeds.push_back(random_annotation(rng));
    std::ostringstream valid;
    io::write_annotations(seeds, valid);
    std::vector<std::string> lines;
    {
        std::istringstream in(valid.str());
        std::string line;
        while (std::getline(in, line)) lines.push_back(line);
    }

    std::uniform_int_distribution<std::size_t> pick_line(0, lines.size() - 1);
    std::uniform_int_distribution<int> mutation(0, 5);
    std::uniform_int_distribution<int> byte(32, 126);
    std::size_t parsed_ok = 0, structured = 0;
    for (int i = 0; i < 3000; ++i) {
        std::string line = lines[pick_line(rng)];
        std::uniform_int_distribution<std::size_t> pos_dist(0, line.size() - 1);
        const std::size_t pos = pos_dist(rng);
        switch (mutation(rng)) {
            case 0: line = line.substr(0, pos); break;
            case 1: line[pos] = static_cast<char>(byte(rng)); break;
            case 2: line.erase(pos, 1); break;
            case 3: line.insert(pos, 1, static_cast<char>(byte(rng))); break;
            case 4: line.insert(pos, "\"score\":2.5,"); break;
            case 5: line += "}"; break;
        }
        const std::string doc = lines[0] + "\n" + line + "\n";
        try {
            parse_annotations(doc);
            ++parsed_ok;
        } catch (const Error&) {
            ++structured;  // ParseError or ValidationError: both structured
        }
        // Any other exception type escapes and fails the test case.
    }
    CHECK(parsed_ok + structured == 3000);
    CHECK(structured > 1000);  // most mutations must actually break the line
}
