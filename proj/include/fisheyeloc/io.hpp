// Copyright (c) 2026 fisheyeloc contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fisheyeloc/camera.hpp"
#include "fisheyeloc/geometry.hpp"
#include "fisheyeloc/matching.hpp"
#include "fisheyeloc/sim.hpp"
#include "fisheyeloc/types.hpp"

namespace fisheyeloc::io {

/// Closed tag sets for annotation records. day/night and outdoor/indoor are
/// mutually exclusive pairs.
inline constexpr std::array<const char*, 5> kSplitTags = {
    "train", "val-seen", "val-unseen", "test-seen", "test-unseen"};
inline constexpr std::array<const char*, 8> kAttributeTags = {
    "day", "night", "outdoor", "indoor", "sunny", "rain", "foggy", "snow"};

/// Every file starts with a header line carrying these. Numeric fields are
/// serialized as decimal strings with 17 significant digits so values
/// round-trip bit-exactly.
inline constexpr int kFormatVersion = 1;

struct AnnotatedBox {
    geometry::RadiusAlignedBox box;  // pixels
    std::optional<std::array<double, 2>> world;  // metres from nadir
};

struct AnnotationRecord {
    std::string image_id;
    std::string scene_id;
    std::string split;
    std::vector<std::string> attributes;
    std::vector<AnnotatedBox> boxes;
};

struct PredictedBox {
    geometry::RadiusAlignedBox box;  // normalised [0, 1]^4
    double score = 0.0;
    std::optional<ImagePoint> head;  // normalised; enables the head-center strategy
};

/// One prediction set; angle is the input rotation for replay files and 0
/// for plain detector output.
struct PredictionRecord {
    std::string image_id;
    double angle = 0.0;
    std::vector<PredictedBox> detections;
};

struct PredictionFile {
    double image_side = 2952.0;
    std::vector<PredictionRecord> records;
};

struct CalibrationFile {
    camera::FisheyeModel model;
    std::optional<double> rms_px;
};

struct LocalizationRecord {
    std::string image_id;
    std::size_t detection_index = 0;
    std::string strategy;
    /// Set iff localization succeeded.
    std::optional<ImagePoint> anchor;
    std::optional<std::array<double, 2>> position;
    std::optional<double> theta, phi;
    /// Reason the detection could not be localized.
    std::optional<std::string> unlocalizable;
};

// Readers accept a stream plus a source name used in error messages, or a
// path. They throw ParseError for malformed lines (with the line number) and
// ValidationError for invariant violations (naming the field); they never
// crash on malformed input. An empty document is an empty list.
std::vector<AnnotationRecord> read_annotations(std::istream& in, const std::string& source);
std::vector<AnnotationRecord> read_annotations(const std::filesystem::path& path);
void write_annotations(std::span<const AnnotationRecord> records, std::ostream& out);
void write_annotations(std::span<const AnnotationRecord> records,
                       const std::filesystem::path& path);

PredictionFile read_predictions(std::istream& in, const std::string& source);
PredictionFile read_predictions(const std::filesystem::path& path);
void write_predictions(const PredictionFile& file, std::ostream& out);
void write_predictions(const PredictionFile& file, const std::filesystem::path& path);

CalibrationFile read_calibration(std::istream& in, const std::string& source);
CalibrationFile read_calibration(const std::filesystem::path& path);
void write_calibration(const CalibrationFile& calibration, std::ostream& out);
void write_calibration(const CalibrationFile& calibration,
                       const std::filesystem::path& path);

std::vector<camera::Correspondence> read_correspondences(std::istream& in,
                                                         const std::string& source);
std::vector<camera::Correspondence> read_correspondences(const std::filesystem::path& path);
void write_correspondences(std::span<const camera::Correspondence> correspondences,
                           std::ostream& out);
void write_correspondences(std::span<const camera::Correspondence> correspondences,
                           const std::filesystem::path& path);

sim::Scene read_scene(std::istream& in, const std::string& source);
sim::Scene read_scene(const std::filesystem::path& path);
void write_scene(const sim::Scene& scene, std::ostream& out);
void write_scene(const sim::Scene& scene, const std::filesystem::path& path);

std::vector<LocalizationRecord> read_localizations(std::istream& in,
                                                   const std::string& source);
std::vector<LocalizationRecord> read_localizations(const std::filesystem::path& path);
void write_localizations(std::span<const LocalizationRecord> records, std::ostream& out);
void write_localizations(std::span<const LocalizationRecord> records,
                         const std::filesystem::path& path);

/// Converts prediction records into matching replay records (normalised
/// detections keyed by image and angle).
std::vector<matching::ReplayRecord> to_replay_records(const PredictionFile& file);

/// %.17g decimal formatting shared by all writers.
std::string format_double(double value);

}  // namespace fisheyeloc::io
