// Copyright (c) 2026 fisheyeloc contributors
// SPDX-License-Identifier: Apache-2.0

#include "fisheyeloc/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "fisheyeloc/errors.hpp"

namespace fisheyeloc::io {

namespace {

using nlohmann::json;

constexpr const char* kAnnotationFormat = "fisheyeloc-annotations";
constexpr const char* kPredictionFormat = "fisheyeloc-predictions";
constexpr const char* kCalibrationFormat = "fisheyeloc-calibration";
constexpr const char* kCorrespondenceFormat = "fisheyeloc-correspondences";
constexpr const char* kSceneFormat = "fisheyeloc-scene";
constexpr const char* kLocalizationFormat = "fisheyeloc-localizations";
constexpr const char* kWorldFrame = "origin=nadir;x=+u;y=+v";

struct Ctx {
    const std::string& source;
    std::size_t line;
};

[[noreturn]] void fail_parse(const Ctx& ctx, const std::string& message) {
    throw ParseError(ctx.source, ctx.line, message);
}

[[noreturn]] void fail_field(const Ctx& ctx, const std::string& field,
                             const std::string& message) {
    throw ValidationError(ctx.source + ":" + std::to_string(ctx.line) + ": field '" +
                          field + "': " + message);
}

json parse_json(const std::string& text, const Ctx& ctx) {
    try {
        return json::parse(text);
    } catch (const std::exception& e) {
        fail_parse(ctx, e.what());
    }
}

void check_object(const json& value, const Ctx& ctx) {
    if (!value.is_object()) fail_parse(ctx, "expected a JSON object");
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const Ctx& ctx) {
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* key : allowed)
            if (item.key() == key) {
                known = true;
                break;
            }
        if (!known) fail_field(ctx, item.key(), "unknown field");
    }
}

const json& member(const json& obj, const char* key, const Ctx& ctx) {
    const auto it = obj.find(key);
    if (it == obj.end()) fail_field(ctx, key, "missing");
    return *it;
}

const json* opt_member(const json& obj, const char* key) {
    const auto it = obj.find(key);
    return it == obj.end() || it->is_null() ? nullptr : &*it;
}

double as_number(const json& value, const char* field, const Ctx& ctx) {
    if (!value.is_number()) fail_field(ctx, field, "expected a number");
    const double v = value.get<double>();
    if (!std::isfinite(v)) fail_field(ctx, field, "must be finite");
    return v;
}

std::string as_string(const json& value, const char* field, const Ctx& ctx) {
    if (!value.is_string()) fail_field(ctx, field, "expected a string");
    return value.get<std::string>();
}

const json& as_array(const json& value, const char* field, std::size_t size,
                     const Ctx& ctx) {
    if (!value.is_array()) fail_field(ctx, field, "expected an array");
    if (size != 0 && value.size() != size)
        fail_field(ctx, field, "expected " + std::to_string(size) + " entries, got " +
                                   std::to_string(value.size()));
    return value;
}

void expect_header(const json& obj, const char* format_tag, const Ctx& ctx) {
    check_object(obj, ctx);
    const std::string format = as_string(member(obj, "format", ctx), "format", ctx);
    if (format != format_tag)
        fail_parse(ctx, "format tag '" + format + "' does not match '" + format_tag + "'");
    const json& version = member(obj, "version", ctx);
    if (!version.is_number_integer() || version.get<int>() != kFormatVersion)
        fail_field(ctx, "version", "unsupported version");
}

std::string read_all(std::istream& in) {
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

bool blank(const std::string& text) {
    return text.find_first_not_of(" \t\r\n") == std::string::npos;
}

geometry::RadiusAlignedBox box_from_json(const json& value, const char* field,
                                         const Ctx& ctx) {
    const json& arr = as_array(value, field, 4, ctx);
    double f[4];
    for (std::size_t i = 0; i < 4; ++i) f[i] = as_number(arr[i], field, ctx);
    try {
        return geometry::RadiusAlignedBox(f[0], f[1], f[2], f[3]);
    } catch (const ValidationError& e) {
        fail_field(ctx, field, e.what());
    }
}

void check_normalized_box(const geometry::RadiusAlignedBox& box, const char* field,
                          const Ctx& ctx) {
    if (box.cx() < 0.0 || box.cx() > 1.0 || box.cy() < 0.0 || box.cy() > 1.0 ||
        box.w() > 1.0 || box.h() > 1.0)
        fail_field(ctx, field, "normalised box fields must lie in [0, 1]");
}

std::array<double, 2> pair_from_json(const json& value, const char* field, const Ctx& ctx) {
    const json& arr = as_array(value, field, 2, ctx);
    return {as_number(arr[0], field, ctx), as_number(arr[1], field, ctx)};
}

void validate_attributes(const std::vector<std::string>& attributes, const Ctx& ctx) {
    for (const auto& tag : attributes) {
        bool known = false;
        for (const char* allowed : kAttributeTags)
            if (tag == allowed) {
                known = true;
                break;
            }
        if (!known) fail_field(ctx, "attributes", "unknown tag '" + tag + "'");
    }
    const auto has = [&](const char* tag) {
        return std::find(attributes.begin(), attributes.end(), tag) != attributes.end();
    };
    for (std::size_t i = 0; i < attributes.size(); ++i)
        for (std::size_t j = i + 1; j < attributes.size(); ++j)
            if (attributes[i] == attributes[j])
                fail_field(ctx, "attributes", "duplicate tag '" + attributes[i] + "'");
    if (has("day") && has("night"))
        fail_field(ctx, "attributes", "'day' and 'night' are mutually exclusive");
    if (has("outdoor") && has("indoor"))
        fail_field(ctx, "attributes", "'outdoor' and 'indoor' are mutually exclusive");
}

void validate_split(const std::string& split, const Ctx& ctx) {
    for (const char* tag : kSplitTags)
        if (split == tag) return;
    fail_field(ctx, "split", "unknown split tag '" + split + "'");
}

std::string json_escape(const std::string& text) {
    std::string out;
    out.reserve(text.size() + 2);
    for (const char c : text) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\b': out += "\\b"; break;
            case '\f': out += "\\f"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

std::string quoted(const std::string& text) { return "\"" + json_escape(text) + "\""; }

double checked_finite(double value, const char* what) {
    if (!std::isfinite(value))
        throw ValidationError(std::string("write: non-finite value for ") + what);
    return value;
}

std::string num(double value, const char* what) {
    return format_double(checked_finite(value, what));
}

std::string pair_text(double a, double b, const char* what) {
    return "[" + num(a, what) + "," + num(b, what) + "]";
}

std::string box_text(const geometry::RadiusAlignedBox& box, const char* what) {
    return "[" + num(box.cx(), what) + "," + num(box.cy(), what) + "," +
           num(box.w(), what) + "," + num(box.h(), what) + "]";
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    return out;
}

void finish_output(std::ostream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

// Line-oriented scan: hands the parsed header to header_fn and every further
// non-header line to record_fn. An empty document yields no calls.
template <typename HeaderFn, typename RecordFn>
void scan_jsonl(std::istream& in, const std::string& source, const char* format_tag,
                HeaderFn&& header_fn, RecordFn&& record_fn) {
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        const Ctx ctx{source, line_no};
        if (!header_seen) {
            if (blank(line) && in.peek() == std::char_traits<char>::eof()) return;
            const json header = parse_json(line, ctx);
            expect_header(header, format_tag, ctx);
            header_fn(header, ctx);
            header_seen = true;
            continue;
        }
        if (blank(line)) fail_parse(ctx, "blank line");
        const json record = parse_json(line, ctx);
        check_object(record, ctx);
        record_fn(record, ctx);
    }
}

}  // namespace

std::string format_double(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

// ---------------------------------------------------------------- annotations

std::vector<AnnotationRecord> read_annotations(std::istream& in, const std::string& source) {
    std::vector<AnnotationRecord> records;
    scan_jsonl(
        in, source, kAnnotationFormat,
        [](const json& header, const Ctx& ctx) {
            check_keys(header, {"format", "version"}, ctx);
        },
        [&](const json& obj, const Ctx& ctx) {
            check_keys(obj, {"image_id", "scene_id", "split", "attributes", "boxes"}, ctx);
            AnnotationRecord rec;
            rec.image_id = as_string(member(obj, "image_id", ctx), "image_id", ctx);
            rec.scene_id = as_string(member(obj, "scene_id", ctx), "scene_id", ctx);
            rec.split = as_string(member(obj, "split", ctx), "split", ctx);
            validate_split(rec.split, ctx);
            for (const json& tag : as_array(member(obj, "attributes", ctx), "attributes", 0, ctx))
                rec.attributes.push_back(as_string(tag, "attributes", ctx));
            validate_attributes(rec.attributes, ctx);
            for (const json& entry : as_array(member(obj, "boxes", ctx), "boxes", 0, ctx)) {
                check_object(entry, ctx);
                check_keys(entry, {"box", "world"}, ctx);
                AnnotatedBox box{box_from_json(member(entry, "box", ctx), "box", ctx),
                                 std::nullopt};
                if (const json* world = opt_member(entry, "world"))
                    box.world = pair_from_json(*world, "world", ctx);
                rec.boxes.push_back(box);
            }
            records.push_back(std::move(rec));
        });
    return records;
}

std::vector<AnnotationRecord> read_annotations(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_annotations(in, path.string());
}

void write_annotations(std::span<const AnnotationRecord> records, std::ostream& out) {
    out << "{\"format\":" << quoted(kAnnotationFormat) << ",\"version\":" << kFormatVersion
        << "}\n";
    for (const auto& rec : records) {
        out << "{\"image_id\":" << quoted(rec.image_id)
            << ",\"scene_id\":" << quoted(rec.scene_id) << ",\"split\":" << quoted(rec.split)
            << ",\"attributes\":[";
        for (std::size_t i = 0; i < rec.attributes.size(); ++i) {
            if (i) out << ",";
            out << quoted(rec.attributes[i]);
        }
        out << "],\"boxes\":[";
        for (std::size_t i = 0; i < rec.boxes.size(); ++i) {
            if (i) out << ",";
            out << "{\"box\":" << box_text(rec.boxes[i].box, "box");
            if (rec.boxes[i].world)
                out << ",\"world\":"
                    << pair_text((*rec.boxes[i].world)[0], (*rec.boxes[i].world)[1], "world");
            out << "}";
        }
        out << "]}\n";
    }
}

void write_annotations(std::span<const AnnotationRecord> records,
                       const std::filesystem::path& path) {
    auto out = open_output(path);
    write_annotations(records, out);
    finish_output(out, path);
}

// ---------------------------------------------------------------- predictions

PredictionFile read_predictions(std::istream& in, const std::string& source) {
    PredictionFile file;
    scan_jsonl(
        in, source, kPredictionFormat,
        [&](const json& header, const Ctx& ctx) {
            check_keys(header, {"format", "version", "image_side"}, ctx);
            file.image_side =
                as_number(member(header, "image_side", ctx), "image_side", ctx);
            if (file.image_side <= 0.0) fail_field(ctx, "image_side", "must be > 0");
        },
        [&](const json& obj, const Ctx& ctx) {
            check_keys(obj, {"image_id", "angle", "detections"}, ctx);
            PredictionRecord rec;
            rec.image_id = as_string(member(obj, "image_id", ctx), "image_id", ctx);
            if (const json* angle = opt_member(obj, "angle"))
                rec.angle = as_number(*angle, "angle", ctx);
            for (const json& entry :
                 as_array(member(obj, "detections", ctx), "detections", 0, ctx)) {
                check_object(entry, ctx);
                check_keys(entry, {"box", "score", "head"}, ctx);
                PredictedBox det{box_from_json(member(entry, "box", ctx), "box", ctx), 0.0,
                                 std::nullopt};
                check_normalized_box(det.box, "box", ctx);
                det.score = as_number(member(entry, "score", ctx), "score", ctx);
                if (det.score < 0.0 || det.score > 1.0)
                    fail_field(ctx, "score", "must lie in [0, 1]");
                if (const json* head = opt_member(entry, "head")) {
                    const auto h = pair_from_json(*head, "head", ctx);
                    if (h[0] < 0.0 || h[0] > 1.0 || h[1] < 0.0 || h[1] > 1.0)
                        fail_field(ctx, "head", "must lie in [0, 1]");
                    det.head = ImagePoint{h[0], h[1]};
                }
                rec.detections.push_back(det);
            }
            file.records.push_back(std::move(rec));
        });
    return file;
}

PredictionFile read_predictions(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_predictions(in, path.string());
}

void write_predictions(const PredictionFile& file, std::ostream& out) {
    out << "{\"format\":" << quoted(kPredictionFormat) << ",\"version\":" << kFormatVersion
        << ",\"image_side\":" << num(file.image_side, "image_side") << "}\n";
    for (const auto& rec : file.records) {
        out << "{\"image_id\":" << quoted(rec.image_id)
            << ",\"angle\":" << num(rec.angle, "angle") << ",\"detections\":[";
        for (std::size_t i = 0; i < rec.detections.size(); ++i) {
            const auto& det = rec.detections[i];
            if (i) out << ",";
            out << "{\"box\":" << box_text(det.box, "box")
                << ",\"score\":" << num(det.score, "score");
            if (det.head) out << ",\"head\":" << pair_text(det.head->u, det.head->v, "head");
            out << "}";
        }
        out << "]}\n";
    }
}

void write_predictions(const PredictionFile& file, const std::filesystem::path& path) {
    auto out = open_output(path);
    write_predictions(file, out);
    finish_output(out, path);
}

// ---------------------------------------------------------------- calibration

CalibrationFile read_calibration(std::istream& in, const std::string& source) {
    const Ctx ctx{source, 1};
    const json obj = parse_json(read_all(in), ctx);
    expect_header(obj, kCalibrationFormat, ctx);
    check_keys(obj, {"format", "version", "f", "u0", "v0", "k", "Z_meters", "rms_px",
                     "world_frame"},
               ctx);
    const double f = as_number(member(obj, "f", ctx), "f", ctx);
    const double u0 = as_number(member(obj, "u0", ctx), "u0", ctx);
    const double v0 = as_number(member(obj, "v0", ctx), "v0", ctx);
    const json& karr = as_array(member(obj, "k", ctx), "k", camera::kNumCoeffs, ctx);
    std::array<double, camera::kNumCoeffs> k{};
    for (std::size_t i = 0; i < camera::kNumCoeffs; ++i)
        k[i] = as_number(karr[i], "k", ctx);
    std::optional<double> altitude;
    if (const json* z = opt_member(obj, "Z_meters"))
        altitude = as_number(*z, "Z_meters", ctx);
    std::optional<double> rms;
    if (const json* r = opt_member(obj, "rms_px")) rms = as_number(*r, "rms_px", ctx);
    try {
        return CalibrationFile{camera::FisheyeModel(f, u0, v0, k, altitude), rms};
    } catch (const ValidationError& e) {
        throw ValidationError(source + ": " + e.what());
    }
}

CalibrationFile read_calibration(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_calibration(in, path.string());
}

void write_calibration(const CalibrationFile& calibration, std::ostream& out) {
    const auto& m = calibration.model;
    out << "{\n";
    out << "  \"format\": " << quoted(kCalibrationFormat) << ",\n";
    out << "  \"version\": " << kFormatVersion << ",\n";
    out << "  \"f\": " << num(m.focal(), "f") << ",\n";
    out << "  \"u0\": " << num(m.principal().u, "u0") << ",\n";
    out << "  \"v0\": " << num(m.principal().v, "v0") << ",\n";
    out << "  \"k\": [";
    for (std::size_t i = 0; i < camera::kNumCoeffs; ++i) {
        if (i) out << ", ";
        out << num(m.coeffs()[i], "k");
    }
    out << "],\n";
    out << "  \"Z_meters\": "
        << (m.altitude() ? num(*m.altitude(), "Z_meters") : std::string("null")) << ",\n";
    out << "  \"rms_px\": "
        << (calibration.rms_px ? num(*calibration.rms_px, "rms_px") : std::string("null"))
        << ",\n";
    out << "  \"world_frame\": " << quoted(kWorldFrame) << "\n";
    out << "}\n";
}

void write_calibration(const CalibrationFile& calibration,
                       const std::filesystem::path& path) {
    auto out = open_output(path);
    write_calibration(calibration, out);
    finish_output(out, path);
}

// ------------------------------------------------------------ correspondences

std::vector<camera::Correspondence> read_correspondences(std::istream& in,
                                                         const std::string& source) {
    std::vector<camera::Correspondence> records;
    scan_jsonl(
        in, source, kCorrespondenceFormat,
        [](const json& header, const Ctx& ctx) {
            check_keys(header, {"format", "version"}, ctx);
        },
        [&](const json& obj, const Ctx& ctx) {
            check_keys(obj, {"world", "pixel"}, ctx);
            const json& world = as_array(member(obj, "world", ctx), "world", 3, ctx);
            const auto pixel = pair_from_json(member(obj, "pixel", ctx), "pixel", ctx);
            records.push_back({{as_number(world[0], "world", ctx),
                                as_number(world[1], "world", ctx),
                                as_number(world[2], "world", ctx)},
                               {pixel[0], pixel[1]}});
        });
    return records;
}

std::vector<camera::Correspondence> read_correspondences(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_correspondences(in, path.string());
}

void write_correspondences(std::span<const camera::Correspondence> correspondences,
                           std::ostream& out) {
    out << "{\"format\":" << quoted(kCorrespondenceFormat)
        << ",\"version\":" << kFormatVersion << "}\n";
    for (const auto& c : correspondences) {
        out << "{\"world\":[" << num(c.world.x, "world") << "," << num(c.world.y, "world")
            << "," << num(c.world.z, "world")
            << "],\"pixel\":" << pair_text(c.pixel.u, c.pixel.v, "pixel") << "}\n";
    }
}

void write_correspondences(std::span<const camera::Correspondence> correspondences,
                           const std::filesystem::path& path) {
    auto out = open_output(path);
    write_correspondences(correspondences, out);
    finish_output(out, path);
}

// ----------------------------------------------------------------------scene

sim::Scene read_scene(std::istream& in, const std::string& source) {
    const Ctx ctx{source, 1};
    const json obj = parse_json(read_all(in), ctx);
    expect_header(obj, kSceneFormat, ctx);
    check_keys(obj, {"format", "version", "seed", "image_side", "camera", "persons"}, ctx);
    const json& seed = member(obj, "seed", ctx);
    if (!seed.is_number_unsigned() && !seed.is_number_integer())
        fail_field(ctx, "seed", "expected an integer");
    if (seed.is_number_integer() && !seed.is_number_unsigned() && seed.get<long long>() < 0)
        fail_field(ctx, "seed", "must be >= 0");
    const double image_side = as_number(member(obj, "image_side", ctx), "image_side", ctx);
    if (image_side <= 0.0) fail_field(ctx, "image_side", "must be > 0");

    const json& cam = member(obj, "camera", ctx);
    check_object(cam, ctx);
    check_keys(cam, {"f", "u0", "v0", "k", "Z_meters"}, ctx);
    const json& karr = as_array(member(cam, "k", ctx), "k", camera::kNumCoeffs, ctx);
    std::array<double, camera::kNumCoeffs> k{};
    for (std::size_t i = 0; i < camera::kNumCoeffs; ++i)
        k[i] = as_number(karr[i], "k", ctx);
    std::optional<double> altitude;
    if (const json* z = opt_member(cam, "Z_meters"))
        altitude = as_number(*z, "Z_meters", ctx);

    std::vector<sim::PersonSpec> persons;
    for (const json& entry : as_array(member(obj, "persons", ctx), "persons", 0, ctx)) {
        check_object(entry, ctx);
        check_keys(entry, {"x", "y", "height", "radius"}, ctx);
        sim::PersonSpec person;
        person.x = as_number(member(entry, "x", ctx), "x", ctx);
        person.y = as_number(member(entry, "y", ctx), "y", ctx);
        person.height = as_number(member(entry, "height", ctx), "height", ctx);
        person.radius = as_number(member(entry, "radius", ctx), "radius", ctx);
        if (person.height <= 0.0) fail_field(ctx, "height", "must be > 0");
        if (person.radius <= 0.0) fail_field(ctx, "radius", "must be > 0");
        persons.push_back(person);
    }
    try {
        return sim::Scene{camera::FisheyeModel(as_number(member(cam, "f", ctx), "f", ctx),
                                               as_number(member(cam, "u0", ctx), "u0", ctx),
                                               as_number(member(cam, "v0", ctx), "v0", ctx),
                                               k, altitude),
                          image_side, std::move(persons), seed.get<std::uint64_t>()};
    } catch (const ValidationError& e) {
        throw ValidationError(source + ": " + e.what());
    }
}

sim::Scene read_scene(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_scene(in, path.string());
}

void write_scene(const sim::Scene& scene, std::ostream& out) {
    const auto& m = scene.model;
    out << "{\n";
    out << "  \"format\": " << quoted(kSceneFormat) << ",\n";
    out << "  \"version\": " << kFormatVersion << ",\n";
    out << "  \"seed\": " << scene.seed << ",\n";
    out << "  \"image_side\": " << num(scene.image_side, "image_side") << ",\n";
    out << "  \"camera\": {\"f\": " << num(m.focal(), "f")
        << ", \"u0\": " << num(m.principal().u, "u0")
        << ", \"v0\": " << num(m.principal().v, "v0") << ", \"k\": [";
    for (std::size_t i = 0; i < camera::kNumCoeffs; ++i) {
        if (i) out << ", ";
        out << num(m.coeffs()[i], "k");
    }
    out << "], \"Z_meters\": "
        << (m.altitude() ? num(*m.altitude(), "Z_meters") : std::string("null")) << "},\n";
    out << "  \"persons\": [";
    for (std::size_t i = 0; i < scene.persons.size(); ++i) {
        const auto& p = scene.persons[i];
        out << (i ? ",\n    " : "\n    ");
        out << "{\"x\": " << num(p.x, "x") << ", \"y\": " << num(p.y, "y")
            << ", \"height\": " << num(p.height, "height")
            << ", \"radius\": " << num(p.radius, "radius") << "}";
    }
    out << (scene.persons.empty() ? "]\n" : "\n  ]\n");
    out << "}\n";
}

void write_scene(const sim::Scene& scene, const std::filesystem::path& path) {
    auto out = open_output(path);
    write_scene(scene, out);
    finish_output(out, path);
}

// -------------------------------------------------------------- localizations

std::vector<LocalizationRecord> read_localizations(std::istream& in,
                                                   const std::string& source) {
    std::vector<LocalizationRecord> records;
    scan_jsonl(
        in, source, kLocalizationFormat,
        [](const json& header, const Ctx& ctx) {
            check_keys(header, {"format", "version"}, ctx);
        },
        [&](const json& obj, const Ctx& ctx) {
            check_keys(obj,
                       {"image_id", "detection_index", "strategy", "anchor", "position",
                        "theta", "phi", "unlocalizable"},
                       ctx);
            LocalizationRecord rec;
            rec.image_id = as_string(member(obj, "image_id", ctx), "image_id", ctx);
            const json& index = member(obj, "detection_index", ctx);
            if (!index.is_number_unsigned() && !index.is_number_integer())
                fail_field(ctx, "detection_index", "expected an integer");
            if (index.is_number_integer() && index.get<long long>() < 0)
                fail_field(ctx, "detection_index", "must be >= 0");
            rec.detection_index = index.get<std::size_t>();
            rec.strategy = as_string(member(obj, "strategy", ctx), "strategy", ctx);
            if (const json* reason = opt_member(obj, "unlocalizable")) {
                rec.unlocalizable = as_string(*reason, "unlocalizable", ctx);
            } else {
                const auto anchor = pair_from_json(member(obj, "anchor", ctx), "anchor", ctx);
                rec.anchor = ImagePoint{anchor[0], anchor[1]};
                rec.position = pair_from_json(member(obj, "position", ctx), "position", ctx);
                rec.theta = as_number(member(obj, "theta", ctx), "theta", ctx);
                rec.phi = as_number(member(obj, "phi", ctx), "phi", ctx);
            }
            records.push_back(std::move(rec));
        });
    return records;
}

std::vector<LocalizationRecord> read_localizations(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_localizations(in, path.string());
}

void write_localizations(std::span<const LocalizationRecord> records, std::ostream& out) {
    out << "{\"format\":" << quoted(kLocalizationFormat) << ",\"version\":" << kFormatVersion
        << "}\n";
    for (const auto& rec : records) {
        out << "{\"image_id\":" << quoted(rec.image_id)
            << ",\"detection_index\":" << rec.detection_index
            << ",\"strategy\":" << quoted(rec.strategy);
        if (rec.unlocalizable) {
            out << ",\"unlocalizable\":" << quoted(*rec.unlocalizable);
        } else {
            if (!rec.anchor || !rec.position || !rec.theta || !rec.phi)
                throw ValidationError(
                    "write_localizations: localized record missing anchor/position/angles");
            out << ",\"anchor\":" << pair_text(rec.anchor->u, rec.anchor->v, "anchor")
                << ",\"position\":" << pair_text((*rec.position)[0], (*rec.position)[1],
                                                 "position")
                << ",\"theta\":" << num(*rec.theta, "theta")
                << ",\"phi\":" << num(*rec.phi, "phi");
        }
        out << "}\n";
    }
}

void write_localizations(std::span<const LocalizationRecord> records,
                         const std::filesystem::path& path) {
    auto out = open_output(path);
    write_localizations(records, out);
    finish_output(out, path);
}

std::vector<matching::ReplayRecord> to_replay_records(const PredictionFile& file) {
    std::vector<matching::ReplayRecord> records;
    records.reserve(file.records.size());
    for (const auto& rec : file.records) {
        matching::ReplayRecord replay;
        replay.image_id = rec.image_id;
        replay.angle = rec.angle;
        replay.detections.reserve(rec.detections.size());
        for (const auto& det : rec.detections)
            replay.detections.emplace_back(det.box, det.score);
        records.push_back(std::move(replay));
    }
    return records;
}

}  // namespace fisheyeloc::io
