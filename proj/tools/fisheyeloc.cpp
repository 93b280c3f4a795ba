// Copyright (c) 2026 fisheyeloc contributors
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fisheyeloc/camera.hpp"
#include "fisheyeloc/errors.hpp"
#include "fisheyeloc/eval.hpp"
#include "fisheyeloc/io.hpp"
#include "fisheyeloc/localization.hpp"
#include "fisheyeloc/matching.hpp"
#include "fisheyeloc/parallel.hpp"
#include "fisheyeloc/sim.hpp"

namespace {

namespace fs = std::filesystem;
using namespace fisheyeloc;

std::string fmt_num(double v) { return io::format_double(v); }

struct SharedOptions {
    std::string config_path;
    std::uint64_t seed = 0;
    unsigned threads = default_thread_count();
    std::string format = "text";
    double lambda = matching::kDefaultEquivariantWeight;
    std::string strategy = "anchor";
    double score_threshold = 0.5;
    matching::MatchWeights weights;
};

// Values from the JSON config file fill in flags the user left unset.
void apply_config(SharedOptions& opts, CLI::App& app) {
    std::string path = opts.config_path;
    if (path.empty())
        if (const char* env = std::getenv("FISHEYELOC_CONFIG")) path = env;
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    nlohmann::json cfg;
    try {
        cfg = nlohmann::json::parse(in);
    } catch (const std::exception& e) {
        throw ParseError(path, 0, e.what());
    }
    if (!cfg.is_object()) throw ParseError(path, 0, "config must be a JSON object");
    const auto unset = [&](const char* flag) {
        const CLI::Option* opt = app.get_option_no_throw(flag);
        return opt == nullptr || opt->count() == 0;
    };
    const auto number = [&](const char* key) {
        if (!cfg[key].is_number())
            throw ValidationError(path + ": config key '" + std::string(key) +
                                  "' must be a number");
        return cfg[key].get<double>();
    };
    try {
        if (cfg.contains("seed") && unset("--seed")) opts.seed = cfg["seed"].get<std::uint64_t>();
        if (cfg.contains("threads") && unset("--threads"))
            opts.threads = static_cast<unsigned>(number("threads"));
        if (cfg.contains("format") && unset("--format")) {
            opts.format = cfg["format"].get<std::string>();
            if (opts.format != "text" && opts.format != "csv")
                throw ValidationError(path + ": config key 'format' must be text or csv");
        }
        if (cfg.contains("lambda") && unset("--lambda")) opts.lambda = number("lambda");
        if (cfg.contains("strategy") && unset("--strategy"))
            opts.strategy = cfg["strategy"].get<std::string>();
        if (cfg.contains("score_threshold") && unset("--score-threshold"))
            opts.score_threshold = number("score_threshold");
        if (cfg.contains("weights")) {
            const auto& w = cfg["weights"];
            if (!w.is_object())
                throw ValidationError(path + ": config key 'weights' must be an object");
            if (w.contains("cls") && unset("--w-cls")) opts.weights.cls = w["cls"].get<double>();
            if (w.contains("l1") && unset("--w-l1")) opts.weights.l1 = w["l1"].get<double>();
            if (w.contains("giou") && unset("--w-giou"))
                opts.weights.giou = w["giou"].get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path + ": bad config value: " + e.what());
    }
}

localization::AnchorStrategy parse_strategy(const std::string& name) {
    const auto strategy = localization::strategy_from_name(name);
    if (!strategy)
        throw ValidationError("unknown strategy '" + name +
                              "' (expected anchor, center, or head)");
    return *strategy;
}

void check_plain_predictions(const io::PredictionFile& file, const char* command) {
    for (const auto& rec : file.records)
        if (std::abs(rec.angle) > 1e-12)
            throw ValidationError(std::string(command) + ": record for image '" +
                                  rec.image_id +
                                  "' carries a rotation angle; rotated replay files are "
                                  "handled by equi-check");
}

void write_text_output(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("write to '" + path + "' failed");
}

// ----------------------------------------------------------------- calibrate

struct CalibrateOptions {
    std::string input;
    std::string output;
    double focal_guess = 1000.0;
    std::vector<double> pin_principal;
    int max_iterations = 200;
};

int run_calibrate(const CalibrateOptions& opts) {
    const auto correspondences = io::read_correspondences(fs::path(opts.input));
    camera::CalibrationOptions cal;
    cal.initial_focal = opts.focal_guess;
    cal.max_iterations = opts.max_iterations;
    if (!opts.pin_principal.empty())
        cal.pinned_principal = ImagePoint{opts.pin_principal[0], opts.pin_principal[1]};
    const camera::CalibrationResult result = camera::calibrate(correspondences, cal);
    io::write_calibration({result.model, result.rms_px}, fs::path(opts.output));
    std::cout << "calibrated " << correspondences.size() << " correspondences: f "
              << fmt_num(result.model.focal()) << " u0 "
              << fmt_num(result.model.principal().u) << " v0 "
              << fmt_num(result.model.principal().v) << " rms_px "
              << fmt_num(result.rms_px) << " iterations " << result.iterations << "\n";
    return 0;
}

// ------------------------------------------------------------------ localize

struct LocalizeOptions {
    std::string predictions;
    std::string calibration;
    std::string output;
};

int run_localize(const LocalizeOptions& opts, const SharedOptions& shared) {
    const auto strategy = parse_strategy(shared.strategy);
    const io::PredictionFile preds = io::read_predictions(fs::path(opts.predictions));
    check_plain_predictions(preds, "localize");
    const io::CalibrationFile calibration = io::read_calibration(fs::path(opts.calibration));
    const double side = preds.image_side;

    std::vector<std::vector<io::LocalizationRecord>> per_image(preds.records.size());
    parallel_for(preds.records.size(), shared.threads, [&](std::size_t i) {
        const auto& rec = preds.records[i];
        auto& out = per_image[i];
        out.reserve(rec.detections.size());
        for (std::size_t d = 0; d < rec.detections.size(); ++d) {
            const auto& det = rec.detections[d];
            io::LocalizationRecord row;
            row.image_id = rec.image_id;
            row.detection_index = d;
            row.strategy = localization::strategy_name(strategy);
            try {
                std::optional<ImagePoint> head;
                if (det.head) head = ImagePoint{det.head->u * side, det.head->v * side};
                const auto result = localization::localize(det.box.scaled(side),
                                                           calibration.model, strategy, head);
                row.anchor = result.anchor;
                row.position = std::array<double, 2>{result.x, result.y};
                row.theta = result.theta;
                row.phi = result.phi;
            } catch (const Error& e) {
                row.unlocalizable = e.what();
            }
            out.push_back(std::move(row));
        }
    });

    std::vector<io::LocalizationRecord> rows;
    std::size_t failed = 0;
    for (const auto& group : per_image)
        for (const auto& row : group) {
            if (row.unlocalizable) ++failed;
            rows.push_back(row);
        }
    io::write_localizations(rows, fs::path(opts.output));
    std::cout << "localized " << (rows.size() - failed) << " detections (" << failed
              << " unlocalizable) across " << preds.records.size() << " images\n";
    return 0;
}

// ------------------------------------------------------------------ evaluate

struct EvaluateOptions {
    std::string predictions;
    std::string annotations;
    std::string calibration;
    std::string output;
    bool no_pe = false;
};

int run_evaluate(const EvaluateOptions& opts, const SharedOptions& shared) {
    const auto strategy = parse_strategy(shared.strategy);
    const auto annotations = io::read_annotations(fs::path(opts.annotations));
    const io::PredictionFile preds = io::read_predictions(fs::path(opts.predictions));
    check_plain_predictions(preds, "evaluate");
    const double side = preds.image_side;

    std::map<std::string, const io::AnnotationRecord*> by_image;
    for (const auto& ann : annotations)
        if (!by_image.emplace(ann.image_id, &ann).second)
            throw ValidationError("evaluate: duplicate annotation image id '" +
                                  ann.image_id + "'");
    std::map<std::string, const io::PredictionRecord*> pred_by_image;
    for (const auto& rec : preds.records) {
        if (!by_image.count(rec.image_id))
            throw ValidationError("evaluate: prediction image '" + rec.image_id +
                                  "' has no annotation record");
        if (!pred_by_image.emplace(rec.image_id, &rec).second)
            throw ValidationError("evaluate: duplicate prediction image id '" +
                                  rec.image_id + "'");
    }

    bool world_present = false;
    for (const auto& ann : annotations)
        for (const auto& box : ann.boxes) world_present |= box.world.has_value();
    const bool want_pe = world_present && !opts.no_pe;

    std::optional<io::CalibrationFile> calibration;
    if (!opts.calibration.empty())
        calibration = io::read_calibration(fs::path(opts.calibration));
    if (want_pe && !calibration)
        throw ValidationError(
            "evaluate: annotations carry world positions, so positional error needs "
            "--calibration (or pass --no-pe)");

    const ImagePoint principal_norm =
        calibration ? ImagePoint{calibration->model.principal().u / side,
                                 calibration->model.principal().v / side}
                    : ImagePoint{0.5, 0.5};

    std::vector<eval::EvalImage> images(annotations.size());
    parallel_for(annotations.size(), shared.threads, [&](std::size_t i) {
        const auto& ann = annotations[i];
        eval::EvalImage image;
        image.image_id = ann.image_id;
        image.scene_id = ann.scene_id;
        image.split = ann.split;
        for (const auto& box : ann.boxes)
            image.gts.emplace_back(box.box.scaled(1.0 / side), box.world);
        if (const auto it = pred_by_image.find(ann.image_id); it != pred_by_image.end()) {
            for (const auto& det : it->second->detections) {
                image.detections.emplace_back(det.box, det.score);
                if (want_pe) {
                    try {
                        std::optional<ImagePoint> head;
                        if (det.head)
                            head = ImagePoint{det.head->u * side, det.head->v * side};
                        const auto result = localization::localize(
                            det.box.scaled(side), calibration->model, strategy, head);
                        image.locations.push_back(std::array<double, 2>{result.x, result.y});
                    } catch (const Error&) {
                        image.locations.push_back(std::nullopt);
                    }
                }
            }
        }
        images[i] = std::move(image);
    });

    const eval::EvalReport report =
        eval::evaluate(images, principal_norm, shared.score_threshold, shared.threads);
    const std::string text = shared.format == "csv" ? eval::format_report_csv(report)
                                                    : eval::format_report_text(report);
    write_text_output(text, opts.output);
    return 0;
}

// ------------------------------------------------------------------ simulate

struct SimulateOptions {
    std::string out_dir;
    std::size_t scenes = 1;
    std::size_t persons = 10;
    double altitude = 3.0;
    double min_distance = 0.0;
    double max_distance = 10.0;
    std::vector<double> height_range{1.7, 1.7};
    std::vector<double> radius_range{0.25, 0.25};
    double image_side = 2952.0;
    std::string split = "test-seen";
    bool no_separation = false;
    bool perturb = false;
    double center_sigma = 0.0;
    double size_sigma = 0.0;
    double miss_rate = 0.0;
    double fp_rate = 0.0;
};

int run_simulate(const SimulateOptions& opts, const SharedOptions& shared) {
    bool split_ok = false;
    for (const char* tag : io::kSplitTags) split_ok |= opts.split == tag;
    if (!split_ok) throw ValidationError("simulate: unknown split tag '" + opts.split + "'");

    fs::create_directories(opts.out_dir);
    std::vector<io::AnnotationRecord> all_annotations;
    io::PredictionFile all_predictions;
    all_predictions.image_side = opts.image_side;

    for (std::size_t i = 0; i < opts.scenes; ++i) {
        sim::SceneConfig config;
        config.altitude = opts.altitude;
        config.person_count = opts.persons;
        config.min_distance = opts.min_distance;
        config.max_distance = opts.max_distance;
        config.height_range = {opts.height_range[0], opts.height_range[1]};
        config.body_radius_range = {opts.radius_range[0], opts.radius_range[1]};
        config.image_side = opts.image_side;
        config.enforce_separation = !opts.no_separation;
        const std::uint64_t scene_seed = shared.seed + i;
        const sim::Scene scene = sim::generate_scene(config, scene_seed);

        char name[32];
        std::snprintf(name, sizeof(name), "scene-%04zu", i);
        io::write_scene(scene, fs::path(opts.out_dir) / (std::string(name) + ".json"));

        const auto annotations = sim::render_annotations(scene);
        io::AnnotationRecord record;
        record.image_id = std::string(name) + "/frame-0";
        record.scene_id = name;
        record.split = opts.split;
        for (const auto& ann : annotations)
            if (ann.box) record.boxes.push_back({*ann.box, ann.world});
        all_annotations.push_back(std::move(record));

        if (opts.perturb) {
            sim::PerturbConfig pcfg;
            pcfg.center_sigma_px = opts.center_sigma;
            pcfg.size_sigma_px = opts.size_sigma;
            pcfg.miss_rate = opts.miss_rate;
            pcfg.false_positive_rate = opts.fp_rate;
            const auto detections =
                sim::perturb_detections(annotations, scene, pcfg, scene_seed + 1000003);
            io::PredictionRecord pred;
            pred.image_id = std::string(name) + "/frame-0";
            for (const auto& det : detections)
                pred.detections.push_back({det.box(), det.score(), std::nullopt});
            all_predictions.records.push_back(std::move(pred));
        }
    }

    const fs::path ann_path = fs::path(opts.out_dir) / "annotations.jsonl";
    io::write_annotations(all_annotations, ann_path);
    std::cout << "wrote " << opts.scenes << " scenes and " << ann_path.string() << "\n";
    if (opts.perturb) {
        const fs::path pred_path = fs::path(opts.out_dir) / "predictions.jsonl";
        io::write_predictions(all_predictions, pred_path);
        std::cout << "wrote " << pred_path.string() << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------- equi-check

struct EquiCheckOptions {
    std::string predictions;
    std::string annotations;
    std::string calibration;
    std::string output;
};

int run_equi_check(const EquiCheckOptions& opts, const SharedOptions& shared) {
    if (shared.lambda < 0.0)
        throw ValidationError("equi-check: lambda must be >= 0");
    const auto annotations = io::read_annotations(fs::path(opts.annotations));
    const io::PredictionFile preds = io::read_predictions(fs::path(opts.predictions));
    const double side = preds.image_side;

    std::map<std::string, const io::AnnotationRecord*> by_image;
    for (const auto& ann : annotations)
        if (!by_image.emplace(ann.image_id, &ann).second)
            throw ValidationError("equi-check: duplicate annotation image id '" +
                                  ann.image_id + "'");

    ImagePoint principal_norm{0.5, 0.5};
    if (!opts.calibration.empty()) {
        const auto calibration = io::read_calibration(fs::path(opts.calibration));
        principal_norm = {calibration.model.principal().u / side,
                          calibration.model.principal().v / side};
    }

    std::vector<std::string> image_order;
    std::map<std::string, std::vector<const io::PredictionRecord*>> grouped;
    for (const auto& rec : preds.records) {
        if (!by_image.count(rec.image_id))
            throw ValidationError("equi-check: prediction image '" + rec.image_id +
                                  "' has no annotation record");
        auto& slot = grouped[rec.image_id];
        if (slot.empty()) image_order.push_back(rec.image_id);
        slot.push_back(&rec);
    }

    struct Row {
        std::string image_id;
        double angle;
        matching::LossBreakdown loss;
    };
    std::vector<Row> rows;
    for (const auto& image_id : image_order) {
        const auto& records = grouped[image_id];
        std::size_t zero_count = 0;
        for (const auto* rec : records)
            if (std::abs(rec->angle) <= 1e-12) ++zero_count;
        if (zero_count != 1)
            throw ValidationError("equi-check: image '" + image_id +
                                  "' needs exactly one angle-0 record, found " +
                                  std::to_string(zero_count));

        std::vector<matching::GroundTruthBox> gts;
        for (const auto& box : by_image.at(image_id)->boxes)
            gts.emplace_back(box.box.scaled(1.0 / side), box.world);

        std::vector<matching::ReplayRecord> replay;
        for (const auto* rec : records) {
            matching::ReplayRecord r;
            r.image_id = rec->image_id;
            r.angle = rec->angle;
            for (const auto& det : rec->detections) r.detections.emplace_back(det.box, det.score);
            replay.push_back(std::move(r));
        }
        matching::ReplayDetector detector(std::move(replay));
        if (detector.query_count() < gts.size())
            throw ValidationError("equi-check: image '" + image_id + "' replays " +
                                  std::to_string(detector.query_count()) +
                                  " detections for " + std::to_string(gts.size()) +
                                  " ground truths");

        for (const auto* rec : records) {
            if (std::abs(rec->angle) <= 1e-12) continue;
            const matching::LossBreakdown loss = matching::equivariant_training_loss(
                detector, image_id, gts, rec->angle, principal_norm, shared.weights,
                shared.lambda);
            rows.push_back({image_id, rec->angle, loss});
        }
    }

    double sum_det = 0.0, sum_equi = 0.0, sum_total = 0.0, max_equi = 0.0;
    for (const auto& row : rows) {
        sum_det += row.loss.det;
        sum_equi += row.loss.rotat_equi;
        sum_total += row.loss.total;
        max_equi = std::max(max_equi, row.loss.rotat_equi);
    }
    const double n = rows.empty() ? 1.0 : static_cast<double>(rows.size());

    std::string text;
    const bool csv = shared.format == "csv";
    if (csv) {
        text += "image_id,angle,cls,l1,giou,det,rotat_equi,total\n";
        for (const auto& row : rows)
            text += row.image_id + "," + fmt_num(row.angle) + "," + fmt_num(row.loss.cls) +
                    "," + fmt_num(row.loss.l1) + "," + fmt_num(row.loss.giou) + "," +
                    fmt_num(row.loss.det) + "," + fmt_num(row.loss.rotat_equi) + "," +
                    fmt_num(row.loss.total) + "\n";
    } else {
        text += "fisheyeloc equivariance report (lambda " + fmt_num(shared.lambda) +
                ", weights cls " + fmt_num(shared.weights.cls) + " l1 " +
                fmt_num(shared.weights.l1) + " giou " + fmt_num(shared.weights.giou) + ")\n";
        for (const auto& row : rows)
            text += "  " + row.image_id + " angle " + fmt_num(row.angle) + " det " +
                    fmt_num(row.loss.det) + " rotat_equi " + fmt_num(row.loss.rotat_equi) +
                    " total " + fmt_num(row.loss.total) + "\n";
        text += "aggregate pairs " + std::to_string(rows.size()) + " mean_det " +
                fmt_num(sum_det / n) + " mean_rotat_equi " + fmt_num(sum_equi / n) +
                " mean_total " + fmt_num(sum_total / n) + " max_rotat_equi " +
                fmt_num(max_equi) + "\n";
    }
    write_text_output(text, opts.output);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fisheyeloc: overhead-fisheye person localization toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    SharedOptions shared;
    app.add_option("--config", shared.config_path,
                   "JSON config file (default: $FISHEYELOC_CONFIG)");
    app.add_option("--seed", shared.seed, "RNG seed for seeded subcommands");
    app.add_option("--threads", shared.threads, "worker thread cap");
    app.add_option("--format", shared.format, "report format")
        ->check(CLI::IsMember({"text", "csv"}));
    app.add_option("--lambda", shared.lambda, "equivariant loss weight");
    app.add_option("--strategy", shared.strategy, "anchor strategy")
        ->check(CLI::IsMember({"anchor", "center", "head", "radial-near-midpoint",
                               "box-center", "head-center"}));
    app.add_option("--score-threshold", shared.score_threshold,
                   "score cutoff for the precision/recall operating point");
    app.add_option("--w-cls", shared.weights.cls, "classification matching weight");
    app.add_option("--w-l1", shared.weights.l1, "box L1 matching weight");
    app.add_option("--w-giou", shared.weights.giou, "GIoU matching weight");

    CalibrateOptions calibrate_opts;
    CLI::App* calibrate = app.add_subcommand("calibrate", "fit a fisheye model");
    calibrate->add_option("--input", calibrate_opts.input, "correspondence file")->required();
    calibrate->add_option("--output", calibrate_opts.output, "calibration file")->required();
    calibrate->add_option("--focal-guess", calibrate_opts.focal_guess, "initial focal length");
    calibrate->add_option("--pin-principal", calibrate_opts.pin_principal,
                          "fix the principal point to u0 v0")
        ->expected(2);
    calibrate->add_option("--max-iterations", calibrate_opts.max_iterations,
                          "solver iteration cap");

    LocalizeOptions localize_opts;
    CLI::App* localize = app.add_subcommand("localize", "project detections to the floor");
    localize->add_option("--predictions", localize_opts.predictions, "prediction file")
        ->required();
    localize->add_option("--calibration", localize_opts.calibration, "calibration file")
        ->required();
    localize->add_option("--output", localize_opts.output, "localization output file")
        ->required();

    EvaluateOptions evaluate_opts;
    CLI::App* evaluate = app.add_subcommand("evaluate", "detection and localization metrics");
    evaluate->add_option("--predictions", evaluate_opts.predictions, "prediction file")
        ->required();
    evaluate->add_option("--annotations", evaluate_opts.annotations, "annotation file")
        ->required();
    evaluate->add_option("--calibration", evaluate_opts.calibration,
                         "calibration file (needed for positional error)");
    evaluate->add_option("--output", evaluate_opts.output, "report path (default stdout)");
    evaluate->add_flag("--no-pe", evaluate_opts.no_pe, "skip positional error");

    SimulateOptions simulate_opts;
    CLI::App* simulate = app.add_subcommand("simulate", "generate synthetic scenes");
    simulate->add_option("--output-dir", simulate_opts.out_dir, "output directory")
        ->required();
    simulate->add_option("--scenes", simulate_opts.scenes, "number of scenes");
    simulate->add_option("--persons", simulate_opts.persons, "persons per scene");
    simulate->add_option("--altitude", simulate_opts.altitude, "camera altitude (m)");
    simulate->add_option("--min-dist", simulate_opts.min_distance, "placement annulus inner radius (m)");
    simulate->add_option("--max-dist", simulate_opts.max_distance, "placement annulus outer radius (m)");
    simulate->add_option("--height-range", simulate_opts.height_range, "body height range (m)")
        ->expected(2);
    simulate->add_option("--radius-range", simulate_opts.radius_range, "body radius range (m)")
        ->expected(2);
    simulate->add_option("--image-side", simulate_opts.image_side, "image side length (px)");
    simulate->add_option("--split", simulate_opts.split, "split tag for the annotations");
    simulate->add_flag("--no-separation", simulate_opts.no_separation,
                       "allow overlapping body discs");
    simulate->add_flag("--perturb", simulate_opts.perturb, "emit perturbed predictions");
    simulate->add_option("--center-sigma", simulate_opts.center_sigma, "centre jitter (px)");
    simulate->add_option("--size-sigma", simulate_opts.size_sigma, "size jitter (px)");
    simulate->add_option("--miss-rate", simulate_opts.miss_rate, "miss probability");
    simulate->add_option("--fp-rate", simulate_opts.fp_rate, "false-positive rate");

    EquiCheckOptions equi_opts;
    CLI::App* equi = app.add_subcommand("equi-check", "equivariance residual report");
    equi->add_option("--predictions", equi_opts.predictions, "replay prediction file")
        ->required();
    equi->add_option("--annotations", equi_opts.annotations, "annotation file")->required();
    equi->add_option("--calibration", equi_opts.calibration, "calibration file (principal point)");
    equi->add_option("--output", equi_opts.output, "report path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        apply_config(shared, app);
        if (shared.threads == 0) shared.threads = 1;
        if (calibrate->parsed()) return run_calibrate(calibrate_opts);
        if (localize->parsed()) return run_localize(localize_opts, shared);
        if (evaluate->parsed()) return run_evaluate(evaluate_opts, shared);
        if (simulate->parsed()) return run_simulate(simulate_opts, shared);
        if (equi->parsed()) return run_equi_check(equi_opts, shared);
        std::cerr << "error: no subcommand selected\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
}
