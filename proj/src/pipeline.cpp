/**
 * Copyright 2026 The proctorlens Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "proctor/pipeline.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include <opencv2/core/version.hpp>

#include "json.hpp"
#include "proctor/error.hpp"
#include "proctor/hash.hpp"
#include "proctor/ocr.hpp"
#include "proctor/report.hpp"

namespace proctor {
namespace {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

fs::path required(const std::string& value, const std::string& key) {
    if (value.empty()) {
        throw ConfigError(key + " is not set");
    }
    return value;
}

fs::path existing_file(const std::string& value, const std::string& key) {
    const fs::path p = required(value, key);
    std::error_code ec;
    if (!fs::is_regular_file(p, ec)) {
        throw InputError(key + ": no such file " + p.string());
    }
    return p;
}

void write_text(const fs::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream f(path, std::ios::binary);
    f << text;
    if (!f) {
        throw IoError("cannot write " + path.string());
    }
}

/// Run manifest: everything needed to repeat a stage.
class Manifest {
public:
    Manifest(std::string_view subcommand, const PipelineConfig& cfg) : started_(utc_now()) {
        const auto ini = to_ini(cfg);
        doc_["tool"] = "proctor";
        doc_["version"] = kProctorVersion;
        doc_["subcommand"] = subcommand;
        doc_["config_sha256"] = sha256_hex(ini);
        doc_["config"] = ini;
        const auto det = cfg.resolved_detector();
        doc_["versions"] = {{"opencv", CV_VERSION},
                            {"detector_kind", std::string(to_string(det.kind))},
                            {"detector_model", det.model_artifact.filename().string()},
                            {"ocr_engine", cfg.ocr.engine}};
        doc_["inputs"] = ordered_json::object();
    }

    void input(const std::string& key, const fs::path& path) {
        doc_["inputs"][key] = {{"path", path.string()}, {"sha256", sha256_file(path)}};
    }
    void set(const std::string& key, ordered_json value) { doc_[key] = std::move(value); }
    void version(const std::string& key, const std::string& value) { doc_["versions"][key] = value; }

    std::string text() const {
        ordered_json d = doc_;
        d["started_at"] = started_;
        d["finished_at"] = utc_now();
        return d.dump(2) + "\n";
    }
    fs::path write(const fs::path& path) const {
        write_text(path, text());
        return path;
    }

private:
    ordered_json doc_;
    std::string started_;
};

ordered_json stats_json(const BuildStats& s) {
    return {{"frames_scanned", s.frames_scanned},
            {"faces_detected", s.faces_detected},
            {"ocr_calls", s.ocr_calls},
            {"ocr_failures", s.ocr_failures},
            {"classes_before_prune", s.classes_before_prune},
            {"classes_after_prune", s.classes_after_prune},
            {"merges_substring", s.merges_substring},
            {"merges_fuzzy", s.merges_fuzzy},
            {"dropped_non_roster", s.dropped_non_roster},
            {"dropped_ambiguous", s.dropped_ambiguous}};
}

std::string engine_version(const std::string& name) {
    try {
        const auto e = make_ocr_engine(name);
        return e->name() + " " + e->version();
    } catch (const Error&) {
        return "unavailable";
    }
}

synth::Participant person(std::string name, std::vector<synth::Span> absences = {}) {
    synth::Participant p;
    p.name = std::move(name);
    p.absences = std::move(absences);
    return p;
}

}  // namespace

synth::SessionScript demo_session(bool with_absences) {
    synth::SessionScript s;
    s.duration_s = 180.0;
    s.fps = 30.0;
    s.seed = 11;
    s.participants = {person("CHAN TAI MAN", {{30.0, 90.0}, {120.0, 180.0}}),
                      person("LI MING"),
                      person("WONG SIU FAI"),
                      person("HO KA YAN", {{45.0, 150.0}}),
                      person("LAM CHI KEUNG"),
                      person("NG WING KIT"),
                      person("LEE SZE WAI"),
                      person("MA ON YEE"),
                      person("CHOW KIN"),
                      person("YIP HOI SHAN")};
    if (!with_absences) {
        s.seed = 5;
        for (auto& p : s.participants) {
            p.absences.clear();
        }
    }
    return s;
}

DatasetStageResult run_build_dataset(const PipelineConfig& cfg, std::ostream& log) {
    const auto video = existing_file(cfg.paths.training_video, "paths.training_video");
    const auto roster_path = existing_file(cfg.paths.roster, "paths.roster");
    const auto root = required(cfg.paths.dataset_root, "paths.dataset_root");
    Manifest m("build-dataset", cfg);
    m.input("training_video", video);
    m.input("roster", roster_path);
    m.version("ocr_engine", engine_version(cfg.ocr.engine));
    const Roster roster = Roster::load_csv(roster_path);

    log << "build-dataset: scanning " << video.string() << '\n';
    auto built = build_dataset(video, roster, cfg.dataset_build_config());
    DatasetStageResult out;
    out.stats = built.stats;
    auto pruned = prune_small_classes(std::move(built.dataset), cfg.min_class_size);
    out.stats.classes_after_prune = static_cast<std::int64_t>(pruned.classes.size());
    auto rec = reconcile_with_roster(std::move(pruned), roster, cfg.fuzzy_max_dist);
    out.merges = rec.report;
    for (const auto& r : rec.report) {
        out.stats.merges_substring += r.kind == MatchKind::substring ? 1 : 0;
        out.stats.merges_fuzzy += r.kind == MatchKind::fuzzy ? 1 : 0;
        out.stats.dropped_non_roster += r.kind == MatchKind::unmatched ? 1 : 0;
        out.stats.dropped_ambiguous += r.kind == MatchKind::ambiguous ? 1 : 0;
    }
    log << "build-dataset: " << out.stats.faces_detected << " faces, " << out.stats.classes_before_prune
        << " raw classes, " << rec.dataset.classes.size() << " roster classes\n";
    validate_dataset(rec.dataset, roster, cfg.min_class_frac, cfg.min_class_size);

    ordered_json merges = ordered_json::array();
    for (const auto& r : rec.report) {
        merges.push_back({{"class", r.from},
                          {"kind", std::string(to_string(r.kind))},
                          {"into", r.to},
                          {"distance", r.distance},
                          {"samples", r.samples}});
    }
    ordered_json extra{{"build_stats", stats_json(out.stats)}, {"reconciliation", merges}};
    write_dataset(rec.dataset, root, extra.dump());
    for (const auto& [name, samples] : rec.dataset.classes) {
        out.classes.push_back(name);
    }
    m.set("build_stats", stats_json(out.stats));
    m.set("classes", out.classes);
    out.manifest = m.write(root / "run_manifest.json");
    return out;
}

TrainStageResult run_train(const PipelineConfig& cfg, std::ostream& log) {
    const auto root = required(cfg.paths.dataset_root, "paths.dataset_root");
    const auto stem = required(cfg.paths.model, "paths.model");
    std::error_code ec;
    if (!fs::is_regular_file(root / "manifest.json", ec)) {
        throw InputError("paths.dataset_root: no dataset at " + root.string());
    }
    Manifest m("train", cfg);
    m.input("dataset_manifest", root / "manifest.json");
    const auto ds = load_dataset(root);
    const auto split = split_dataset(ds, cfg.seed, cfg.train_frac, cfg.val_frac);
    log << "train: " << ds.classes.size() << " classes, " << split.train.size() << "/" << split.val.size() << "/"
        << split.test.size() << " samples\n";
    TrainHooks hooks;
    hooks.on_epoch = [&log](const EpochStats& e) {
        log << "train: epoch " << e.epoch << " loss " << e.train_loss << " val_acc " << e.val_accuracy << '\n';
    };
    auto result = train(ds, split, cfg.train_config(), hooks);
    if (stem.has_parent_path()) {
        fs::create_directories(stem.parent_path(), ec);
    }
    result.classifier.save(stem);
    log << "train: test accuracy " << result.test_accuracy << '\n';
    TrainStageResult out;
    out.test_accuracy = result.test_accuracy;
    out.classes = result.classifier.class_names();
    m.set("test_accuracy", result.test_accuracy);
    m.set("model_sha256", sha256_file(fs::path(stem.string() + ".model")));
    out.manifest = m.write(fs::path(stem.string() + ".run_manifest.json"));
    return out;
}

AnalyzeStageResult run_analyze(const PipelineConfig& cfg, std::ostream& log) {
    const auto video = existing_file(cfg.paths.exam_video, "paths.exam_video");
    const auto roster_path = existing_file(cfg.paths.roster, "paths.roster");
    const auto stem = required(cfg.paths.model, "paths.model");
    const auto out_dir = required(cfg.paths.out_dir, "paths.out_dir");
    Manifest m("analyze", cfg);
    m.input("exam_video", video);
    m.input("roster", roster_path);
    const Roster roster = Roster::load_csv(roster_path);
    const auto clf = Classifier::load(stem);
    m.input("model", fs::path(stem.string() + ".model"));
    for (const auto& c : clf.class_names()) {
        if (!roster.contains(c)) {
            throw InputError("classifier class '" + c + "' is not on the roster");
        }
    }
    AnalyzeOptions opts;
    opts.analysis = cfg.analysis_config();
    opts.worker_count = cfg.analysis_workers;
    opts.crop_margin = cfg.analysis_crop_margin;
    log << "analyze: " << video.string() << '\n';
    AnalyzeStageResult out;
    out.analysis = analyze_video(video, clf, detector_factory(cfg.resolved_detector()), opts);
    const auto& a = out.analysis;
    log << "analyze: " << a.frames_processed << " frames, " << a.recognizer_calls << " recognizer calls\n";

    std::ostringstream csv;
    write_events_csv(csv, a.events);
    out.events_csv = out_dir / "events.csv";
    write_text(out.events_csv, csv.str());
    ordered_json info{{"duration_s", a.duration_s},
                      {"fps", a.fps},
                      {"frames_processed", a.frames_processed},
                      {"detector_calls", a.detector_calls},
                      {"recognizer_calls", a.recognizer_calls},
                      {"events", a.events.size()}};
    write_text(out_dir / "analysis.json", info.dump(2) + "\n");
    m.set("analysis", info);
    out.manifest = m.write(out_dir / "run_manifest.analyze.json");
    return out;
}

ReportStageResult run_report(const PipelineConfig& cfg, std::ostream& log) {
    const auto out_dir = required(cfg.paths.out_dir, "paths.out_dir");
    const auto roster_path = existing_file(cfg.paths.roster, "paths.roster");
    const auto events_path = existing_file((out_dir / "events.csv").string(), "events log");
    const auto info_path = existing_file((out_dir / "analysis.json").string(), "analysis summary");
    Manifest m("report", cfg);
    m.input("roster", roster_path);
    m.input("events", events_path);

    ReportInputs in;
    in.roster = Roster::load_csv(roster_path);
    in.analysis = cfg.analysis_config();
    {
        std::ifstream f(events_path);
        in.events = read_events_csv(f);
    }
    {
        std::ifstream f(info_path);
        const auto info = ordered_json::parse(f, nullptr, false);
        if (info.is_discarded() || !info.contains("duration_s")) {
            throw InputError("malformed " + info_path.string());
        }
        in.duration_s = info["duration_s"].get<double>();
    }
    ordered_json run = ordered_json::parse(m.text());
    run.erase("started_at");
    run.erase("finished_at");
    in.run_manifest_json = run.dump();
    ReportStageResult out;
    out.bundle = render_report(in, out_dir / "report");
    log << "report: " << out.bundle.summary_json.string() << '\n';
    out.manifest = m.write(out_dir / "run_manifest.report.json");
    return out;
}

synth::SynthOutputs run_synth(const PipelineConfig& cfg, std::ostream& log) {
    const auto out_dir = required(cfg.paths.out_dir, "paths.out_dir");
    auto script = cfg.paths.synth_script.empty()
                      ? demo_session(cfg.synth_preset == "exam")
                      : synth::SessionScript::load(existing_file(cfg.paths.synth_script, "paths.synth_script"));
    script.rows = cfg.rows;
    script.cols = cfg.cols;
    Manifest m("synth", cfg);
    if (!cfg.paths.synth_script.empty()) {
        m.input("script", cfg.paths.synth_script);
    }
    log << "synth: rendering " << script.frame_count() << " frames\n";
    const auto out = synth::generate_video(script, out_dir);
    write_text(out_dir / "script.json", script.to_json() + "\n");
    m.set("script", ordered_json::parse(script.to_json()));
    m.write(out_dir / "run_manifest.synth.json");
    return out;
}

int run_subcommand(std::string_view sub, const PipelineConfig& cfg, std::ostream& log) {
    try {
        cfg.validate();
        if (sub == "build-dataset") {
            run_build_dataset(cfg, log);
        } else if (sub == "train") {
            run_train(cfg, log);
        } else if (sub == "analyze") {
            run_analyze(cfg, log);
        } else if (sub == "report") {
            run_report(cfg, log);
        } else if (sub == "synth") {
            run_synth(cfg, log);
        } else if (sub == "all") {
            run_build_dataset(cfg, log);
            run_train(cfg, log);
            run_analyze(cfg, log);
            run_report(cfg, log);
        } else {
            throw ConfigError("unknown subcommand '" + std::string(sub) + "'");
        }
        return 0;
    } catch (const Error& e) {
        log << "error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const cv::Exception& e) {
        log << "error: " << e.what() << '\n';
        return static_cast<int>(ErrorClass::backend);
    }
}

}  // namespace proctor
