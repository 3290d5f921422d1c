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

// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.
//
//   proctor_acceptance [WORK_DIR]

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <opencv2/core.hpp>

#include "json.hpp"
#include "proctor/analyzer.hpp"
#include "proctor/dataset.hpp"
#include "proctor/ocr.hpp"
#include "proctor/pipeline.hpp"
#include "proctor/recognizer.hpp"
#include "proctor/synth.hpp"

namespace fs = std::filesystem;
using namespace proctor;
using nlohmann::json;

namespace {

int failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
    std::cout << (ok ? "PASS  " : "FAIL  ") << std::left << std::setw(22) << name << ' ' << detail << std::endl;
    failures += ok ? 0 : 1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string fmt(double v, int digits = 3) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

/// Renders `script` into dir unless an identical script was rendered there before.
synth::SynthOutputs render_cached(const synth::SessionScript& script, const fs::path& dir) {
    const auto stamp = dir / "script.json";
    if (fs::exists(stamp) && slurp(stamp) == script.to_json() && fs::exists(dir / "video.mp4")) {
        return {dir / "video.mp4", dir / "ground_truth.json", dir / "roster.csv", script.frame_count()};
    }
    auto out = synth::generate_video(script, dir);
    std::ofstream(stamp, std::ios::binary) << script.to_json();
    return out;
}

PipelineConfig base_config(const fs::path& work) {
    PipelineConfig c;
    c.strip = {0.0, 0.82, 0.75, 0.18};  // the synthetic label box
    c.paths.dataset_root = (work / "dataset").string();
    c.paths.model = (work / "model" / "classifier").string();
    c.paths.out_dir = (work / "out").string();
    return c;
}

/// Ground-truth absent windows per student: a window is absent when the face
/// is visible in at most presence_min_count of its sampled seconds.
std::map<std::string, std::vector<bool>> truth_absence(const synth::SessionScript& s, const AnalysisConfig& a) {
    const int nw = window_count(s.duration_s, a.window_s);
    std::map<std::string, std::vector<int>> counts;
    for (const auto& p : s.participants) {
        counts[p.name].assign(static_cast<std::size_t>(nw), 0);
    }
    const auto seconds = static_cast<std::int64_t>(std::ceil(s.duration_s));
    for (std::int64_t sec = 0; sec < seconds; ++sec) {
        const auto f = static_cast<std::int64_t>(std::ceil(sec * s.fps - 1e-9));
        for (const auto& t : synth::frame_truth(s, f)) {
            if (t.face_present) {
                ++counts[t.name][static_cast<std::size_t>(sec / a.window_s)];
            }
        }
    }
    std::map<std::string, std::vector<bool>> out;
    for (const auto& [name, c] : counts) {
        for (int v : c) {
            out[name].push_back(v <= a.presence_min_count);
        }
    }
    return out;
}

struct E2E {
    bool ran = false;
    int exit_code = -1;
    double seconds = 0.0;
};

E2E run_e2e(const fs::path& work, const synth::SynthOutputs& train, const synth::SynthOutputs& exam) {
    auto cfg = base_config(work);
    cfg.paths.training_video = train.video.string();
    cfg.paths.exam_video = exam.video.string();
    cfg.paths.roster = train.roster.string();
    for (const auto& p : {work / "dataset", work / "model", work / "out"}) {
        fs::remove_all(p);
    }
    std::ofstream log(work / "all.log");
    const auto t0 = std::chrono::steady_clock::now();
    E2E r;
    r.exit_code = run_subcommand("all", cfg, log);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.ran = true;
    return r;
}

void check_e2e(const fs::path& work, const E2E& r, const Roster& roster) {
    std::set<std::string> classes;
    std::string strays;
    bool reported = false;
    if (r.exit_code == 0) {
        const auto ds = load_dataset(work / "dataset");
        const auto clf = Classifier::load(work / "model" / "classifier");
        for (const auto& [name, samples] : ds.classes) {
            classes.insert(name);
        }
        for (const auto& c : clf.class_names()) {
            classes.insert(c);
        }
        for (const auto& c : classes) {
            if (!roster.contains(c)) {
                strays += " '" + c + "'";
            }
        }
        reported = fs::exists(work / "out" / "report" / "summary.json");
    }
    const bool ok = r.exit_code == 0 && classes.size() >= 9 && strays.empty() && reported && r.seconds <= 900.0;
    report("e2e_synthetic_run", ok,
           "exit=" + std::to_string(r.exit_code) + " classes=" + std::to_string(classes.size()) + "/" +
               std::to_string(roster.size()) + " non_roster=" + (strays.empty() ? "none" : strays) +
               " report=" + (reported ? "yes" : "no") + " runtime_s=" + fmt(r.seconds, 1) +
               " (need >=9 classes, <=900 s)");
}

void check_absence(const fs::path& work, const synth::SessionScript& exam_script, const Roster& roster) {
    const auto cfg = base_config(work).analysis_config();
    std::ifstream ev(work / "out" / "events.csv");
    const auto events = read_events_csv(ev);
    const auto windows = window_presence(events, roster, cfg, exam_script.duration_s);
    const auto intervals = absence_intervals(windows, cfg, exam_script.duration_s);
    const auto truth = truth_absence(exam_script, cfg);
    int tp = 0, fp = 0, fn = 0;
    const int nw = window_count(exam_script.duration_s, cfg.window_s);
    for (const auto& name : roster.names()) {
        for (int w = 0; w < nw; ++w) {
            const double start = double(w) * cfg.window_s;
            bool reported = false;
            for (const auto& iv : intervals) {
                reported = reported || (iv.student == name && iv.start_s <= start && start < iv.end_s);
            }
            const bool actual = truth.at(name)[static_cast<std::size_t>(w)];
            tp += reported && actual;
            fp += reported && !actual;
            fn += !reported && actual;
        }
    }
    const double precision = tp + fp == 0 ? 0.0 : double(tp) / (tp + fp);
    const double recall = tp + fn == 0 ? 0.0 : double(tp) / (tp + fn);
    report("absence_recovery", precision >= 0.9 && recall >= 0.9,
           "precision=" + fmt(precision) + " recall=" + fmt(recall) + " tp=" + std::to_string(tp) + " fp=" +
               std::to_string(fp) + " fn=" + std::to_string(fn) + " (need >=0.9 each)");
}

void check_accuracy(const fs::path& work) {
    double acc = -1.0;
    int epochs = 0;
    const auto path = work / "model" / "classifier.run_manifest.json";
    if (fs::exists(path)) {
        const auto m = json::parse(slurp(path));
        acc = m.value("test_accuracy", -1.0);
        epochs = base_config(work).train_config().epochs;
    }
    report("recognition_proxy", acc >= 0.95,
           "test_accuracy=" + fmt(acc, 4) + " epochs=" + std::to_string(epochs) + " (need >=0.95)");
}

void check_caching(const fs::path& work, const synth::SessionScript& exam_script) {
    // Full exam: calls must equal the face-bearing (second, cell) pairs.
    std::ifstream ev(work / "out" / "events.csv");
    const auto events = read_events_csv(ev);
    std::int64_t faces = 0;
    for (const auto& e : events) {
        faces += e.face_found ? 1 : 0;
    }
    const auto info = json::parse(slurp(work / "out" / "analysis.json"));
    const std::int64_t calls = info["recognizer_calls"];
    const double bound = exam_script.duration_s * 25;

    // Per-frame ratio on a ten-second excerpt of the same session.
    auto clip = exam_script;
    clip.duration_s = 10.0;
    for (auto& p : clip.participants) {
        p.absences.clear();
    }
    clip.participants[0].absences = {{3.0, 6.0}};
    const auto clip_out = render_cached(clip, work / "clip");
    const auto clf = Classifier::load(work / "model" / "classifier");
    const auto cfg = base_config(work);
    AnalyzeOptions opts;
    opts.analysis = cfg.analysis_config();
    const auto detectors = detector_factory(cfg.resolved_detector());
    const auto per_second = analyze_video(clip_out.video, clf, detectors, opts);
    opts.mode = SamplingMode::per_frame;
    const auto per_frame = analyze_video(clip_out.video, clf, detectors, opts);
    const double ratio =
        per_second.recognizer_calls == 0 ? 0.0 : double(per_frame.recognizer_calls) / double(per_second.recognizer_calls);

    const bool ok = calls == faces && calls <= bound && std::abs(ratio - 30.0) <= 1.5;
    report("caching_contract", ok,
           "calls=" + std::to_string(calls) + " face_pairs=" + std::to_string(faces) + " bound=" + fmt(bound, 0) +
               " per_frame_ratio=" + fmt(ratio) + " (need equal, <=bound, 30+-5%)");
}

void check_rules() {
    std::vector<std::string> broken;
    const Roster roster(std::vector<StudentRecord>{{"1", "A"}});
    AnalysisConfig a;
    auto window_with = [&](int n) {
        std::vector<RecognitionEvent> ev;
        for (int s = 0; s < n; ++s) {
            ev.push_back({s, {0, 0}, true, "A", 0.9, true});
        }
        return window_presence(ev, roster, a, 30)[0].present;
    };
    if (window_with(10) || !window_with(11)) {
        broken.push_back("presence");
    }
    LabeledDataset ds;
    ds.classes["small"].resize(99);
    ds.classes["ok"].resize(100);
    const auto pruned = prune_small_classes(ds, 100);
    if (pruned.classes.size() != 1 || pruned.classes.count("ok") != 1) {
        broken.push_back("prune");
    }
    const auto sz = split_sizes(10);
    if (sz.train != 7 || sz.val != 2 || sz.test != 1) {
        broken.push_back("split");
    }
    const cv::Mat m = (cv::Mat_<uchar>(1, 5) << 0, 49, 50, 51, 255);
    const cv::Mat b = binarize(m, 50);
    const cv::Mat expect = (cv::Mat_<uchar>(1, 5) << 0, 0, 50, 51, 255);
    if (cv::countNonZero(b != expect) != 0) {
        broken.push_back("binarize");
    }
    report("rule_fidelity", broken.empty(),
           broken.empty() ? "presence >10, prune at 100, split 7/2/1, binarize table"
                          : "broken: " + [&] {
                                 std::string s;
                                 for (const auto& x : broken) {
                                     s += x + " ";
                                 }
                                 return s;
                             }());
}

std::vector<PresenceWindow> naive_windows(const std::vector<RecognitionEvent>& events, const Roster& roster,
                                          const AnalysisConfig& cfg, double duration) {
    const int nw = window_count(duration, cfg.window_s);
    std::vector<PresenceWindow> out;
    for (const auto& name : roster.names()) {
        for (int w = 0; w < nw; ++w) {
            std::set<std::int64_t> secs;
            for (const auto& e : events) {
                if (e.accepted && e.predicted == name && e.second / cfg.window_s == w) {
                    secs.insert(e.second);
                }
            }
            const int c = static_cast<int>(secs.size());
            out.push_back({name, w, c, c > cfg.presence_min_count});
        }
    }
    return out;
}

void check_properties(const fs::path& work) {
    std::mt19937_64 g(2026);
    auto uni = [&g](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(g); };
    std::vector<std::string> broken;

    // Grid partition exactness.
    bool grid_ok = true;
    for (int t = 0; t < 300 && grid_ok; ++t) {
        const int rows = uni(1, 9), cols = uni(1, 9);
        const GridLayout l(rows, cols, uni(cols, 2000), uni(rows, 1200));
        cv::Mat cover(l.frame_h(), l.frame_w(), CV_32S, cv::Scalar(0));
        for (const auto& r : partition_frame(l)) {
            cover(cv::Rect(r.x, r.y, r.w, r.h)) += 1;
        }
        double lo = 0, hi = 0;
        cv::minMaxLoc(cover, &lo, &hi);
        grid_ok = lo == 1 && hi == 1;
    }
    if (!grid_ok) broken.push_back("grid");

    // Binarize idempotence.
    bool bin_ok = true;
    for (int t = 0; t < 200 && bin_ok; ++t) {
        cv::Mat img(uni(1, 30), uni(1, 60), CV_8UC1);
        cv::randu(img, 0, 256);
        const int th = uni(0, 255);
        const auto once = binarize(img, th);
        bin_ok = cv::countNonZero(binarize(once, th) != once) == 0;
    }
    if (!bin_ok) broken.push_back("binarize");

    // Softmax normalization and shift-argmax invariance through a stub model.
    bool soft_ok = true;
    for (int t = 0; t < 200 && soft_ok; ++t) {
        const int k = uni(1, 12);
        std::vector<double> logits;
        std::vector<std::string> names;
        for (int i = 0; i < k; ++i) {
            logits.push_back(uni(-4000, 4000) / 100.0);
            names.push_back("C" + std::to_string(i));
        }
        const double shift = uni(-100000, 100000) / 10.0;
        auto shifted = logits;
        for (auto& v : shifted) v += shift;
        const auto a = Classifier::from_logit_fn(names, [&](const cv::Mat&) { return logits; })
                           .predict(cv::Mat(8, 8, CV_8UC3, cv::Scalar::all(0)));
        const auto b = Classifier::from_logit_fn(names, [&](const cv::Mat&) { return shifted; })
                           .predict(cv::Mat(8, 8, CV_8UC3, cv::Scalar::all(0)));
        double sum = 0.0;
        for (double p : a.probs) sum += p;
        soft_ok = std::abs(sum - 1.0) < 1e-9 && a.argmax_index == b.argmax_index;
    }
    if (!soft_ok) broken.push_back("softmax");

    // Streaming windows against the brute-force oracle, and interval algebra.
    const Roster roster({{"1", "A"}, {"2", "B"}, {"3", "C"}});
    const std::vector<std::string> labels = {"A", "B", "C", "X"};
    bool stream_ok = true, algebra_ok = true;
    for (int t = 0; t < 1000; ++t) {
        AnalysisConfig cfg;
        cfg.window_s = uni(1, 40);
        cfg.presence_min_count = uni(0, 12);
        const double duration = uni(1, 300) + uni(0, 9) / 10.0;
        std::vector<RecognitionEvent> ev;
        std::int64_t sec = 0;
        for (int i = uni(0, 250); i > 0; --i) {
            sec += uni(0, 3);
            ev.push_back({sec, {0, uni(0, 24)}, true, labels[static_cast<std::size_t>(uni(0, 3))], 0.9, uni(0, 4) != 0});
        }
        const auto w = window_presence(ev, roster, cfg, duration);
        stream_ok = stream_ok && w == naive_windows(ev, roster, cfg, duration);

        const auto iv = absence_intervals(w, cfg, duration);
        double covered = 0.0, expect = 0.0;
        for (const auto& x : w) {
            if (!x.present) {
                expect += std::min(duration, double(x.window_idx + 1) * cfg.window_s) - double(x.window_idx) * cfg.window_s;
            }
        }
        for (std::size_t i = 0; i < iv.size(); ++i) {
            covered += iv[i].end_s - iv[i].start_s;
            if (i > 0 && iv[i].student == iv[i - 1].student && iv[i].start_s <= iv[i - 1].end_s) {
                algebra_ok = false;
            }
        }
        algebra_ok = algebra_ok && std::abs(covered - expect) < 1e-6;
    }
    if (!stream_ok) broken.push_back("streaming");
    if (!algebra_ok) broken.push_back("absence-algebra");

    // Worker-count independence of dataset builds.
    synth::SessionScript s;
    s.duration_s = 4.0;
    s.width = 512;
    s.height = 288;
    s.rows = 2;
    s.cols = 2;
    s.seed = 3;
    for (const char* n : {"CHAN TAI MAN", "LI MING", "WONG SIU FAI"}) {
        synth::Participant p;
        p.name = n;
        s.participants.push_back(p);
    }
    const auto small = render_cached(s, work / "workers");
    auto bc = base_config(work);
    bc.rows = 2;
    bc.cols = 2;
    auto dcfg = bc.dataset_build_config();
    const Roster small_roster = Roster::load_csv(small.roster);
    auto signature = [&](int workers) {
        dcfg.worker_count = workers;
        const auto r = build_dataset(small.video, small_roster, dcfg);
        std::ostringstream os;
        for (const auto& [name, samples] : r.dataset.classes) {
            for (const auto& x : samples) {
                os << name << ':' << x.frame_idx << ':' << x.cell.row << x.cell.col << ':' << cv::sum(x.image)[0] << ';';
            }
        }
        return os.str();
    };
    const auto one = signature(1);
    if (one.empty() || one != signature(2) || one != signature(3)) broken.push_back("workers");

    std::string detail = "grid, binarize, softmax, absence algebra, streaming oracle x1000, dataset workers";
    if (!broken.empty()) {
        detail = "broken:";
        for (const auto& b : broken) detail += " " + b;
    }
    report("property_suites", broken.empty(), detail);
}

}  // namespace

int main(int argc, char** argv) {
    const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::current_path() / "acceptance_work";
    fs::create_directories(work);
    std::cout << "acceptance work dir: " << work.string() << std::endl;
    try {
        check_rules();
        check_properties(work);

        const auto train_script = demo_session(false);
        const auto exam_script = demo_session(true);
        const auto train = render_cached(train_script, work / "train_video");
        const auto exam = render_cached(exam_script, work / "exam_video");
        const Roster roster = Roster::load_csv(train.roster);

        const auto e2e = run_e2e(work, train, exam);
        check_e2e(work, e2e, roster);
        if (e2e.exit_code != 0) {
            std::cout << "see " << (work / "all.log").string() << std::endl;
            report("absence_recovery", false, "pipeline did not complete");
            report("recognition_proxy", false, "pipeline did not complete");
            report("caching_contract", false, "pipeline did not complete");
        } else {
            check_absence(work, exam_script, roster);
            check_accuracy(work);
            check_caching(work, exam_script);
        }
    } catch (const std::exception& e) {
        std::cout << "FAIL  acceptance aborted: " << e.what() << std::endl;
        return 1;
    }
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
