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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <set>
#include <sstream>

#include "proctor/analyzer.hpp"
#include "proctor/error.hpp"
#include "support.hpp"

using namespace proctor;

namespace {

const Roster kRoster({{"1", "A"}, {"2", "B"}, {"3", "C"}});

RecognitionEvent accepted(std::int64_t second, const std::string& who, int col = 0) {
    RecognitionEvent e;
    e.second = second;
    e.cell = {0, col};
    e.face_found = true;
    e.predicted = who;
    e.argmax_prob = 0.9;
    e.accepted = true;
    return e;
}

AnalysisConfig cfg30() {
    AnalysisConfig c;
    c.window_s = 30;
    c.presence_min_count = 10;
    return c;
}

std::vector<PresenceWindow> windows_from_flags(const std::string& student, const std::vector<bool>& present) {
    std::vector<PresenceWindow> w;
    for (std::size_t i = 0; i < present.size(); ++i) {
        w.push_back({student, static_cast<int>(i), present[i] ? 11 : 0, present[i]});
    }
    return w;
}

/// Reference implementation: count distinct accepted seconds per student
/// and window by brute force.
std::vector<PresenceWindow> naive_windows(const std::vector<RecognitionEvent>& events, const Roster& roster,
                                          const AnalysisConfig& cfg, double duration) {
    const int nw = window_count(duration, cfg.window_s);
    std::vector<PresenceWindow> out;
    for (const auto& name : roster.names()) {
        for (int w = 0; w < nw; ++w) {
            std::set<std::int64_t> seconds;
            for (const auto& e : events) {
                if (e.accepted && e.predicted == name && e.second >= std::int64_t{w} * cfg.window_s &&
                    e.second < std::int64_t{w + 1} * cfg.window_s) {
                    seconds.insert(e.second);
                }
            }
            const int c = static_cast<int>(seconds.size());
            out.push_back({name, w, c, c > cfg.presence_min_count});
        }
    }
    return out;
}

}  // namespace

TEST_CASE("presence rule is strictly greater than the minimum count") {
    std::vector<RecognitionEvent> ten, eleven, twelve;
    for (int s = 0; s < 12; ++s) {
        if (s < 10) {
            ten.push_back(accepted(s, "A"));
        }
        if (s < 11) {
            eleven.push_back(accepted(s, "A"));
        }
        twelve.push_back(accepted(s, "A"));
    }
    CHECK_FALSE(window_presence(ten, kRoster, cfg30(), 30)[0].present);
    CHECK(window_presence(ten, kRoster, cfg30(), 30)[0].count == 10);
    CHECK(window_presence(eleven, kRoster, cfg30(), 30)[0].present);
    CHECK(window_presence(twelve, kRoster, cfg30(), 30)[0].present);
}

TEST_CASE("no events: every student absent in every window") {
    const auto w = window_presence({}, kRoster, cfg30(), 95);
    CHECK(w.size() == 3 * 4);
    for (const auto& x : w) {
        CHECK_FALSE(x.present);
        CHECK(x.count == 0);
    }
}

TEST_CASE("rejected events and repeated seconds do not count") {
    std::vector<RecognitionEvent> ev;
    for (int s = 0; s < 20; ++s) {
        ev.push_back(accepted(s, "B", 0));
        ev.push_back(accepted(s, "B", 1));  // same student seen in two cells
        auto r = accepted(s, "C", 2);
        r.accepted = false;
        ev.push_back(r);
    }
    const auto w = window_presence(ev, kRoster, cfg30(), 30);
    CHECK(w[1].count == 20);
    CHECK(w[2].count == 0);
}

TEST_CASE("property: streaming windows equal the brute-force oracle on 1000 random logs") {
    auto g = testsupport::rng(1234);
    const Roster roster({{"1", "A"}, {"2", "B"}, {"3", "C"}, {"4", "D"}});
    const std::vector<std::string> labels = {"A", "B", "C", "D", "ZED"};
    for (int trial = 0; trial < 1000; ++trial) {
        AnalysisConfig cfg;
        cfg.window_s = testsupport::uniform(g, 1, 40);
        cfg.presence_min_count = testsupport::uniform(g, 0, 12);
        const double duration = testsupport::uniform(g, 1, 400) + testsupport::uniform(g, 0, 9) / 10.0;
        std::vector<RecognitionEvent> ev;
        const int n = testsupport::uniform(g, 0, 300);
        std::int64_t second = 0;
        for (int i = 0; i < n; ++i) {
            second += testsupport::uniform(g, 0, 3);
            auto e = accepted(second, labels[static_cast<std::size_t>(testsupport::uniform(g, 0, 4))],
                              testsupport::uniform(g, 0, 24));
            e.accepted = testsupport::uniform(g, 0, 4) != 0;
            ev.push_back(e);
        }
        REQUIRE(window_presence(ev, roster, cfg, duration) == naive_windows(ev, roster, cfg, duration));
    }
}

TEST_CASE("unsorted events are rejected") {
    CHECK_THROWS_AS(window_presence({accepted(5, "A"), accepted(4, "A")}, kRoster, cfg30(), 30),
                    std::invalid_argument);
}

TEST_CASE("absence intervals: examples") {
    const auto c = cfg30();
    const auto w = windows_from_flags("A", {true, true, false, false, false, true});
    CHECK(absence_intervals(w, c, 180) == std::vector<AbsenceInterval>{{"A", 60, 150}});
    CHECK(absence_intervals(windows_from_flags("A", {true, true}), c, 60).empty());
    const auto alt = absence_intervals(windows_from_flags("A", {false, true, false, true}), c, 120);
    CHECK(alt == std::vector<AbsenceInterval>{{"A", 0, 30}, {"A", 60, 90}});
    // Final partial window is clipped to the exam length.
    CHECK(absence_intervals(windows_from_flags("A", {true, true, true, false}), c, 100) ==
          std::vector<AbsenceInterval>{{"A", 90, 100}});
}

TEST_CASE("consecutive summary: examples") {
    const auto c = cfg30();
    const auto s1 = consecutive_summary(windows_from_flags("A", {true, false, true, false, false, false}), c, 180);
    CHECK(s1[0].longest_consecutive_absence_s == 90);
    CHECK(s1[0].windows_absent == 4);
    CHECK(s1[0].windows_present == 2);
    CHECK(consecutive_summary(windows_from_flags("A", {true, true, true}), c, 90)[0].longest_consecutive_absence_s ==
          0);
    CHECK(consecutive_summary(windows_from_flags("A", std::vector<bool>(6, false)), c, 180)[0]
              .longest_consecutive_absence_s == 180);
}

TEST_CASE("property: absence-interval algebra") {
    auto g = testsupport::rng(4321);
    for (int trial = 0; trial < 500; ++trial) {
        AnalysisConfig c;
        c.window_s = testsupport::uniform(g, 1, 60);
        const int nw = testsupport::uniform(g, 1, 20);
        // Duration somewhere inside the last window.
        const double duration = (nw - 1) * c.window_s + testsupport::uniform(g, 1, c.window_s * 10) / 10.0;
        REQUIRE(window_count(duration, c.window_s) == nw);
        std::vector<PresenceWindow> all;
        std::map<std::string, std::vector<bool>> flags;
        for (const std::string s : {"A", "B"}) {
            for (int w = 0; w < nw; ++w) {
                flags[s].push_back(testsupport::uniform(g, 0, 1) == 1);
            }
            const auto part = windows_from_flags(s, flags[s]);
            all.insert(all.end(), part.begin(), part.end());
        }
        const auto iv = absence_intervals(all, c, duration);
        const auto summary = consecutive_summary(all, c, duration);
        for (const std::string s : {"A", "B"}) {
            const auto& f = flags[s];
            double covered = 0.0, expect = 0.0, prev_end = -1.0, longest = 0.0, run = 0.0;
            for (int w = 0; w < nw; ++w) {
                const double len = std::min(duration, double(w + 1) * c.window_s) - double(w) * c.window_s;
                if (!f[static_cast<std::size_t>(w)]) {
                    expect += len;
                    run += len;
                    longest = std::max(longest, run);
                } else {
                    run = 0.0;
                }
            }
            for (const auto& x : iv) {
                if (x.student != s) {
                    continue;
                }
                CHECK(x.start_s < x.end_s);
                CHECK(x.start_s > prev_end);  // disjoint and never adjacent
                CHECK(x.end_s <= duration);
                CHECK(std::fmod(x.start_s, c.window_s) == 0.0);
                const int first = static_cast<int>(x.start_s / c.window_s);
                CHECK_FALSE(f[static_cast<std::size_t>(first)]);
                if (first > 0) {
                    CHECK(f[static_cast<std::size_t>(first - 1)]);
                }
                prev_end = x.end_s;
                covered += x.end_s - x.start_s;
            }
            CHECK(covered == doctest::Approx(expect));
            const auto& row = summary[s == "A" ? 0 : 1];
            CHECK(row.windows_present + row.windows_absent == nw);
            CHECK(row.longest_consecutive_absence_s == doctest::Approx(longest));
        }
    }
}

TEST_CASE("window count") {
    CHECK(window_count(180, 30) == 6);
    CHECK(window_count(181, 30) == 7);
    CHECK(window_count(0, 30) == 1);
    CHECK_THROWS(window_count(10, 0));
}

TEST_CASE("event log round trip") {
    std::vector<RecognitionEvent> ev{accepted(0, "LI, \"MING\""), accepted(1, "B", 3)};
    ev.push_back(RecognitionEvent{2, {1, 1}, false, "", 0.0, false});
    ev[1].argmax_prob = 0.123456789012345;
    std::stringstream ss;
    write_events_csv(ss, ev);
    const auto back = read_events_csv(ss);
    CHECK(back == ev);
    std::stringstream bad("nope\n");
    CHECK_THROWS_AS(read_events_csv(bad), InputError);
}

TEST_CASE("analysis of a synthetic recording: caching contract and determinism") {
    testsupport::TempDir dir("analyze");
    auto script = testsupport::small_script(4.0, 3);
    script.participants[1].absences = {{1.0, 3.0}};
    const auto video = synth::generate_video(script, dir / "v");

    std::atomic<std::int64_t> calls{0};
    const auto names = std::vector<std::string>{"CHAN TAI MAN", "LI MING", "WONG SIU FAI"};
    auto clf = Classifier::from_logit_fn(names, [&](const cv::Mat&) {
        ++calls;
        return std::vector<double>{3.0, 0.0, 0.0};
    });
    DetectorSpec spec;
    spec.model_artifact = std::filesystem::path(PROCTOR_MODEL_DIR) / "centerface.onnx";
    AnalyzeOptions opts;
    opts.analysis.rows = 2;
    opts.analysis.cols = 2;

    const auto r = analyze_video(video.video, clf, detector_factory(spec), opts);
    CHECK(r.events.size() == 4 * 4);
    CHECK(r.frames_processed == 4);
    std::int64_t faces = 0;
    for (std::size_t i = 0; i < r.events.size(); ++i) {
        const auto& e = r.events[i];
        CHECK(e.second == static_cast<std::int64_t>(i / 4));
        CHECK(e.cell == cell_from_index(static_cast<int>(i % 4), GridLayout(2, 2, 512, 288)));
        faces += e.face_found ? 1 : 0;
        if (e.cell == CellRef{1, 1}) {
            CHECK_FALSE(e.face_found);  // unoccupied cell
        }
        if (e.cell == CellRef{0, 1}) {
            CHECK(e.face_found == (e.second == 0 || e.second == 3));
        }
        CHECK(e.accepted == e.face_found);
    }
    CHECK(faces == 3 * 4 - 2);
    CHECK(r.recognizer_calls == faces);
    CHECK(calls.load() == faces);
    CHECK(r.recognizer_calls <= 4 * 4);

    opts.worker_count = 2;
    const auto r2 = analyze_video(video.video, clf, detector_factory(spec), opts);
    CHECK(r2.events == r.events);

    opts.worker_count = 1;
    opts.mode = SamplingMode::per_frame;
    const auto pf = analyze_video(video.video, clf, detector_factory(spec), opts);
    CHECK(pf.frames_processed == 120);
    const double ratio = static_cast<double>(pf.recognizer_calls) / static_cast<double>(r.recognizer_calls);
    CHECK(ratio == doctest::Approx(30.0).epsilon(0.05));
}

TEST_CASE("analyze preconditions") {
    auto clf = Classifier::from_logit_fn({"A"}, [](const cv::Mat&) { return std::vector<double>{1.0}; });
    DetectorSpec spec;
    spec.model_artifact = std::filesystem::path(PROCTOR_MODEL_DIR) / "centerface.onnx";
    AnalyzeOptions opts;
    CHECK_THROWS_AS(analyze_video("/nonexistent.mp4", clf, detector_factory(spec), opts), UnreadableVideo);
    opts.worker_count = 0;
    CHECK_THROWS_AS(analyze_video("/nonexistent.mp4", clf, detector_factory(spec), opts), ConfigError);
}
