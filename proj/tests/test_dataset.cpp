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

#include <algorithm>
#include <functional>
#include <set>

#include "json.hpp"
#include "proctor/dataset.hpp"
#include "proctor/error.hpp"
#include "support.hpp"

using namespace proctor;

namespace {

std::vector<FaceSample> samples(std::size_t n, std::int64_t first_frame = 0, int col = 0) {
    std::vector<FaceSample> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i].frame_idx = first_frame + static_cast<std::int64_t>(i) * 30;
        out[i].cell = {0, col};
        out[i].image = cv::Mat(8, 8, CV_8UC3, cv::Scalar(static_cast<double>(i % 255), 0, 0));
    }
    return out;
}

/// Plain recursive edit distance with memoization; independent of the
/// library's row-based implementation.
std::size_t edit_oracle(const std::string& a, const std::string& b) {
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
    std::function<std::size_t(std::size_t, std::size_t)> d = [&](std::size_t i, std::size_t j) -> std::size_t {
        if (i == 0) {
            return j;
        }
        if (j == 0) {
            return i;
        }
        const auto key = std::pair{i, j};
        if (auto it = memo.find(key); it != memo.end()) {
            return it->second;
        }
        const std::size_t v = std::min({d(i - 1, j) + 1, d(i, j - 1) + 1, d(i - 1, j - 1) + (a[i - 1] != b[j - 1])});
        memo[key] = v;
        return v;
    };
    return d(a.size(), b.size());
}

using Provenance = std::set<std::tuple<std::string, std::int64_t, int, int>>;

Provenance provenance(const LabeledDataset& ds) {
    Provenance p;
    for (const auto& [name, list] : ds.classes) {
        for (const auto& s : list) {
            p.insert({name, s.frame_idx, s.cell.row, s.cell.col});
        }
    }
    return p;
}

DatasetBuildConfig small_config() {
    DatasetBuildConfig c;
    c.rows = 2;
    c.cols = 2;
    c.detector.model_artifact = std::filesystem::path(PROCTOR_MODEL_DIR) / "centerface.onnx";
    const auto& s = testsupport::kSynthStrip;
    c.strip = {s[0], s[1], s[2], s[3]};
    return c;
}

}  // namespace

TEST_CASE("prune keeps a class iff count >= min_count") {
    LabeledDataset ds;
    ds.classes["A"] = samples(99);
    ds.classes["B"] = samples(100);
    ds.classes["C"] = samples(150);
    const auto p = prune_small_classes(ds, 100);
    CHECK(p.classes.count("A") == 0);
    CHECK(p.classes.at("B").size() == 100);
    CHECK(p.classes.at("C").size() == 150);
    CHECK(prune_small_classes(LabeledDataset{}, 100).classes.empty());
}

TEST_CASE("edit distance agrees with an independent oracle") {
    CHECK(normalized_edit_distance("CHAN TA1 MAN", "CHAN TAI MAN") == doctest::Approx(1.0 / 12.0));
    CHECK(normalized_edit_distance("", "") == 0.0);
    CHECK(normalized_edit_distance("ABC", "") == 1.0);
    auto g = testsupport::rng(505);
    for (int trial = 0; trial < 300; ++trial) {
        std::string a, b;
        const int na = testsupport::uniform(g, 0, 10);
        const int nb = testsupport::uniform(g, 0, 10);
        for (int i = 0; i < na; ++i) {
            a.push_back(static_cast<char>('A' + testsupport::uniform(g, 0, 3)));
        }
        for (int i = 0; i < nb; ++i) {
            b.push_back(static_cast<char>('A' + testsupport::uniform(g, 0, 3)));
        }
        const double expect =
            a.empty() && b.empty() ? 0.0 : static_cast<double>(edit_oracle(a, b)) / std::max(a.size(), b.size());
        CHECK(normalized_edit_distance(a, b) == doctest::Approx(expect));
    }
}

TEST_CASE("reconcile: substring, fuzzy, unmatched and ambiguous") {
    const Roster roster({{"S1", "CHAN TAI MAN"}, {"S2", "LI MING"}, {"S3", "LI MING HO"}});
    LabeledDataset ds;
    ds.classes["CHAN TAI MAN CUHK"] = samples(3, 0);
    ds.classes["CHAN TA1 MAN"] = samples(2, 15);
    ds.classes["QWERTY"] = samples(4);
    ds.classes["LI MING HO"] = samples(5);  // contains LI MING and LI MING HO
    ds.classes["CHAN TAI MAN"] = samples(1, 7);
    const auto r = reconcile_with_roster(ds, roster, 0.3);
    REQUIRE(r.dataset.classes.count("CHAN TAI MAN") == 1);
    CHECK(r.dataset.classes.at("CHAN TAI MAN").size() == 6);
    CHECK(r.dataset.classes.size() == 1);
    CHECK(r.dropped_samples == 9);
    const auto& merged = r.dataset.classes.at("CHAN TAI MAN");
    CHECK(std::is_sorted(merged.begin(), merged.end(), provenance_less));
    std::map<std::string, MatchKind> kinds;
    for (const auto& m : r.report) {
        kinds[m.from] = m.kind;
    }
    CHECK(kinds["CHAN TAI MAN CUHK"] == MatchKind::substring);
    CHECK(kinds["CHAN TA1 MAN"] == MatchKind::fuzzy);
    CHECK(kinds["QWERTY"] == MatchKind::unmatched);
    CHECK(kinds["LI MING HO"] == MatchKind::ambiguous);
    CHECK(kinds["CHAN TAI MAN"] == MatchKind::exact);
    CHECK_THROWS_AS(reconcile_with_roster(ds, Roster{}, 0.3), InputError);
}

TEST_CASE("property: reconcile output is within the roster and loses samples only by drops") {
    const Roster roster({{"1", "CHAN TAI MAN"}, {"2", "LI MING"}, {"3", "WONG SIU FAI"}, {"4", "HO KA YAN"}});
    const std::vector<std::string> base = {"CHAN TAI MAN", "LI MING", "WONG SIU FAI", "HO KA YAN", "QWERTY"};
    auto g = testsupport::rng(606);
    for (int trial = 0; trial < 200; ++trial) {
        LabeledDataset ds;
        const int classes = testsupport::uniform(g, 1, 6);
        for (int c = 0; c < classes; ++c) {
            std::string name = base[static_cast<std::size_t>(testsupport::uniform(g, 0, 4))];
            const int edits = testsupport::uniform(g, 0, 3);
            for (int e = 0; e < edits; ++e) {
                const auto pos = static_cast<std::size_t>(testsupport::uniform(g, 0, int(name.size()) - 1));
                name[pos] = static_cast<char>('A' + testsupport::uniform(g, 0, 25));
            }
            if (testsupport::uniform(g, 0, 3) == 0) {
                name += " X";
            }
            auto& list = ds.classes[name];
            const auto more = samples(static_cast<std::size_t>(testsupport::uniform(g, 1, 5)), 30 * c, c);
            list.insert(list.end(), more.begin(), more.end());
        }
        const auto r = reconcile_with_roster(ds, roster, 0.3);
        for (const auto& [name, list] : r.dataset.classes) {
            CHECK(roster.contains(name));
        }
        CHECK(r.dataset.sample_count() + r.dropped_samples == ds.sample_count());
        CHECK(r.report.size() == ds.classes.size());
    }
}

TEST_CASE("validate_dataset") {
    Roster roster;
    {
        std::vector<StudentRecord> recs;
        for (int i = 0; i < 10; ++i) {
            recs.push_back({"S" + std::to_string(i), "NAME " + std::string(1, char('A' + i))});
        }
        roster = Roster(recs);
    }
    LabeledDataset ds;
    for (int i = 0; i < 9; ++i) {
        ds.classes["NAME " + std::string(1, char('A' + i))] = samples(150);
    }
    CHECK_NOTHROW(validate_dataset(ds, roster, 0.8, 100));
    LabeledDataset four;
    for (int i = 0; i < 4; ++i) {
        four.classes["NAME " + std::string(1, char('A' + i))] = samples(150);
    }
    try {
        validate_dataset(four, roster, 0.8, 100);
        FAIL("expected TooShortVideo");
    } catch (const TooShortVideo& e) {
        CHECK(std::string(e.what()).find("longer") != std::string::npos);
        CHECK(e.exit_code() == 4);
    }
}

TEST_CASE("write and load round trip") {
    testsupport::TempDir dir("ds");
    LabeledDataset ds;
    ds.classes["LI MING"] = samples(3);
    ds.classes["HO KA YAN"] = samples(2, 60, 1);
    write_dataset(ds, dir / "root", R"({"note": "x"})");
    CHECK(std::filesystem::is_regular_file(dir / "root" / "LI MING" / "000001.png"));
    const auto back = load_dataset(dir / "root");
    CHECK(back.sample_count() == 5);
    CHECK(provenance(back) == provenance(ds));
    const auto img = load_sample_image(back, back.classes.at("LI MING")[2]);
    CHECK(img.size() == cv::Size(8, 8));
    CHECK(img.at<cv::Vec3b>(0, 0)[0] == 2);
    std::ifstream f(dir / "root" / "manifest.json");
    const auto j = nlohmann::json::parse(f);
    CHECK(j.at("note") == "x");
    CHECK(j.contains("schema_version"));
    CHECK_THROWS_AS(load_dataset(dir / "missing"), InputError);
}

TEST_CASE("harvest from a synthetic recording") {
    testsupport::TempDir dir("harvest");
    auto script = testsupport::small_script(6.0, 4);
    script.participants[2].absences = {{2.0, 4.0}};
    const auto video = synth::generate_video(script, dir / "v");
    const auto roster = synth::script_roster(script);
    const auto expected = synth::face_seconds(script);

    auto cfg = small_config();
    const auto one = build_dataset(video.video, roster, cfg);
    CHECK(one.stats.frames_scanned == 6);
    for (const auto& [name, secs] : expected) {
        INFO(name);
        REQUIRE(one.dataset.classes.count(name) == 1);
        const auto n = static_cast<double>(one.dataset.classes.at(name).size());
        CHECK(n >= 0.9 * secs);
        CHECK(n <= 1.1 * secs);
    }

    // Worker count does not change the harvest.
    {
        for (int workers : {2, 3}) {
            cfg.worker_count = workers;
            const auto other = build_dataset(video.video, roster, cfg);
            CHECK(provenance(other.dataset) == provenance(one.dataset));
            CHECK(other.stats.faces_detected == one.stats.faces_detected);
            CHECK(other.stats.ocr_calls == one.stats.ocr_calls);
        }
    }
}

TEST_CASE("face-blank recording gives an empty dataset") {
    testsupport::TempDir dir("blank");
    auto script = testsupport::small_script(2.0, 2);
    for (auto& p : script.participants) {
        p.absences = {{0.0, 2.0}};
    }
    const auto video = synth::generate_video(script, dir / "v");
    const auto r = build_dataset(video.video, synth::script_roster(script), small_config());
    CHECK(r.dataset.classes.empty());
    CHECK(r.stats.faces_detected == 0);
}

TEST_CASE("build_dataset preconditions") {
    testsupport::TempDir dir("pre");
    const auto video = synth::generate_video(testsupport::small_script(1.0, 1), dir / "v");
    CHECK_THROWS_AS(build_dataset(video.video, Roster{}, small_config()), InputError);
    auto cfg = small_config();
    cfg.worker_count = 0;
    CHECK_THROWS_AS(build_dataset(video.video, synth::script_roster(testsupport::small_script(1.0, 1)), cfg),
                    ConfigError);
    CHECK_THROWS_AS(build_dataset(dir / "none.mp4", synth::script_roster(testsupport::small_script(1.0, 1)),
                                  small_config()),
                    UnreadableVideo);
}
