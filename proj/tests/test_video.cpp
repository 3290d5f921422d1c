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

#include <fstream>

#include <opencv2/videoio.hpp>

#include "proctor/error.hpp"
#include "proctor/video.hpp"
#include "support.hpp"

using namespace proctor;

namespace {

std::filesystem::path make_clip(const testsupport::TempDir& dir, double seconds, const std::string& name) {
    auto s = testsupport::small_script(seconds, 1);
    s.width = 128;
    s.height = 72;
    s.rows = 1;
    s.cols = 1;
    s.participants.clear();  // no faces needed; keeps rendering cheap
    return synth::generate_video(s, dir / name).video;
}

std::vector<std::int64_t> sampled_indices(const std::filesystem::path& p, std::int64_t n) {
    VideoReader r(p);
    std::vector<std::int64_t> out;
    while (auto f = r.next_sampled(n)) {
        out.push_back(f->index);
    }
    return out;
}

}  // namespace

TEST_CASE("metadata of a 90-frame clip") {
    testsupport::TempDir dir("video");
    const auto clip = make_clip(dir, 3.0, "a");
    VideoReader r(clip);
    CHECK(r.meta().frame_count == 90);
    CHECK(r.meta().fps == doctest::Approx(30.0));
    CHECK(r.meta().duration_s == doctest::Approx(3.0).epsilon(1.0 / 30));
    CHECK(r.meta().width == 128);
    CHECK(r.meta().height == 72);
    std::int64_t expect = 0;
    while (auto f = r.next()) {
        CHECK(f->index == expect);
        CHECK(f->timestamp_s == doctest::Approx(static_cast<double>(expect) / 30.0));
        CHECK(f->image.cols == 128);
        ++expect;
    }
    CHECK(expect == 90);
}

TEST_CASE("sampling") {
    testsupport::TempDir dir("video");
    const auto clip90 = make_clip(dir, 3.0, "a");
    CHECK(sampled_indices(clip90, 30) == std::vector<std::int64_t>{0, 30, 60});
    CHECK(sampled_indices(clip90, 1).size() == 90);
    const auto clip299 = make_clip(dir, 299.0 / 30.0, "b");
    CHECK(sampled_indices(clip299, 30).size() == 10);
    CHECK(sampled_count(299, 30) == 10);
    CHECK(sampled_count(90, 30) == 3);
    CHECK(sampled_count(90, 1) == 90);
}

TEST_CASE("property: sampling cardinality and stream determinism") {
    testsupport::TempDir dir("video");
    const auto clip = make_clip(dir, 47.0 / 30.0, "c");
    for (std::int64_t n = 1; n <= 50; n += 7) {
        const auto a = sampled_indices(clip, n);
        CHECK(static_cast<std::int64_t>(a.size()) == sampled_count(47, n));
        CHECK(a == sampled_indices(clip, n));
        if (!a.empty()) {
            CHECK(a.front() == 0);
        }
    }
}

TEST_CASE("first frame of each second") {
    CHECK(first_frame_of_second(0, 30));
    CHECK_FALSE(first_frame_of_second(1, 30));
    CHECK(first_frame_of_second(30, 30));
    CHECK(first_frame_of_second(60, 30));
    CHECK_FALSE(first_frame_of_second(59, 30));
    // 29.97 fps: second 1 begins at frame 30 (30 / 29.97 > 1)
    CHECK(first_frame_of_second(30, 29.97));
    CHECK_FALSE(first_frame_of_second(29, 29.97));
    int count = 0;
    for (std::int64_t i = 0; i < 5400; ++i) {
        count += first_frame_of_second(i, 30.0) ? 1 : 0;
    }
    CHECK(count == 180);
}

TEST_CASE("missing and empty files") {
    testsupport::TempDir dir("video");
    CHECK_THROWS_AS(VideoReader(dir / "missing.mp4"), UnreadableVideo);
    {
        std::ofstream(dir / "junk.mp4") << "not a video";
    }
    CHECK_THROWS_AS(VideoReader(dir / "junk.mp4"), Error);
    {
        cv::VideoWriter w((dir / "empty.mp4").string(), cv::VideoWriter::fourcc('m', 'p', '4', 'v'), 30.0, {64, 64});
        w.release();
    }
    try {
        VideoReader r(dir / "empty.mp4");
        FAIL("an empty video must not open");
    } catch (const EmptyVideo&) {
        CHECK(true);
    } catch (const UnreadableVideo&) {
        CHECK(true);  // some containers with no frames are not decodable at all
    }
}
