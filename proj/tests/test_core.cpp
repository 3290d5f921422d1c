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

#include <set>
#include <sstream>

#include "proctor/core.hpp"
#include "proctor/error.hpp"
#include "support.hpp"

using namespace proctor;

TEST_CASE("grid: 1280x720 5x5 gives 256x144 cells") {
    const GridLayout g(5, 5, 1280, 720);
    CHECK(cell_rect(g, {0, 0}) == PixelRect{0, 0, 256, 144});
    CHECK(cell_rect(g, {4, 4}) == PixelRect{1024, 576, 256, 144});
    CHECK(cell_rect(g, {2, 3}) == PixelRect{768, 288, 256, 144});
}

TEST_CASE("grid: remainder goes to the last row and column") {
    const GridLayout g(7, 7, 1280, 720);
    // 1280 / 7 = 182 rem 6; 720 / 7 = 102 rem 6
    CHECK(cell_rect(g, {0, 0}) == PixelRect{0, 0, 182, 102});
    CHECK(cell_rect(g, {6, 6}) == PixelRect{1092, 612, 188, 108});
}

TEST_CASE("grid: invalid layouts and cells") {
    CHECK_THROWS_AS(GridLayout(0, 5, 100, 100), ConfigError);
    CHECK_THROWS_AS(GridLayout(5, 5, 4, 100), ConfigError);
    const GridLayout g(2, 3, 30, 20);
    CHECK_THROWS_AS(cell_rect(g, {2, 0}), std::out_of_range);
    CHECK_THROWS_AS(cell_from_index(6, g), std::out_of_range);
}

TEST_CASE("property: grid partition is exact") {
    auto g = testsupport::rng(101);
    for (int trial = 0; trial < 300; ++trial) {
        const int rows = testsupport::uniform(g, 1, 9);
        const int cols = testsupport::uniform(g, 1, 9);
        const int w = testsupport::uniform(g, cols, 2000);
        const int h = testsupport::uniform(g, rows, 1200);
        const GridLayout layout(rows, cols, w, h);
        const auto cells = partition_frame(layout);
        REQUIRE(cells.size() == static_cast<std::size_t>(rows * cols));
        std::int64_t area = 0;
        const PixelRect frame{0, 0, w, h};
        for (std::size_t i = 0; i < cells.size(); ++i) {
            CHECK(frame.contains(cells[i]));
            CHECK(cells[i].w >= 1);
            CHECK(cells[i].h >= 1);
            area += cells[i].area();
            for (std::size_t j = i + 1; j < cells.size(); ++j) {
                CHECK(intersect(cells[i], cells[j]).area() == 0);
            }
            const auto ref = cell_from_index(static_cast<int>(i), layout);
            CHECK(cell_linear_index(ref, layout) == static_cast<int>(i));
        }
        CHECK(area == std::int64_t{w} * h);
    }
}

TEST_CASE("second_of_frame") {
    CHECK(second_of_frame(0, 30) == 0);
    CHECK(second_of_frame(29, 30) == 0);
    CHECK(second_of_frame(30, 30) == 1);
    CHECK(second_of_frame(5399, 30) == 179);
    CHECK(second_of_frame(25, 25.0) == 1);
    CHECK_THROWS(second_of_frame(1, 0.0));
}

TEST_CASE("iou") {
    CHECK(iou({0, 0, 10, 10}, {0, 0, 10, 10}) == doctest::Approx(1.0));
    CHECK(iou({0, 0, 10, 10}, {5, 0, 10, 10}) == doctest::Approx(50.0 / 150.0));
    CHECK(iou({0, 0, 10, 10}, {20, 20, 5, 5}) == 0.0);
}

TEST_CASE("roster: normalization, lookup and validation") {
    CHECK(normalize_name("  chan  tai\tman ") == "CHAN TAI MAN");
    const Roster r({{"S1", "Chan Tai Man"}, {"S2", "LI MING"}});
    CHECK(r.contains("Chan Tai Man"));
    CHECK_FALSE(r.contains("CHAN TAI MAN"));
    CHECK(r.find_normalized("chan tai  man") == std::optional<std::string>("Chan Tai Man"));
    CHECK_THROWS_AS(Roster({{"S1", "A"}, {"S1", "B"}}), InputError);
    CHECK_THROWS_AS(Roster({{"S1", "A b"}, {"S2", "a  B"}}), InputError);
    CHECK_THROWS_AS(Roster(std::vector<StudentRecord>{{"S1", ""}}), InputError);
}

TEST_CASE("roster: csv round trip with quoting") {
    testsupport::TempDir dir("roster");
    const Roster r({{"S1", "O'Neil, Mary"}, {"S2", "LI \"Ming\""}});
    r.save_csv(dir / "roster.csv");
    const auto back = Roster::load_csv(dir / "roster.csv");
    REQUIRE(back.size() == 2);
    CHECK(back.records()[0].display_name == "O'Neil, Mary");
    CHECK(back.records()[1].display_name == "LI \"Ming\"");
    CHECK_THROWS_AS(Roster::load_csv(dir / "missing.csv"), InputError);
}

TEST_CASE("analysis config validation") {
    AnalysisConfig c;
    CHECK_NOTHROW(c.validate());
    c.accept_threshold = 1.5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = AnalysisConfig{};
    c.window_s = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}
