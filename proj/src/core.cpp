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

#include "proctor/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include "proctor/csv.hpp"
#include "proctor/error.hpp"

namespace proctor {

std::string normalize_name(std::string_view name) {
    std::string out;
    out.reserve(name.size());
    bool pending_space = false;
    for (char c : name) {
        const auto uc = static_cast<unsigned char>(c);
        if (std::isspace(uc)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::toupper(uc)));
    }
    return out;
}

Roster::Roster(std::vector<StudentRecord> records) : records_(std::move(records)) {
    std::set<std::string> ids;
    std::set<std::string> names;
    for (const auto& r : records_) {
        const auto norm = normalize_name(r.display_name);
        if (norm.empty()) {
            throw InputError("roster: empty display name for student '" + r.student_id + "'");
        }
        if (!ids.insert(r.student_id).second) {
            throw InputError("roster: duplicate student id '" + r.student_id + "'");
        }
        if (!names.insert(norm).second) {
            throw InputError("roster: duplicate display name '" + r.display_name + "'");
        }
    }
}

Roster Roster::load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open roster file " + path.string());
    }
    const auto rows = csv::read(in);
    if (rows.empty()) {
        throw InputError("roster file is empty: " + path.string());
    }
    const auto& header = rows.front();
    if (header.size() < 2 || header[0] != "student_id" || header[1] != "name") {
        throw InputError("roster header must be 'student_id,name': " + path.string());
    }
    std::vector<StudentRecord> records;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.size() == 1 && row[0].empty()) {
            continue;
        }
        if (row.size() < 2) {
            throw InputError("roster line " + std::to_string(i + 1) + ": expected 2 fields");
        }
        records.push_back({row[0], row[1]});
    }
    return Roster(std::move(records));
}

void Roster::save_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write roster file " + path.string());
    }
    csv::write_row(out, {"student_id", "name"});
    for (const auto& r : records_) {
        csv::write_row(out, {r.student_id, r.display_name});
    }
}

std::vector<std::string> Roster::names() const {
    std::vector<std::string> out;
    out.reserve(records_.size());
    for (const auto& r : records_) {
        out.push_back(r.display_name);
    }
    return out;
}

bool Roster::contains(std::string_view display_name) const {
    return std::any_of(records_.begin(), records_.end(),
                       [&](const StudentRecord& r) { return r.display_name == display_name; });
}

std::optional<std::string> Roster::find_normalized(std::string_view name) const {
    const auto norm = normalize_name(name);
    for (const auto& r : records_) {
        if (normalize_name(r.display_name) == norm) {
            return r.display_name;
        }
    }
    return std::nullopt;
}

PixelRect intersect(const PixelRect& a, const PixelRect& b) noexcept {
    const int x0 = std::max(a.x, b.x);
    const int y0 = std::max(a.y, b.y);
    const int x1 = std::min(a.right(), b.right());
    const int y1 = std::min(a.bottom(), b.bottom());
    if (x1 <= x0 || y1 <= y0) {
        return {x0, y0, 0, 0};
    }
    return {x0, y0, x1 - x0, y1 - y0};
}

double iou(const PixelRect& a, const PixelRect& b) noexcept {
    const auto inter = intersect(a, b).area();
    const auto uni = a.area() + b.area() - inter;
    return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

GridLayout::GridLayout(int rows, int cols, int frame_w, int frame_h)
    : rows_(rows), cols_(cols), frame_w_(frame_w), frame_h_(frame_h) {
    if (rows < 1 || cols < 1) {
        throw ConfigError("grid rows and cols must be >= 1");
    }
    if (frame_w < cols || frame_h < rows) {
        throw ConfigError("frame " + std::to_string(frame_w) + "x" + std::to_string(frame_h) +
                          " too small for a " + std::to_string(rows) + "x" + std::to_string(cols) +
                          " grid");
    }
}

PixelRect cell_rect(const GridLayout& layout, CellRef cell) {
    if (!layout.valid(cell)) {
        throw std::out_of_range("cell outside grid");
    }
    const int cw = layout.frame_w() / layout.cols();
    const int ch = layout.frame_h() / layout.rows();
    PixelRect r{cell.col * cw, cell.row * ch, cw, ch};
    if (cell.col == layout.cols() - 1) {
        r.w = layout.frame_w() - r.x;
    }
    if (cell.row == layout.rows() - 1) {
        r.h = layout.frame_h() - r.y;
    }
    return r;
}

std::vector<PixelRect> partition_frame(const GridLayout& layout) {
    std::vector<PixelRect> rects;
    rects.reserve(static_cast<std::size_t>(layout.cell_count()));
    for (int i = 0; i < layout.cell_count(); ++i) {
        rects.push_back(cell_rect(layout, cell_from_index(i, layout)));
    }
    return rects;
}

int cell_linear_index(CellRef cell, const GridLayout& layout) {
    if (!layout.valid(cell)) {
        throw std::out_of_range("cell outside grid");
    }
    return cell.row * layout.cols() + cell.col;
}

CellRef cell_from_index(int index, const GridLayout& layout) {
    if (index < 0 || index >= layout.cell_count()) {
        throw std::out_of_range("cell index " + std::to_string(index) + " outside grid");
    }
    return {index / layout.cols(), index % layout.cols()};
}

std::int64_t second_of_frame(std::int64_t frame_idx, double fps) {
    if (!(fps > 0.0)) {
        throw std::invalid_argument("fps must be positive");
    }
    // Small epsilon so that e.g. 30 / 29.97-style rounding does not drop a second.
    return static_cast<std::int64_t>(std::floor(static_cast<double>(frame_idx) / fps + 1e-9));
}

void AnalysisConfig::validate() const {
    if (!(fps_assumed > 0.0)) {
        throw ConfigError("analysis.fps_assumed must be > 0");
    }
    if (window_s < 1) {
        throw ConfigError("analysis.window_s must be >= 1");
    }
    if (!(accept_threshold >= 0.0 && accept_threshold <= 1.0)) {
        throw ConfigError("analysis.accept_threshold must lie in [0, 1]");
    }
    if (presence_min_count < 0 || presence_min_count >= window_s) {
        throw ConfigError("analysis.presence_min_count must be in [0, window_s)");
    }
    if (rows < 1 || cols < 1) {
        throw ConfigError("grid rows and cols must be >= 1");
    }
}

}  // namespace proctor
