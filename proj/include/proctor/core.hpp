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

#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace proctor {

/// Trim, collapse internal whitespace runs to one space, upper-case (ASCII).
std::string normalize_name(std::string_view name);

struct StudentRecord {
    std::string student_id;
    std::string display_name;
};

/// Ordered student list; the closed label set for every classifier.
class Roster {
public:
    Roster() = default;
    /// Throws InputError on an empty display name, duplicate id or duplicate
    /// normalized display name.
    explicit Roster(std::vector<StudentRecord> records);

    static Roster load_csv(const std::filesystem::path& path);
    void save_csv(const std::filesystem::path& path) const;

    const std::vector<StudentRecord>& records() const noexcept { return records_; }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }

    /// Display names in roster order.
    std::vector<std::string> names() const;
    /// Exact display-name lookup.
    bool contains(std::string_view display_name) const;
    /// Lookup by normalized name; returns the verbatim display name.
    std::optional<std::string> find_normalized(std::string_view name) const;

private:
    std::vector<StudentRecord> records_;
};

struct CellRef {
    int row = 0;
    int col = 0;
    friend auto operator<=>(const CellRef&, const CellRef&) = default;
};

struct PixelRect {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    int right() const noexcept { return x + w; }
    int bottom() const noexcept { return y + h; }
    std::int64_t area() const noexcept { return std::int64_t{w} * h; }
    bool contains(const PixelRect& other) const noexcept {
        return other.x >= x && other.y >= y && other.right() <= right() && other.bottom() <= bottom();
    }
    friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

PixelRect intersect(const PixelRect& a, const PixelRect& b) noexcept;
double iou(const PixelRect& a, const PixelRect& b) noexcept;

/// R x C gallery over a frame_w x frame_h image. Immutable after construction.
class GridLayout {
public:
    /// Throws ConfigError unless rows, cols >= 1, frame_w >= cols, frame_h >= rows.
    GridLayout(int rows, int cols, int frame_w, int frame_h);

    int rows() const noexcept { return rows_; }
    int cols() const noexcept { return cols_; }
    int frame_w() const noexcept { return frame_w_; }
    int frame_h() const noexcept { return frame_h_; }
    int cell_count() const noexcept { return rows_ * cols_; }
    bool valid(CellRef cell) const noexcept {
        return cell.row >= 0 && cell.row < rows_ && cell.col >= 0 && cell.col < cols_;
    }

private:
    int rows_;
    int cols_;
    int frame_w_;
    int frame_h_;
};

/// Rectangle of one cell. Uniform partition; the last row/column absorbs the
/// integer-division remainder.
PixelRect cell_rect(const GridLayout& layout, CellRef cell);

/// All cell rectangles, indexed by cell_linear_index.
std::vector<PixelRect> partition_frame(const GridLayout& layout);

/// Row-major index, origin top-left.
int cell_linear_index(CellRef cell, const GridLayout& layout);
/// Inverse of cell_linear_index; throws std::out_of_range.
CellRef cell_from_index(int index, const GridLayout& layout);

/// floor(frame_idx / fps).
std::int64_t second_of_frame(std::int64_t frame_idx, double fps);

struct AnalysisConfig {
    double fps_assumed = 30.0;
    int window_s = 30;
    int presence_min_count = 10;  // present iff count > presence_min_count
    double accept_threshold = 0.5;
    int rows = 5;
    int cols = 5;

    /// Throws ConfigError when an invariant is broken.
    void validate() const;
};

}  // namespace proctor
