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

#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include <opencv2/core.hpp>

#include "proctor/core.hpp"

namespace proctor {

/// Name-strip location as fractions of the cell rectangle.
struct NameStripSpec {
    double x_frac = 0.0;
    double y_frac = 0.85;
    double w_frac = 0.40;
    double h_frac = 0.15;

    void validate() const;
};

inline constexpr std::string_view kDefaultNameCharset =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz -'";

struct OcrConfig {
    int threshold = 180;         // gray levels below this become 0
    bool auto_threshold = true;  // retry with a variance-maximizing split on NoName
    int upscale_k = 3;
    std::string allowed_charset{kDefaultNameCharset};
    std::string engine = "glyph";

    void validate() const;
};

/// Upper-cased, charset-filtered, whitespace-normalized, non-empty.
struct CleanName {
    std::string text;
    friend bool operator==(const CleanName&, const CleanName&) = default;
};

/// Strip rectangle within a cell of the given size (rounded, clamped, >= 1x1).
PixelRect name_strip_rect(const cv::Size& cell_size, const NameStripSpec& spec);

/// View into cell_image at name_strip_rect (no copy).
cv::Mat extract_name_strip(const cv::Mat& cell_image, const NameStripSpec& spec);

/// Pixels below `threshold` become 0; the rest keep their value. 8-bit, 1 channel.
cv::Mat binarize(const cv::Mat& gray, int threshold);

/// Two-class variance-maximizing split, returned in binarize()'s convention
/// (first gray level assigned to the bright class).
int variance_split_threshold(const cv::Mat& gray);

/// Nearest-neighbour enlargement by an integer factor; k = 1 returns a copy.
cv::Mat upscale(const cv::Mat& image, int k);

/// Keep allowed characters, collapse whitespace, upper-case. nullopt = NoName.
std::optional<CleanName> clean_name(std::string_view raw, const OcrConfig& cfg);

/// Adapter over a text recognizer for single-line strips.
class OcrEngine {
public:
    virtual ~OcrEngine() = default;

    /// Raw engine output, possibly empty. Throws EngineUnavailable.
    virtual std::string recognize(const cv::Mat& image) const = 0;

    virtual std::string name() const = 0;
    virtual std::string version() const = 0;
    /// True when recognize() may be called concurrently on one instance.
    virtual bool concurrent_safe() const noexcept = 0;
};

/// "glyph": built-in template matcher for Hershey-font name labels (safe for
/// concurrent calls). "tesseract": `tesseract` CLI, one process per call.
/// Throws EngineUnavailable for a missing engine, ConfigError for an unknown
/// name.
std::unique_ptr<OcrEngine> make_ocr_engine(std::string_view name);

/// Engine output verbatim. Throws std::invalid_argument on an empty image.
std::string ocr_text(const cv::Mat& image, const OcrEngine& engine);

/// Full strip pipeline on one cell: extract, gray, binarize, upscale, OCR,
/// clean; with auto_threshold, retried once at the variance-maximizing split.
std::optional<CleanName> read_cell_name(const cv::Mat& cell_image, const NameStripSpec& strip,
                                        const OcrConfig& cfg, const OcrEngine& engine);

}  // namespace proctor
