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

#include "proctor/ocr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include <opencv2/imgproc.hpp>

#include "proctor/error.hpp"

namespace proctor {

void NameStripSpec::validate() const {
    const auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in01(x_frac) || !in01(y_frac) || !in01(w_frac) || !in01(h_frac)) {
        throw ConfigError("name strip fractions must lie in [0, 1]");
    }
    if (x_frac + w_frac > 1.0 + 1e-9 || y_frac + h_frac > 1.0 + 1e-9) {
        throw ConfigError("name strip must lie inside the cell");
    }
}

void OcrConfig::validate() const {
    if (threshold < 0 || threshold > 255) {
        throw ConfigError("ocr.threshold must be in [0, 255]");
    }
    if (upscale_k < 1) {
        throw ConfigError("ocr.upscale must be >= 1");
    }
    if (allowed_charset.empty()) {
        throw ConfigError("ocr.charset must not be empty");
    }
}

PixelRect name_strip_rect(const cv::Size& cell, const NameStripSpec& spec) {
    const auto round = [](double v) { return static_cast<int>(std::lround(v)); };
    const int x = std::clamp(round(spec.x_frac * cell.width), 0, std::max(0, cell.width - 1));
    const int y = std::clamp(round(spec.y_frac * cell.height), 0, std::max(0, cell.height - 1));
    const int w = std::clamp(round(spec.w_frac * cell.width), 1, std::max(1, cell.width - x));
    const int h = std::clamp(round(spec.h_frac * cell.height), 1, std::max(1, cell.height - y));
    return {x, y, w, h};
}

cv::Mat extract_name_strip(const cv::Mat& cell_image, const NameStripSpec& spec) {
    if (cell_image.empty()) {
        throw std::invalid_argument("extract_name_strip: empty cell image");
    }
    const auto r = name_strip_rect(cell_image.size(), spec);
    return cell_image(cv::Rect(r.x, r.y, r.w, r.h));
}

cv::Mat binarize(const cv::Mat& gray, int threshold) {
    if (gray.type() != CV_8UC1) {
        throw std::invalid_argument("binarize expects an 8-bit single-channel image");
    }
    cv::Mat lut(1, 256, CV_8U);
    for (int v = 0; v < 256; ++v) {
        lut.at<uchar>(v) = v < threshold ? 0 : static_cast<uchar>(v);
    }
    cv::Mat out;
    cv::LUT(gray, lut, out);
    return out;
}

int variance_split_threshold(const cv::Mat& gray) {
    if (gray.type() != CV_8UC1 || gray.empty()) {
        throw std::invalid_argument("variance_split_threshold expects a non-empty 8-bit gray image");
    }
    cv::Mat scratch;
    // Otsu's t puts levels <= t in the dark class.
    const double t = cv::threshold(gray, scratch, 0, 255, cv::THRESH_BINARY | cv::THRESH_OTSU);
    return std::min(255, static_cast<int>(t) + 1);
}

cv::Mat upscale(const cv::Mat& image, int k) {
    if (k < 1) {
        throw std::invalid_argument("upscale factor must be >= 1");
    }
    if (k == 1) {
        return image.clone();
    }
    cv::Mat out;
    cv::resize(image, out, {image.cols * k, image.rows * k}, 0, 0, cv::INTER_NEAREST);
    return out;
}

std::optional<CleanName> clean_name(std::string_view raw, const OcrConfig& cfg) {
    std::string kept;
    kept.reserve(raw.size());
    for (char c : raw) {
        const auto uc = static_cast<unsigned char>(c);
        if (std::isspace(uc)) {
            kept.push_back(' ');
        } else if (cfg.allowed_charset.find(c) != std::string::npos) {
            kept.push_back(static_cast<char>(std::toupper(uc)));
        }
    }
    std::string out;
    for (char c : kept) {
        if (c == ' ' && (out.empty() || out.back() == ' ')) {
            continue;
        }
        // Upper-casing may leave the charset when only lower-case was allowed.
        if (c != ' ' && cfg.allowed_charset.find(c) == std::string::npos) {
            continue;
        }
        out.push_back(c);
    }
    while (!out.empty() && out.back() == ' ') {
        out.pop_back();
    }
    if (out.empty()) {
        return std::nullopt;
    }
    return CleanName{std::move(out)};
}

std::string ocr_text(const cv::Mat& image, const OcrEngine& engine) {
    if (image.empty()) {
        throw std::invalid_argument("ocr_text: empty image");
    }
    return engine.recognize(image);
}

std::optional<CleanName> read_cell_name(const cv::Mat& cell_image, const NameStripSpec& strip,
                                        const OcrConfig& cfg, const OcrEngine& engine) {
    const cv::Mat region = extract_name_strip(cell_image, strip);
    cv::Mat gray;
    if (region.channels() == 1) {
        gray = region;
    } else {
        cv::cvtColor(region, gray, region.channels() == 4 ? cv::COLOR_BGRA2GRAY : cv::COLOR_BGR2GRAY);
    }
    const auto attempt = [&](int threshold) {
        return clean_name(ocr_text(upscale(binarize(gray, threshold), cfg.upscale_k), engine), cfg);
    };
    auto name = attempt(cfg.threshold);
    if (!name && cfg.auto_threshold) {
        const int t = variance_split_threshold(gray);
        if (t != cfg.threshold) {
            name = attempt(t);
        }
    }
    return name;
}

}  // namespace proctor
