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

#include "proctor/video.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <opencv2/videoio.hpp>

#include "proctor/core.hpp"
#include "proctor/error.hpp"

namespace proctor {

VideoReader::VideoReader(const std::filesystem::path& path, double fallback_fps)
    : cap_(std::make_unique<cv::VideoCapture>()) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) {
        throw UnreadableVideo("video not found: " + path.string());
    }
    if (std::filesystem::file_size(path, ec) == 0) {
        throw EmptyVideo("video file is empty: " + path.string());
    }
    if (!cap_->open(path.string(), cv::CAP_FFMPEG) && !cap_->open(path.string(), cv::CAP_ANY)) {
        throw UnreadableVideo("cannot decode video: " + path.string());
    }
    meta_.path = path;
    meta_.width = static_cast<int>(cap_->get(cv::CAP_PROP_FRAME_WIDTH));
    meta_.height = static_cast<int>(cap_->get(cv::CAP_PROP_FRAME_HEIGHT));
    meta_.fps = cap_->get(cv::CAP_PROP_FPS);
    if (!(meta_.fps > 0.0) || !std::isfinite(meta_.fps)) {
        meta_.fps = fallback_fps;
        meta_.fps_from_container = false;
    }
    cv::Mat first;
    if (!cap_->read(first) || first.empty()) {
        throw EmptyVideo("video has no decodable frames: " + path.string());
    }
    meta_.width = first.cols;
    meta_.height = first.rows;
    const double reported = cap_->get(cv::CAP_PROP_FRAME_COUNT);
    meta_.frame_count = reported > 0 ? static_cast<std::int64_t>(std::llround(reported)) : 0;
    if (meta_.frame_count <= 0) {
        // Container does not know; count by grabbing on a second handle.
        cv::VideoCapture counter(path.string());
        std::int64_t n = 0;
        while (counter.grab()) {
            ++n;
        }
        meta_.frame_count = n;
    }
    meta_.duration_s = static_cast<double>(meta_.frame_count) / meta_.fps;
    first_ = std::move(first);
}

VideoReader::~VideoReader() = default;
VideoReader::VideoReader(VideoReader&&) noexcept = default;
VideoReader& VideoReader::operator=(VideoReader&&) noexcept = default;

std::optional<Frame> VideoReader::next() {
    return next_sampled(1);
}

std::optional<Frame> VideoReader::next_sampled(std::int64_t every_n) {
    if (every_n < 1) {
        throw std::invalid_argument("every_n must be >= 1");
    }
    return next_matching([every_n](std::int64_t idx) { return idx % every_n == 0; });
}

std::optional<Frame> VideoReader::next_matching(const std::function<bool(std::int64_t)>& want) {
    while (!done_) {
        const std::int64_t idx = next_index_;
        const bool wanted = want(idx);
        if (first_) {
            cv::Mat img = std::move(*first_);
            first_.reset();
            ++next_index_;
            if (wanted) {
                return Frame{idx, std::move(img), static_cast<double>(idx) / meta_.fps};
            }
            continue;
        }
        if (!cap_->grab()) {
            done_ = true;
            break;
        }
        ++next_index_;
        if (!wanted) {
            continue;
        }
        cv::Mat img;
        if (!cap_->retrieve(img) || img.empty()) {
            done_ = true;
            break;
        }
        return Frame{idx, std::move(img), static_cast<double>(idx) / meta_.fps};
    }
    return std::nullopt;
}

std::int64_t sampled_count(std::int64_t frame_count, std::int64_t every_n) {
    if (every_n < 1) {
        throw std::invalid_argument("every_n must be >= 1");
    }
    return frame_count <= 0 ? 0 : (frame_count + every_n - 1) / every_n;
}

std::int64_t frames_per_second_slot(double fps) {
    return std::max<std::int64_t>(1, std::llround(fps));
}

bool first_frame_of_second(std::int64_t frame_idx, double fps) {
    return frame_idx == 0 || second_of_frame(frame_idx, fps) != second_of_frame(frame_idx - 1, fps);
}

}  // namespace proctor
