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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>

#include <opencv2/core.hpp>

namespace cv {
class VideoCapture;
}

namespace proctor {

struct VideoMeta {
    std::filesystem::path path;
    double fps = 0.0;
    std::int64_t frame_count = 0;
    int width = 0;
    int height = 0;
    double duration_s = 0.0;
    bool fps_from_container = true;
};

/// One decoded frame. `image` is BGR, 8 bits per channel, and never shared
/// with the decoder's internal buffers.
struct Frame {
    std::int64_t index = 0;
    cv::Mat image;
    double timestamp_s = 0.0;
};

/// Single-consumer, on-demand frame stream over one video file.
///
/// Frames come out in index order exactly once; skipped frames (sampling) are
/// grabbed but not converted. Independent readers over the same file may
/// coexist.
class VideoReader {
public:
    /// Throws UnreadableVideo when the file is missing or not decodable and
    /// EmptyVideo when it decodes to zero frames. `fallback_fps` is used when
    /// the container reports no frame rate.
    explicit VideoReader(const std::filesystem::path& path, double fallback_fps = 30.0);
    ~VideoReader();
    VideoReader(VideoReader&&) noexcept;
    VideoReader& operator=(VideoReader&&) noexcept;

    const VideoMeta& meta() const noexcept { return meta_; }

    /// Next frame, or nullopt at end of stream.
    std::optional<Frame> next();

    /// Next frame whose index is a multiple of every_n (every_n >= 1).
    std::optional<Frame> next_sampled(std::int64_t every_n);

    /// Next frame whose index satisfies `want`; other frames are only grabbed.
    std::optional<Frame> next_matching(const std::function<bool(std::int64_t)>& want);

private:
    std::unique_ptr<cv::VideoCapture> cap_;
    VideoMeta meta_;
    std::optional<cv::Mat> first_;  // decoded at open() to validate the file
    std::int64_t next_index_ = 0;
    bool done_ = false;
};

/// ceil(frame_count / every_n): the number of frames next_sampled yields.
std::int64_t sampled_count(std::int64_t frame_count, std::int64_t every_n);

/// Frames per "second slot" used for per-second sampling: round(fps), min 1.
std::int64_t frames_per_second_slot(double fps);

/// True for the first frame index of each whole second (frame 0 included).
bool first_frame_of_second(std::int64_t frame_idx, double fps);

}  // namespace proctor
