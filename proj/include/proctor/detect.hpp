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

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <opencv2/core.hpp>

#include "proctor/core.hpp"

namespace proctor {

enum class DetectorKind { neural_ssd, haar_cascade };

std::string_view to_string(DetectorKind kind);
/// Accepts "neural_ssd"/"neural" and "haar_cascade"/"haar"; throws ConfigError.
DetectorKind parse_detector_kind(std::string_view s);

struct DetectorSpec {
    DetectorKind kind = DetectorKind::neural_ssd;
    std::filesystem::path model_artifact;
    std::string sha256;  // verified at load when non-empty
    int input_side = 300;
    double min_confidence = 0.5;
};

struct Detection {
    PixelRect bbox;     // input-image coordinates, clipped to the image
    double confidence;  // [0, 1]
};

/// A loaded face detector.
///
/// detect() mutates backend state (OpenCV dnn and cascade objects are not
/// safe for concurrent inference), so concurrent workers each own an
/// instance; see make_detector().
class FaceDetector {
public:
    virtual ~FaceDetector() = default;

    /// Detections with confidence >= spec().min_confidence, in original image
    /// coordinates, sorted by descending confidence. Throws InferenceError.
    virtual std::vector<Detection> detect(const cv::Mat& image) = 0;

    virtual const DetectorSpec& spec() const noexcept = 0;
};

/// Loads the artifact named by the spec. Throws ModelLoadError on a missing,
/// corrupt or hash-mismatched artifact.
std::unique_ptr<FaceDetector> make_detector(const DetectorSpec& spec);

/// Per-worker detector construction.
using DetectorFactory = std::function<std::unique_ptr<FaceDetector>()>;

DetectorFactory detector_factory(const DetectorSpec& spec);

/// One-shot convenience: load, detect, discard.
std::vector<Detection> detect_faces(const cv::Mat& image, const DetectorSpec& spec);

/// Highest-confidence detection (first in a sorted list), if any.
std::optional<Detection> best_detection(std::span<const Detection> dets);

/// bbox grown by margin_frac of its size on every side, clipped to the image.
PixelRect crop_rect(const cv::Size& image_size, const PixelRect& bbox, double margin_frac);

/// Deep copy of the crop_rect region; never empty.
cv::Mat crop_face(const cv::Mat& image, const Detection& det, double margin_frac);

/// Greedy non-maximum suppression; `dets` need not be sorted. Output sorted by
/// descending confidence.
std::vector<Detection> suppress_overlaps(std::vector<Detection> dets, double iou_threshold);

}  // namespace proctor
