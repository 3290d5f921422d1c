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

#include "proctor/detect.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/dnn.hpp>
#include <opencv2/imgproc.hpp>
#include <opencv2/objdetect.hpp>

#include "proctor/error.hpp"
#include "proctor/hash.hpp"

namespace proctor {
namespace {

constexpr double kNmsIou = 0.3;
constexpr int kStrideAlign = 32;  // network input sides must be multiples of this

// Aspect-preserving resize so the longer side equals `side`, placed top-left
// on a zero canvas whose sides are rounded up to multiples of `align`.
struct Letterbox {
    cv::Mat canvas;
    double scale = 1.0;
};

Letterbox letterbox(const cv::Mat& image, int side, int align) {
    Letterbox lb;
    lb.scale = static_cast<double>(side) / std::max(image.cols, image.rows);
    const int w = std::max(1, static_cast<int>(std::lround(image.cols * lb.scale)));
    const int h = std::max(1, static_cast<int>(std::lround(image.rows * lb.scale)));
    cv::Mat resized;
    cv::resize(image, resized, {w, h}, 0, 0, cv::INTER_LINEAR);
    if (align <= 1) {
        lb.canvas = resized;
        return lb;
    }
    const auto up = [align](int v) { return (v + align - 1) / align * align; };
    lb.canvas = cv::Mat::zeros(up(h), up(w), image.type());
    resized.copyTo(lb.canvas(cv::Rect(0, 0, w, h)));
    return lb;
}

cv::Mat to_bgr(const cv::Mat& image) {
    if (image.channels() == 3) {
        return image;
    }
    cv::Mat out;
    cv::cvtColor(image, out, image.channels() == 4 ? cv::COLOR_BGRA2BGR : cv::COLOR_GRAY2BGR);
    return out;
}

cv::Mat to_gray(const cv::Mat& image) {
    if (image.channels() == 1) {
        return image;
    }
    cv::Mat out;
    cv::cvtColor(image, out, image.channels() == 4 ? cv::COLOR_BGRA2GRAY : cv::COLOR_BGR2GRAY);
    return out;
}

PixelRect to_image_rect(double x0, double y0, double x1, double y1, double scale,
                        const cv::Size& size) {
    const int ix0 = std::clamp(static_cast<int>(std::floor(x0 / scale)), 0, size.width - 1);
    const int iy0 = std::clamp(static_cast<int>(std::floor(y0 / scale)), 0, size.height - 1);
    const int ix1 = std::clamp(static_cast<int>(std::ceil(x1 / scale)), ix0 + 1, size.width);
    const int iy1 = std::clamp(static_cast<int>(std::ceil(y1 / scale)), iy0 + 1, size.height);
    return {ix0, iy0, ix1 - ix0, iy1 - iy0};
}

void verify_artifact(const DetectorSpec& spec) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(spec.model_artifact, ec)) {
        throw ModelLoadError("detector model not found: " + spec.model_artifact.string());
    }
    if (!spec.sha256.empty()) {
        const auto actual = sha256_file(spec.model_artifact);
        if (actual != spec.sha256) {
            throw ModelLoadError("detector model hash mismatch for " +
                                 spec.model_artifact.string() + ": expected " + spec.sha256 +
                                 ", got " + actual);
        }
    }
    if (spec.input_side <= 0) {
        throw ModelLoadError("detector input_side must be > 0");
    }
}

/// CenterFace-style anchor-free detector: stride-4 heatmap, log-scale size
/// and sub-cell offset heads.
class NeuralDetector final : public FaceDetector {
public:
    explicit NeuralDetector(DetectorSpec spec) : spec_(std::move(spec)) {
        verify_artifact(spec_);
        try {
            net_ = cv::dnn::readNet(spec_.model_artifact.string());
        } catch (const cv::Exception& e) {
            throw ModelLoadError("cannot load detector model " + spec_.model_artifact.string() +
                                 ": " + e.what());
        }
        if (net_.empty()) {
            throw ModelLoadError("detector model is empty: " + spec_.model_artifact.string());
        }
        net_.setPreferableBackend(cv::dnn::DNN_BACKEND_OPENCV);
        net_.setPreferableTarget(cv::dnn::DNN_TARGET_CPU);
        out_names_ = net_.getUnconnectedOutLayersNames();
        if (out_names_.size() < 3) {
            throw ModelLoadError("detector model has " + std::to_string(out_names_.size()) +
                                 " outputs; expected heatmap, scale, offset");
        }
    }

    std::vector<Detection> detect(const cv::Mat& image) override {
        if (image.empty()) {
            throw InferenceError("detect: empty image");
        }
        const auto lb = letterbox(to_bgr(image), spec_.input_side, kStrideAlign);
        std::vector<cv::Mat> outs;
        try {
            net_.setInput(cv::dnn::blobFromImage(lb.canvas, 1.0, lb.canvas.size(), cv::Scalar(),
                                                 false, false));
            net_.forward(outs, out_names_);
        } catch (const cv::Exception& e) {
            throw InferenceError(std::string("detector forward failed: ") + e.what());
        }
        const cv::Mat& heat = outs[0];
        const cv::Mat& size = outs[1];
        const cv::Mat& offset = outs[2];
        if (heat.dims != 4 || size.dims != 4 || offset.dims != 4 || heat.size[1] != 1 ||
            size.size[1] != 2 || offset.size[1] != 2) {
            throw InferenceError("unexpected detector output layout");
        }
        const int gh = heat.size[2];
        const int gw = heat.size[3];
        const int plane = gh * gw;
        const float* hp = heat.ptr<float>();
        const float* sp = size.ptr<float>();
        const float* op = offset.ptr<float>();
        constexpr double stride = 4.0;

        std::vector<Detection> dets;
        for (int y = 0; y < gh; ++y) {
            for (int x = 0; x < gw; ++x) {
                const int i = y * gw + x;
                const double score = std::clamp(static_cast<double>(hp[i]), 0.0, 1.0);
                if (score < spec_.min_confidence || score <= 0.0) {
                    continue;
                }
                const double bh = std::exp(sp[i]) * stride;
                const double bw = std::exp(sp[plane + i]) * stride;
                const double cy = (y + op[i] + 0.5) * stride;
                const double cx = (x + op[plane + i] + 0.5) * stride;
                const double x0 = std::max(0.0, cx - bw / 2);
                const double y0 = std::max(0.0, cy - bh / 2);
                dets.push_back({to_image_rect(x0, y0, cx + bw / 2, cy + bh / 2, lb.scale,
                                              image.size()),
                                score});
            }
        }
        return suppress_overlaps(std::move(dets), kNmsIou);
    }

    const DetectorSpec& spec() const noexcept override { return spec_; }

private:
    DetectorSpec spec_;
    cv::dnn::Net net_;
    std::vector<std::string> out_names_;
};

/// Viola-Jones cascade. Confidence is n / (n + 3) for n merged neighbours.
class HaarDetector final : public FaceDetector {
public:
    explicit HaarDetector(DetectorSpec spec) : spec_(std::move(spec)) {
        verify_artifact(spec_);
        bool ok = false;
        try {
            ok = cascade_.load(spec_.model_artifact.string());
        } catch (const cv::Exception&) {
            ok = false;
        }
        if (!ok || cascade_.empty()) {
            throw ModelLoadError("cannot load cascade " + spec_.model_artifact.string());
        }
    }

    std::vector<Detection> detect(const cv::Mat& image) override {
        if (image.empty()) {
            throw InferenceError("detect: empty image");
        }
        const auto lb = letterbox(to_gray(image), spec_.input_side, 1);
        cv::Mat eq;
        cv::equalizeHist(lb.canvas, eq);
        std::vector<cv::Rect> rects;
        std::vector<int> neighbours;
        try {
            cascade_.detectMultiScale(eq, rects, neighbours, 1.1, 3, 0, {20, 20});
        } catch (const cv::Exception& e) {
            throw InferenceError(std::string("cascade failed: ") + e.what());
        }
        std::vector<Detection> dets;
        for (std::size_t i = 0; i < rects.size(); ++i) {
            const double n = std::max(0, neighbours[i]);
            const double conf = n / (n + 3.0);
            if (conf < spec_.min_confidence) {
                continue;
            }
            const auto& r = rects[i];
            dets.push_back({to_image_rect(r.x, r.y, r.x + r.width, r.y + r.height, lb.scale,
                                          image.size()),
                            conf});
        }
        std::stable_sort(dets.begin(), dets.end(),
                         [](const Detection& a, const Detection& b) { return a.confidence > b.confidence; });
        return dets;
    }

    const DetectorSpec& spec() const noexcept override { return spec_; }

private:
    DetectorSpec spec_;
    cv::CascadeClassifier cascade_;
};

}  // namespace

std::string_view to_string(DetectorKind kind) {
    return kind == DetectorKind::neural_ssd ? "neural_ssd" : "haar_cascade";
}

DetectorKind parse_detector_kind(std::string_view s) {
    if (s == "neural_ssd" || s == "neural" || s == "dnn") {
        return DetectorKind::neural_ssd;
    }
    if (s == "haar_cascade" || s == "haar") {
        return DetectorKind::haar_cascade;
    }
    throw ConfigError("unknown detector kind '" + std::string(s) + "'");
}

std::unique_ptr<FaceDetector> make_detector(const DetectorSpec& spec) {
    if (spec.kind == DetectorKind::haar_cascade) {
        return std::make_unique<HaarDetector>(spec);
    }
    return std::make_unique<NeuralDetector>(spec);
}

DetectorFactory detector_factory(const DetectorSpec& spec) {
    return [spec] { return make_detector(spec); };
}

std::vector<Detection> detect_faces(const cv::Mat& image, const DetectorSpec& spec) {
    return make_detector(spec)->detect(image);
}

std::optional<Detection> best_detection(std::span<const Detection> dets) {
    if (dets.empty()) {
        return std::nullopt;
    }
    return *std::max_element(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
        return a.confidence < b.confidence;
    });
}

PixelRect crop_rect(const cv::Size& image_size, const PixelRect& bbox, double margin_frac) {
    const int dx = static_cast<int>(std::lround(bbox.w * margin_frac));
    const int dy = static_cast<int>(std::lround(bbox.h * margin_frac));
    const int x0 = std::clamp(bbox.x - dx, 0, std::max(0, image_size.width - 1));
    const int y0 = std::clamp(bbox.y - dy, 0, std::max(0, image_size.height - 1));
    const int x1 = std::clamp(bbox.right() + dx, x0 + 1, image_size.width);
    const int y1 = std::clamp(bbox.bottom() + dy, y0 + 1, image_size.height);
    return {x0, y0, x1 - x0, y1 - y0};
}

cv::Mat crop_face(const cv::Mat& image, const Detection& det, double margin_frac) {
    const auto r = crop_rect(image.size(), det.bbox, margin_frac);
    return image(cv::Rect(r.x, r.y, r.w, r.h)).clone();
}

std::vector<Detection> suppress_overlaps(std::vector<Detection> dets, double iou_threshold) {
    std::stable_sort(dets.begin(), dets.end(),
                     [](const Detection& a, const Detection& b) { return a.confidence > b.confidence; });
    std::vector<Detection> kept;
    for (const auto& d : dets) {
        const bool overlaps = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
            return iou(k.bbox, d.bbox) > iou_threshold;
        });
        if (!overlaps) {
            kept.push_back(d);
        }
    }
    return kept;
}

}  // namespace proctor
