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

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "proctor/error.hpp"
#include "proctor/ocr.hpp"

namespace proctor {
namespace {

constexpr int kRasterW = 12;
constexpr int kRasterH = 16;
constexpr double kGeomWeight = 0.6;
constexpr double kRejectDistance = 0.30;
constexpr double kSpaceGap = 0.42;  // word gap, in cap heights

struct LineRef {
    double cap_top = 0.0;
    double baseline = 1.0;
    double cap() const { return std::max(1.0, baseline - cap_top); }
};

using Feature = std::vector<float>;

struct Template {
    char ch;
    Feature feature;
};

// Ink columns of a word are cut into glyph segments; every cut sits either
// in an ink-free column run or at a local minimum of the column projection.
constexpr double kNormCap = 24.0;  // glyph masks are rescaled to this cap height
constexpr double kSplitBonus = 0.02;  // per segment; favours splitting merged glyph pairs
constexpr double kMinGlyphWidth = 0.06;  // in cap heights
constexpr double kMaxGlyphWidth = 1.6;
constexpr double kMinPairWidth = 0.35;  // narrowest run that can be two touching glyphs
constexpr double kMaxCutInk = 0.6;     // a cut column holds at most this share of the run's peak ink

Feature glyph_feature(const cv::Mat& mask, const cv::Rect& box, const LineRef& line) {
    cv::Mat f32;
    mask(box).convertTo(f32, CV_32F, 1.0 / 255.0);
    cv::Mat small;
    cv::resize(f32, small, {kRasterW, kRasterH}, 0, 0, cv::INTER_AREA);
    cv::GaussianBlur(small, small, {3, 3}, 0.7);
    Feature f(small.begin<float>(), small.end<float>());
    const double cap = line.cap();
    f.push_back(static_cast<float>(box.width / cap));
    f.push_back(static_cast<float>(box.height / cap));
    f.push_back(static_cast<float>((line.baseline - box.y) / cap));
    f.push_back(static_cast<float>((line.baseline - (box.y + box.height)) / cap));
    return f;
}

/// Raster MSE plus weighted geometry difference. Stops early, returning a
/// value > bound, once the partial sum exceeds `bound`.
double feature_distance(const Feature& a, const Feature& b,
                        double bound = std::numeric_limits<double>::infinity()) {
    constexpr std::size_t raster = kRasterW * kRasterH;
    double dg = 0.0;
    for (std::size_t i = raster; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        dg += d * d;
    }
    double total = kGeomWeight * dg;
    if (total > bound) {
        return total;
    }
    const double limit = (bound - total) * raster;
    double dr = 0.0;
    for (std::size_t row = 0; row < raster; row += kRasterW) {
        for (std::size_t i = row; i < row + kRasterW; ++i) {
            const double d = a[i] - b[i];
            dr += d * d;
        }
        if (dr > limit) {
            break;
        }
    }
    return total + dr / raster;
}

/// Rescales `mask` so that the cap height becomes kNormCap; updates `line`.
cv::Mat normalize_scale(const cv::Mat& mask, LineRef& line) {
    const double f = kNormCap / line.cap();
    cv::Mat scaled;
    cv::resize(mask, scaled, {}, f, f, f < 1.0 ? cv::INTER_AREA : cv::INTER_LINEAR);
    cv::threshold(scaled, scaled, 64, 255, cv::THRESH_BINARY);
    line.cap_top *= f;
    line.baseline *= f;
    return scaled;
}

/// Renders one string white-on-black with a Hershey font; `pen_y` receives
/// the baseline row.
cv::Mat render_text(const std::string& text, int font, double scale, int thickness, int& pen_y) {
    int base = 0;
    const auto size = cv::getTextSize(text, font, scale, thickness, &base);
    const int pad = 4 + thickness;
    cv::Mat canvas = cv::Mat::zeros(size.height + base + 2 * pad, size.width + 2 * pad, CV_8UC1);
    pen_y = pad + size.height;
    cv::putText(canvas, text, {pad, pen_y}, font, scale, cv::Scalar(255), thickness, cv::LINE_AA);
    cv::Mat mask;
    cv::threshold(canvas, mask, 127, 255, cv::THRESH_BINARY);
    return mask;
}

LineRef estimate_line(const std::vector<cv::Rect>& comps) {
    int max_h = 0;
    for (const auto& c : comps) {
        max_h = std::max(max_h, c.height);
    }
    std::vector<int> bottoms;
    int top = std::numeric_limits<int>::max();
    for (const auto& c : comps) {
        if (c.height * 2 >= max_h) {
            bottoms.push_back(c.y + c.height);
            top = std::min(top, c.y);
        }
    }
    std::nth_element(bottoms.begin(), bottoms.begin() + static_cast<long>(bottoms.size() / 2),
                     bottoms.end());
    return {static_cast<double>(top), static_cast<double>(bottoms[bottoms.size() / 2])};
}

/// Binary text mask (white ink) with specks and background bleed removed;
/// `kept` receives the boxes of the glyph components.
cv::Mat text_mask(const cv::Mat& gray, std::vector<cv::Rect>& kept) {
    kept.clear();
    double lo = 0, hi = 0;
    cv::minMaxLoc(gray, &lo, &hi);
    if (hi - lo < 32) {
        return {};
    }
    cv::Mat mask;
    cv::threshold(gray, mask, 0, 255, cv::THRESH_BINARY | cv::THRESH_OTSU);
    if (cv::countNonZero(mask) * 2 > static_cast<int>(mask.total())) {
        cv::bitwise_not(mask, mask);
    }

    cv::Mat labels, stats, centroids;
    const int n = cv::connectedComponentsWithStats(mask, labels, stats, centroids, 8, CV_32S);
    int max_h = 0;
    for (int i = 1; i < n; ++i) {
        max_h = std::max(max_h, stats.at<int>(i, cv::CC_STAT_HEIGHT));
    }
    const double speck = std::max(1.0, 0.12 * max_h);
    std::vector<uchar> keep(static_cast<std::size_t>(n), 0);
    std::vector<int> specks;
    for (int i = 1; i < n; ++i) {
        const cv::Rect c(stats.at<int>(i, cv::CC_STAT_LEFT), stats.at<int>(i, cv::CC_STAT_TOP),
                         stats.at<int>(i, cv::CC_STAT_WIDTH), stats.at<int>(i, cv::CC_STAT_HEIGHT));
        // Spans the full strip height and is wide: background bleed, not text.
        if (c.height >= mask.rows - 1 && c.width > mask.rows) {
            continue;
        }
        if (c.height < speck && c.width < speck) {
            specks.push_back(i);
            continue;
        }
        keep[static_cast<std::size_t>(i)] = 255;
        kept.push_back(c);
    }
    // Thin strokes break up under thresholding; a speck inside the box of
    // a glyph component is a stroke fragment, not noise.
    const std::size_t glyphs = kept.size();
    for (int i : specks) {
        const cv::Rect c(stats.at<int>(i, cv::CC_STAT_LEFT), stats.at<int>(i, cv::CC_STAT_TOP),
                         stats.at<int>(i, cv::CC_STAT_WIDTH), stats.at<int>(i, cv::CC_STAT_HEIGHT));
        for (std::size_t k = 0; k < glyphs; ++k) {
            if ((kept[k] & c).area() == c.area()) {
                keep[static_cast<std::size_t>(i)] = 255;
                break;
            }
        }
    }
    cv::Mat clean(mask.size(), CV_8UC1);
    for (int y = 0; y < labels.rows; ++y) {
        const int* lp = labels.ptr<int>(y);
        uchar* cp = clean.ptr<uchar>(y);
        for (int x = 0; x < labels.cols; ++x) {
            cp[x] = keep[static_cast<std::size_t>(lp[x])];
        }
    }
    return clean;
}

class GlyphEngine final : public OcrEngine {
public:
    GlyphEngine() {
        static constexpr std::array fonts{cv::FONT_HERSHEY_SIMPLEX, cv::FONT_HERSHEY_DUPLEX};
        struct Style {
            double scale;
            int thickness;
        };
        static constexpr std::array styles{Style{0.5, 1}, Style{0.75, 1}, Style{0.75, 2},
                                           Style{1.2, 2},  Style{1.2, 3},  Style{2.0, 3}};
        const std::string chars(kDefaultNameCharset);
        for (int font : fonts) {
            for (const auto& st : styles) {
                int pen_h = 0;
                const cv::Rect hb =
                    cv::boundingRect(render_text("H", font, st.scale, st.thickness, pen_h));
                for (char c : chars) {
                    if (c == ' ') {
                        continue;
                    }
                    int pen = 0;
                    const cv::Mat m = render_text(std::string(1, c), font, st.scale, st.thickness, pen);
                    // Same pen row in both renders, so shift the 'H' box by the pen offset.
                    LineRef line{static_cast<double>(hb.y + pen - pen_h),
                                 static_cast<double>(hb.y + hb.height + pen - pen_h)};
                    const cv::Mat norm = normalize_scale(m, line);
                    const cv::Rect box = cv::boundingRect(norm);
                    if (box.area() == 0) {
                        continue;
                    }
                    templates_.push_back({c, glyph_feature(norm, box, line)});
                }
            }
        }
        // Small antialiased labels as they come out of the strip pipeline:
        // thresholded, pixel-replicated, with broken thin strokes.
        struct Degraded {
            int font;
            double scale;
            int threshold;
        };
        static constexpr std::array degraded{Degraded{cv::FONT_HERSHEY_SIMPLEX, 0.75, 180},
                                             Degraded{cv::FONT_HERSHEY_SIMPLEX, 0.75, 128},
                                             Degraded{cv::FONT_HERSHEY_SIMPLEX, 0.6, 180},
                                             Degraded{cv::FONT_HERSHEY_DUPLEX, 0.75, 180}};
        for (const auto& d : degraded) {
            const auto strip_mask = [&](const std::string& text, std::vector<cv::Rect>& comps) {
                int base = 0;
                const auto size = cv::getTextSize("H", d.font, d.scale, 1, &base);
                cv::Mat canvas(size.height + base + 8, size.width * 2 + 8, CV_8UC1, cv::Scalar(30));
                cv::putText(canvas, text, {4, 4 + size.height}, d.font, d.scale, cv::Scalar(255), 1, cv::LINE_AA);
                return text_mask(upscale(binarize(canvas, d.threshold), 3), comps);
            };
            std::vector<cv::Rect> comps;
            const cv::Mat h = strip_mask("H", comps);
            if (comps.empty()) {
                continue;
            }
            const cv::Rect hb = cv::boundingRect(h);
            for (char c : chars) {
                if (c == ' ') {
                    continue;
                }
                const cv::Mat m = strip_mask(std::string(1, c), comps);
                if (comps.empty()) {
                    continue;
                }
                LineRef line{static_cast<double>(hb.y), static_cast<double>(hb.y + hb.height)};
                const cv::Mat norm = normalize_scale(m, line);
                const cv::Rect box = cv::boundingRect(norm);
                if (box.area() > 0) {
                    templates_.push_back({c, glyph_feature(norm, box, line)});
                }
            }
        }
    }

    std::string recognize(const cv::Mat& image) const override {
        if (image.empty()) {
            return {};
        }
        cv::Mat gray;
        if (image.channels() == 1) {
            gray = image;
        } else {
            cv::cvtColor(image, gray, image.channels() == 4 ? cv::COLOR_BGRA2GRAY : cv::COLOR_BGR2GRAY);
        }
        std::vector<cv::Rect> kept;
        const cv::Mat clean = text_mask(gray, kept);
        if (kept.empty()) {
            return {};
        }
        LineRef line = estimate_line(kept);
        const cv::Mat norm = normalize_scale(clean, line);
        return read_line(norm, line);
    }

    std::string name() const override { return "glyph"; }
    std::string version() const override { return "2.0"; }
    bool concurrent_safe() const noexcept override { return true; }

private:
    struct Run {
        int x0, x1;
    };

    std::string read_line(const cv::Mat& mask, const LineRef& line) const {
        std::vector<int> proj(static_cast<std::size_t>(mask.cols), 0);
        for (int y = 0; y < mask.rows; ++y) {
            const uchar* p = mask.ptr<uchar>(y);
            for (int x = 0; x < mask.cols; ++x) {
                proj[static_cast<std::size_t>(x)] += p[x] ? 1 : 0;
            }
        }
        std::vector<Run> runs;
        for (int x = 0; x < mask.cols;) {
            if (!proj[static_cast<std::size_t>(x)]) {
                ++x;
                continue;
            }
            int e = x;
            while (e < mask.cols && proj[static_cast<std::size_t>(e)]) {
                ++e;
            }
            runs.push_back({x, e});
            x = e;
        }
        std::string text;
        std::vector<Run> word;
        const auto flush = [&] {
            if (word.empty()) {
                return;
            }
            if (!text.empty()) {
                text.push_back(' ');
            }
            text += read_word(mask, line, proj, word);
            word.clear();
        };
        for (const auto& r : runs) {
            if (!word.empty() && r.x0 - word.back().x1 > kSpaceGap * line.cap()) {
                flush();
            }
            word.push_back(r);
        }
        flush();
        return text;
    }

    std::string read_word(const cv::Mat& mask, const LineRef& line, const std::vector<int>& proj,
                          const std::vector<Run>& runs) const {
        std::vector<int> cuts{runs.front().x0, runs.back().x1};
        for (std::size_t i = 1; i < runs.size(); ++i) {
            cuts.push_back((runs[i - 1].x1 + runs[i].x0) / 2);
        }
        for (const auto& r : runs) {
            // Too narrow to hold two glyphs: a dip here is stroke texture.
            if (r.x1 - r.x0 < kMinPairWidth * line.cap()) {
                continue;
            }
            const int peak = *std::max_element(proj.begin() + r.x0, proj.begin() + r.x1);
            for (int x = r.x0 + 1; x + 1 < r.x1; ++x) {
                const int p = proj[static_cast<std::size_t>(x)];
                const int l = proj[static_cast<std::size_t>(x - 1)];
                const int rr = proj[static_cast<std::size_t>(x + 1)];
                if (p <= l && p <= rr && (p < l || p < rr) && p <= kMaxCutInk * peak) {
                    cuts.push_back(x);
                }
            }
        }
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

        const double cap = line.cap();
        const std::size_t m = cuts.size();
        constexpr double inf = std::numeric_limits<double>::infinity();
        std::vector<double> best(m, inf);
        std::vector<std::size_t> from(m, 0);
        std::vector<char> glyph(m, '?');
        best[0] = 0.0;
        for (std::size_t j = 1; j < m; ++j) {
            for (std::size_t i = j; i-- > 0;) {
                const int w = cuts[j] - cuts[i];
                if (w > kMaxGlyphWidth * cap) {
                    break;
                }
                if (w < kMinGlyphWidth * cap || best[i] == inf) {
                    continue;
                }
                const cv::Rect cols(cuts[i], 0, w, mask.rows);
                const cv::Rect ink = cv::boundingRect(mask(cols));
                if (ink.area() == 0) {
                    continue;
                }
                const cv::Rect box(cols.x + ink.x, ink.y, ink.width, ink.height);
                const auto [ch, dist] = classify(glyph_feature(mask, box, line));
                const double cost = best[i] + dist - kSplitBonus;
                if (cost < best[j]) {
                    best[j] = cost;
                    from[j] = i;
                    glyph[j] = dist <= kRejectDistance ? ch : '?';
                }
            }
        }
        if (best[m - 1] == inf) {
            return "?";
        }
        std::string out;
        for (std::size_t j = m - 1; j > 0; j = from[j]) {
            out.push_back(glyph[j]);
        }
        std::reverse(out.begin(), out.end());
        return out;
    }

    std::pair<char, double> classify(const Feature& f) const {
        double best = std::numeric_limits<double>::max();
        char best_ch = '?';
        for (const auto& t : templates_) {
            const double d = feature_distance(f, t.feature, best);
            if (d < best) {
                best = d;
                best_ch = t.ch;
            }
        }
        return {best_ch, best};
    }

    std::vector<Template> templates_;
};

std::filesystem::path find_on_path(const std::string& exe) {
    const char* path = std::getenv("PATH");
    if (!path) {
        return {};
    }
    std::stringstream ss(path);
    std::string dir;
    while (std::getline(ss, dir, ':')) {
        const auto candidate = std::filesystem::path(dir) / exe;
        if (::access(candidate.c_str(), X_OK) == 0) {
            return candidate;
        }
    }
    return {};
}

struct PipeCloser {
    void operator()(FILE* f) const { ::pclose(f); }
};

std::string run_capture(const std::string& cmd) {
    std::unique_ptr<FILE, PipeCloser> pipe(::popen(cmd.c_str(), "r"));
    if (!pipe) {
        throw EngineUnavailable("cannot spawn: " + cmd);
    }
    std::string out;
    std::array<char, 512> buf{};
    while (std::fgets(buf.data(), buf.size(), pipe.get())) {
        out += buf.data();
    }
    return out;
}

/// `tesseract` command-line engine in single-line mode.
class TesseractEngine final : public OcrEngine {
public:
    explicit TesseractEngine(std::filesystem::path exe) : exe_(std::move(exe)) {
        version_ = run_capture(exe_.string() + " --version 2>&1");
        if (auto nl = version_.find('\n'); nl != std::string::npos) {
            version_.resize(nl);
        }
    }

    std::string recognize(const cv::Mat& image) const override {
        if (!std::filesystem::exists(exe_)) {
            throw EngineUnavailable("tesseract binary disappeared: " + exe_.string());
        }
        char tmpl[] = "/tmp/proctor-ocr-XXXXXX.png";
        const int fd = ::mkstemps(tmpl, 4);
        if (fd < 0) {
            throw EngineUnavailable("cannot create temporary file for tesseract");
        }
        ::close(fd);
        const std::filesystem::path tmp(tmpl);
        cv::imwrite(tmp.string(), image);
        std::string out = run_capture(exe_.string() + " '" + tmp.string() + "' stdout --psm 7 2>/dev/null");
        std::filesystem::remove(tmp);
        while (!out.empty() && (out.back() == '\n' || out.back() == '\f' || out.back() == '\r')) {
            out.pop_back();
        }
        return out;
    }

    std::string name() const override { return "tesseract"; }
    std::string version() const override { return version_; }
    bool concurrent_safe() const noexcept override { return true; }

private:
    std::filesystem::path exe_;
    std::string version_;
};

}  // namespace

std::unique_ptr<OcrEngine> make_ocr_engine(std::string_view name) {
    if (name == "glyph") {
        return std::make_unique<GlyphEngine>();
    }
    if (name == "tesseract") {
        auto exe = find_on_path("tesseract");
        if (exe.empty()) {
            throw EngineUnavailable("OCR engine 'tesseract' is not installed (not on PATH)");
        }
        return std::make_unique<TesseractEngine>(std::move(exe));
    }
    throw ConfigError("unknown OCR engine '" + std::string(name) + "'");
}

}  // namespace proctor
