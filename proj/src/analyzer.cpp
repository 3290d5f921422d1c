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

#include "proctor/analyzer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "proctor/csv.hpp"
#include "proctor/error.hpp"
#include "proctor/pool.hpp"
#include "proctor/video.hpp"

namespace proctor {
namespace {

struct SecondBatch {
    std::int64_t second = 0;
    std::vector<Frame> frames;
};

struct SecondResult {
    std::vector<RecognitionEvent> events;
    std::int64_t recognizer_calls = 0;
    std::int64_t detector_calls = 0;
    std::int64_t frames = 0;
};

std::string format_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

double parse_double(const std::string& s) {
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
        throw InputError("bad number '" + s + "' in event log");
    }
    return v;
}

std::int64_t parse_int(const std::string& s) {
    std::int64_t v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
        throw InputError("bad integer '" + s + "' in event log");
    }
    return v;
}

}  // namespace

AnalysisResult analyze_video(const std::filesystem::path& video, const Classifier& classifier,
                             const DetectorFactory& detectors, const AnalyzeOptions& opts) {
    opts.analysis.validate();
    if (opts.worker_count < 1) {
        throw ConfigError("analysis.workers must be >= 1");
    }
    VideoReader reader(video, opts.analysis.fps_assumed);
    const GridLayout layout(opts.analysis.rows, opts.analysis.cols, reader.meta().width,
                            reader.meta().height);
    const auto cells = partition_frame(layout);
    const double fps = reader.meta().fps;
    const double theta = opts.analysis.accept_threshold;

    std::vector<std::unique_ptr<FaceDetector>> dets;
    for (int w = 0; w < opts.worker_count; ++w) {
        dets.push_back(detectors());
    }

    std::optional<Frame> lookahead;
    bool started = false;
    const auto pull = [&] {
        if (opts.mode == SamplingMode::per_second) {
            return reader.next_matching([fps](std::int64_t i) { return first_frame_of_second(i, fps); });
        }
        return reader.next();
    };
    const std::function<std::optional<SecondBatch>()> produce = [&]() -> std::optional<SecondBatch> {
        if (!started) {
            lookahead = pull();
            started = true;
        }
        if (!lookahead) {
            return std::nullopt;
        }
        SecondBatch batch;
        batch.second = second_of_frame(lookahead->index, fps);
        while (lookahead && second_of_frame(lookahead->index, fps) == batch.second) {
            batch.frames.push_back(std::move(*lookahead));
            lookahead = pull();
        }
        return batch;
    };

    const std::function<SecondResult(SecondBatch&, int)> work = [&](SecondBatch& batch, int w) {
        SecondResult out;
        FaceDetector& det = *dets[static_cast<std::size_t>(w)];
        std::vector<RecognitionEvent> ev(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            ev[c].second = batch.second;
            ev[c].cell = cell_from_index(static_cast<int>(c), layout);
        }
        for (const auto& frame : batch.frames) {
            ++out.frames;
            std::vector<cv::Mat> crops;
            std::vector<std::size_t> owner;
            for (std::size_t c = 0; c < cells.size(); ++c) {
                const auto& r = cells[c];
                const cv::Mat cell_img = frame.image(cv::Rect(r.x, r.y, r.w, r.h));
                ++out.detector_calls;
                const auto found = det.detect(cell_img);
                if (const auto best = best_detection(found)) {
                    crops.push_back(crop_face(cell_img, *best, opts.crop_margin));
                    owner.push_back(c);
                }
            }
            if (crops.empty()) {
                continue;
            }
            out.recognizer_calls += static_cast<std::int64_t>(crops.size());
            const auto preds = classifier.predict_batch(crops);
            for (std::size_t i = 0; i < preds.size(); ++i) {
                auto& e = ev[owner[i]];
                if (!e.face_found || preds[i].argmax_prob > e.argmax_prob) {
                    e.face_found = true;
                    e.predicted = preds[i].argmax_class;
                    e.argmax_prob = preds[i].argmax_prob;
                    e.accepted = accept_prediction(preds[i], theta).has_value();
                }
            }
        }
        out.events = std::move(ev);
        return out;
    };

    AnalysisResult result;
    result.fps = fps;
    result.duration_s = reader.meta().duration_s;
    const std::function<void(SecondResult&&)> commit = [&](SecondResult&& r) {
        result.recognizer_calls += r.recognizer_calls;
        result.detector_calls += r.detector_calls;
        result.frames_processed += r.frames;
        for (auto& e : r.events) {
            result.events.push_back(std::move(e));
        }
    };
    run_ordered<SecondBatch, SecondResult>(opts.worker_count, produce, work, commit);
    return result;
}

int window_count(double duration_s, int window_s) {
    if (window_s < 1) {
        throw std::invalid_argument("window_s must be >= 1");
    }
    if (!(duration_s > 0.0)) {
        return 1;
    }
    return std::max(1, static_cast<int>(std::ceil(duration_s / window_s - 1e-9)));
}

std::vector<PresenceWindow> window_presence(const std::vector<RecognitionEvent>& events,
                                            const Roster& roster, const AnalysisConfig& cfg,
                                            double duration_s) {
    const int nw = window_count(duration_s, cfg.window_s);
    const auto names = roster.names();
    std::map<std::string, std::size_t, std::less<>> index;
    for (std::size_t i = 0; i < names.size(); ++i) {
        index.emplace(names[i], i);
    }
    // Open-window counters, flushed whenever the stream enters a later window.
    std::vector<int> count(names.size(), 0);
    std::vector<std::int64_t> last_second(names.size(), -1);
    std::vector<std::vector<PresenceWindow>> per_student(names.size());
    int open = 0;
    const auto flush_until = [&](int w) {
        for (; open < w && open < nw; ++open) {
            for (std::size_t s = 0; s < names.size(); ++s) {
                per_student[s].push_back({names[s], open, count[s], count[s] > cfg.presence_min_count});
                count[s] = 0;
            }
        }
    };
    std::int64_t prev = std::numeric_limits<std::int64_t>::min();
    for (const auto& e : events) {
        if (e.second < prev) {
            throw std::invalid_argument("window_presence: events must be sorted by second");
        }
        prev = e.second;
        if (!e.accepted || e.second < 0) {
            continue;
        }
        const auto w = static_cast<int>(e.second / cfg.window_s);
        if (w >= nw) {
            break;
        }
        flush_until(w);
        const auto it = index.find(e.predicted);
        if (it == index.end() || last_second[it->second] == e.second) {
            continue;
        }
        last_second[it->second] = e.second;
        ++count[it->second];
    }
    flush_until(nw);
    std::vector<PresenceWindow> out;
    out.reserve(names.size() * static_cast<std::size_t>(nw));
    for (auto& list : per_student) {
        out.insert(out.end(), list.begin(), list.end());
    }
    return out;
}

std::vector<AbsenceInterval> absence_intervals(const std::vector<PresenceWindow>& windows,
                                               const AnalysisConfig& cfg, double duration_s) {
    std::vector<AbsenceInterval> out;
    const double W = cfg.window_s;
    const auto clip = [&](double t) { return duration_s > 0.0 ? std::min(t, duration_s) : t; };
    for (std::size_t i = 0; i < windows.size();) {
        if (windows[i].present) {
            ++i;
            continue;
        }
        std::size_t j = i + 1;
        while (j < windows.size() && !windows[j].present && windows[j].student == windows[i].student &&
               windows[j].window_idx == windows[j - 1].window_idx + 1) {
            ++j;
        }
        const double start = windows[i].window_idx * W;
        const double end = clip((windows[j - 1].window_idx + 1) * W);
        if (end > start) {
            out.push_back({windows[i].student, start, end});
        }
        i = j;
    }
    return out;
}

std::vector<StudentSummary> consecutive_summary(const std::vector<PresenceWindow>& windows,
                                                const AnalysisConfig& cfg, double duration_s) {
    std::vector<StudentSummary> out;
    for (const auto& w : windows) {
        if (out.empty() || out.back().student != w.student) {
            out.push_back({w.student, 0, 0, 0, 0.0});
        }
        auto& s = out.back();
        s.total_recognitions += w.count;
        (w.present ? s.windows_present : s.windows_absent) += 1;
    }
    for (const auto& iv : absence_intervals(windows, cfg, duration_s)) {
        for (auto& s : out) {
            if (s.student == iv.student) {
                s.longest_consecutive_absence_s = std::max(s.longest_consecutive_absence_s, iv.end_s - iv.start_s);
            }
        }
    }
    return out;
}

void write_events_csv(std::ostream& os, const std::vector<RecognitionEvent>& events) {
    csv::write_row(os, {"second", "row", "col", "face_found", "class", "prob", "accepted"});
    for (const auto& e : events) {
        csv::write_row(os, {std::to_string(e.second), std::to_string(e.cell.row), std::to_string(e.cell.col),
                            e.face_found ? "1" : "0", e.predicted, format_double(e.argmax_prob),
                            e.accepted ? "1" : "0"});
    }
}

std::vector<RecognitionEvent> read_events_csv(std::istream& is) {
    const auto rows = csv::read(is);
    const csv::Row header{"second", "row", "col", "face_found", "class", "prob", "accepted"};
    if (rows.empty() || rows.front() != header) {
        throw InputError("event log must start with the header " + std::string("second,row,col,face_found,class,prob,accepted"));
    }
    std::vector<RecognitionEvent> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (r.size() == 1 && r[0].empty()) {
            continue;
        }
        if (r.size() != header.size()) {
            throw InputError("event log row " + std::to_string(i + 1) + " has " + std::to_string(r.size()) + " fields");
        }
        RecognitionEvent e;
        e.second = parse_int(r[0]);
        e.cell = {static_cast<int>(parse_int(r[1])), static_cast<int>(parse_int(r[2]))};
        e.face_found = r[3] == "1";
        e.predicted = r[4];
        e.argmax_prob = parse_double(r[5]);
        e.accepted = r[6] == "1";
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace proctor
