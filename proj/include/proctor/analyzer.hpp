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
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "proctor/core.hpp"
#include "proctor/detect.hpp"
#include "proctor/recognizer.hpp"

namespace proctor {

/// Outcome for one (second, cell).
struct RecognitionEvent {
    std::int64_t second = 0;
    CellRef cell;
    bool face_found = false;
    std::string predicted;  // argmax class; empty when no face was found
    double argmax_prob = 0.0;
    bool accepted = false;  // argmax_prob > theta; implies face_found

    /// The recognized student, or nullopt (Rejected).
    std::optional<std::string> accepted_class() const {
        return accepted ? std::optional<std::string>(predicted) : std::nullopt;
    }
    friend bool operator==(const RecognitionEvent&, const RecognitionEvent&) = default;
};

enum class SamplingMode {
    per_second,  // first frame of every second; one classifier call per (second, cell)
    per_frame,   // every frame; the most confident prediction per (second, cell) is kept
};

struct AnalyzeOptions {
    AnalysisConfig analysis;
    SamplingMode mode = SamplingMode::per_second;
    int worker_count = 1;
    double crop_margin = 0.15;
};

struct AnalysisResult {
    std::vector<RecognitionEvent> events;  // sorted by (second, cell index)
    std::int64_t recognizer_calls = 0;     // face images passed to the classifier
    std::int64_t detector_calls = 0;
    std::int64_t frames_processed = 0;
    double duration_s = 0.0;
    double fps = 0.0;
};

/// Runs detection and recognition over the exam video. In per_second mode
/// the classifier sees each (second, cell) at most once. Throws
/// UnreadableVideo/EmptyVideo, ModelLoadError, BackendError, ConfigError.
AnalysisResult analyze_video(const std::filesystem::path& video, const Classifier& classifier,
                             const DetectorFactory& detectors, const AnalyzeOptions& opts);

struct PresenceWindow {
    std::string student;
    int window_idx = 0;
    int count = 0;
    bool present = false;
    friend bool operator==(const PresenceWindow&, const PresenceWindow&) = default;
};

/// ceil(duration_s / window_s), at least 1.
int window_count(double duration_s, int window_s);

/// Per roster student (roster order) and window: count = number of distinct
/// seconds in [w*W, (w+1)*W) with an accepted event naming the student;
/// present iff count > presence_min_count. One pass over the events, which
/// must be sorted by second. Events at or past the last window are ignored.
std::vector<PresenceWindow> window_presence(const std::vector<RecognitionEvent>& events,
                                            const Roster& roster, const AnalysisConfig& cfg,
                                            double duration_s);

struct AbsenceInterval {
    std::string student;
    double start_s = 0.0;
    double end_s = 0.0;
    friend bool operator==(const AbsenceInterval&, const AbsenceInterval&) = default;
};

/// Maximal runs of absent windows as [start, end) seconds, clipped to
/// duration_s. Grouped by student in input order, sorted by start.
std::vector<AbsenceInterval> absence_intervals(const std::vector<PresenceWindow>& windows,
                                               const AnalysisConfig& cfg, double duration_s);

struct StudentSummary {
    std::string student;
    int total_recognitions = 0;
    int windows_present = 0;
    int windows_absent = 0;
    double longest_consecutive_absence_s = 0.0;
    friend bool operator==(const StudentSummary&, const StudentSummary&) = default;
};

/// Per student in input order. The longest absence is the longest absent
/// run, measured on the clipped timeline (a final partial window counts for
/// its real length).
std::vector<StudentSummary> consecutive_summary(const std::vector<PresenceWindow>& windows,
                                                const AnalysisConfig& cfg, double duration_s);

/// `second,row,col,face_found,class,prob,accepted` with a header row.
void write_events_csv(std::ostream& os, const std::vector<RecognitionEvent>& events);
std::vector<RecognitionEvent> read_events_csv(std::istream& is);

}  // namespace proctor
