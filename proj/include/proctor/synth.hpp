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

// Deterministic synthetic gallery recordings with ground truth.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "proctor/core.hpp"

namespace proctor::synth {

struct Span {
    double start_s = 0.0;
    double end_s = 0.0;  // exclusive
};

struct Participant {
    std::string name;              // roster display name
    std::string label;             // text drawn in the name strip; defaults to name
    double join_s = 0.0;
    std::optional<double> leave_s;  // exclusive; absent = stays to the end
    std::vector<Span> absences;    // face hidden, name strip kept
    int identity = -1;             // face identity; -1 = participant index

    const std::string& shown_label() const { return label.empty() ? name : label; }
};

struct SessionScript {
    double duration_s = 60.0;
    double fps = 30.0;
    int width = 1280;
    int height = 720;
    int rows = 5;
    int cols = 5;
    std::uint64_t seed = 1;
    double label_scale = 0.75;  // Hershey simplex; 0.75 gives a 17 px cap height
    std::vector<Participant> participants;

    std::int64_t frame_count() const;

    /// Throws ConfigError for malformed values (spans outside [join, leave),
    /// unknown or duplicate names, non-positive sizes) and CapacityExceeded
    /// when more participants are on screen than there are cells.
    void validate() const;

    static SessionScript from_json(const std::string& text);
    static SessionScript load(const std::filesystem::path& path);
    std::string to_json() const;
};

enum class ReflowKind { join, leave };

struct ReflowEvent {
    ReflowKind kind = ReflowKind::join;
    std::string who;
};

/// Join appends to the end of row-major order; leave removes the participant
/// and shifts everyone after it one position earlier. Throws
/// CapacityExceeded on a join into a full grid and std::invalid_argument on
/// a duplicate join or a leave of someone absent.
std::vector<std::string> reflow_layout(std::vector<std::string> order, const ReflowEvent& event,
                                       int capacity);

/// Participant names in cell order at time t (seconds).
std::vector<std::string> layout_at(const SessionScript& script, double t);

struct CellTruth {
    CellRef cell;
    std::string name;
    std::string label;
    bool face_present = false;
    PixelRect face_box;  // frame coordinates; meaningful when face_present
};

/// Occupied cells of one frame in cell order.
std::vector<CellTruth> frame_truth(const SessionScript& script, std::int64_t frame_idx);

/// Renders frame `frame_idx` (BGR, width x height).
cv::Mat render_frame(const SessionScript& script, std::int64_t frame_idx);

/// Renders one cell image; `with_face` = false gives the person-away view.
cv::Mat render_cell(const SessionScript& script, const Participant& who, std::size_t participant_idx,
                    bool with_face, std::int64_t frame_idx, cv::Size cell_size);

/// Per-participant scripted on-screen seconds with a visible face, for
/// sampled seconds 0..ceil(duration)-1 (a second counts when its first frame
/// shows the face).
std::vector<std::pair<std::string, int>> face_seconds(const SessionScript& script);

struct SynthOutputs {
    std::filesystem::path video;         // video.mp4
    std::filesystem::path ground_truth;  // ground_truth.json
    std::filesystem::path roster;        // roster.csv
    std::int64_t frames = 0;
};

/// Writes video.mp4 (MPEG-4 part 2), ground_truth.json and roster.csv into
/// out_dir. Identical scripts give identical frames. Throws IoError.
SynthOutputs generate_video(const SessionScript& script, const std::filesystem::path& out_dir);

/// Roster of all scripted participants (ids S001, S002, ... in script order).
Roster script_roster(const SessionScript& script);

/// Directory holding the sample face photos; PROCTOR_ASSET_DIR env var
/// overrides the build-time location.
std::filesystem::path asset_dir();

}  // namespace proctor::synth
