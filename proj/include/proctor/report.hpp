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
#include <string>
#include <vector>

#include "proctor/analyzer.hpp"

namespace proctor {

inline constexpr int kReportSchemaVersion = 1;

struct ReportInputs {
    Roster roster;
    AnalysisConfig analysis;
    double duration_s = 0.0;
    std::vector<RecognitionEvent> events;
    std::string run_manifest_json = "{}";  // embedded verbatim under "run"
};

struct ReportBundle {
    std::filesystem::path summary_json;
    std::filesystem::path timeline_csv;
    std::filesystem::path recognition_chart;  // per-student seconds with an accepted recognition
    std::filesystem::path presence_chart;     // per-student present windows
    std::filesystem::path absence_chart;      // consecutive-absence timeline
};

/// Writes summary.json, timeline.csv and three SVG charts into out_dir. All
/// numbers derive from the events, so rerunning on the same inputs yields
/// identical files. Throws IoError.
ReportBundle render_report(const ReportInputs& in, const std::filesystem::path& out_dir);

/// summary.json text (exposed for tests).
std::string summary_json(const ReportInputs& in);

}  // namespace proctor
