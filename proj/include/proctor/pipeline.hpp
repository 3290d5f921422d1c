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

// Subcommand implementations shared by the CLI and the integration tests.

#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "proctor/analyzer.hpp"
#include "proctor/config.hpp"
#include "proctor/report.hpp"
#include "proctor/synth.hpp"

namespace proctor {

inline constexpr std::string_view kProctorVersion = "1.0.0";

inline constexpr std::string_view kSubcommands[] = {"build-dataset", "train", "analyze", "report", "all", "synth"};

struct DatasetStageResult {
    BuildStats stats;
    std::vector<MergeRecord> merges;
    std::vector<std::string> classes;  // final, roster names
    std::filesystem::path manifest;
};

struct TrainStageResult {
    double test_accuracy = 0.0;
    std::vector<std::string> classes;
    std::filesystem::path manifest;
};

struct AnalyzeStageResult {
    AnalysisResult analysis;
    std::filesystem::path events_csv;
    std::filesystem::path manifest;
};

struct ReportStageResult {
    ReportBundle bundle;
    std::filesystem::path manifest;
};

/// Harvests, prunes, reconciles and validates the dataset, then writes it to
/// paths.dataset_root with run_manifest.json.
DatasetStageResult run_build_dataset(const PipelineConfig& cfg, std::ostream& log);

/// Trains on paths.dataset_root and saves the classifier at paths.model;
/// the run manifest goes to <model>.run_manifest.json.
TrainStageResult run_train(const PipelineConfig& cfg, std::ostream& log);

/// Analyzes paths.exam_video into out_dir/events.csv and out_dir/analysis.json.
AnalyzeStageResult run_analyze(const PipelineConfig& cfg, std::ostream& log);

/// Renders out_dir/report/ from the files written by run_analyze.
ReportStageResult run_report(const PipelineConfig& cfg, std::ostream& log);

/// Renders the session script (or the demo session) into out_dir.
synth::SynthOutputs run_synth(const PipelineConfig& cfg, std::ostream& log);

/// Three-minute, 5x5, ten-identity session. The exam preset has three
/// absence spans over two students; the training preset has none.
synth::SessionScript demo_session(bool with_absences = true);

/// Runs one subcommand; returns 0 or the exit code of the error class.
/// Errors are reported on `log`.
int run_subcommand(std::string_view subcommand, const PipelineConfig& cfg, std::ostream& log);

}  // namespace proctor
