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

// Pipeline configuration: one INI file, every key mirrored as a
// `--section.key` flag.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "proctor/core.hpp"
#include "proctor/dataset.hpp"
#include "proctor/recognizer.hpp"

namespace proctor {

struct PathsConfig {
    std::string training_video;
    std::string exam_video;
    std::string roster;
    std::string dataset_root = "dataset";
    std::string model = "model/classifier";  // stem: <stem>.model + <stem>.manifest.json
    std::string out_dir = "out";
    std::string synth_script;                // empty = built-in demo session
};

struct PipelineConfig {
    PathsConfig paths;
    int rows = 5;
    int cols = 5;
    std::uint64_t seed = 7;

    /// detector.model empty = the bundled artifact for detector.kind, checked
    /// against its pinned hash.
    DetectorSpec detector;
    OcrConfig ocr;
    NameStripSpec strip;

    std::int64_t sample_every_n = 30;
    int dataset_workers = 1;
    double dataset_crop_margin = 0.15;
    std::size_t min_class_size = 100;
    double fuzzy_max_dist = 0.3;
    double min_class_frac = 0.9;

    TrainConfig train;  // train.seed is taken from `seed`
    double train_frac = 0.7;
    double val_frac = 0.2;

    AnalysisConfig analysis;  // rows/cols are taken from the grid
    int analysis_workers = 1;
    double analysis_crop_margin = 0.15;

    std::string synth_preset = "exam";  // demo session: "exam" or "training"

    /// Throws ConfigError.
    void validate() const;

    DetectorSpec resolved_detector() const;
    DatasetBuildConfig dataset_build_config() const;
    TrainConfig train_config() const;
    AnalysisConfig analysis_config() const;
};

struct ConfigKey {
    std::string section;
    std::string key;
    std::string help;

    std::string dotted() const { return section + "." + key; }
};

/// Every configurable key, in file order.
const std::vector<ConfigKey>& config_keys();

/// section.key -> value text.
using ConfigValues = std::map<std::string, std::string>;

/// Current values of all keys, formatted so that parsing them back gives an
/// identical config.
ConfigValues config_values(const PipelineConfig& cfg);

/// Applies values on top of `base`. Throws ConfigError on an unknown key or a
/// value of the wrong type.
PipelineConfig apply_values(PipelineConfig base, const ConfigValues& values);

/// INI text with every key (sections in config_keys() order).
std::string to_ini(const PipelineConfig& cfg);

/// Parses INI text over the defaults. Throws ConfigError.
PipelineConfig parse_ini(const std::string& text);
ConfigValues read_ini_values(const std::string& text);

/// Defaults, then the file (if non-empty), then the flag overrides; the
/// result is validated. Throws ConfigError, also for an unreadable file.
PipelineConfig resolve_config(const std::filesystem::path& file, const ConfigValues& overrides);

}  // namespace proctor
