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
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <opencv2/core.hpp>

#include "proctor/core.hpp"
#include "proctor/detect.hpp"
#include "proctor/ocr.hpp"

namespace proctor {

inline constexpr int kDatasetSchemaVersion = 1;

/// One labeled face crop.
///
/// While a dataset is being built the crop lives in `image`; after
/// write_dataset() or load_dataset() `image_ref` names the file relative to
/// the dataset root and `image` may be empty.
struct FaceSample {
    std::string image_ref;
    CellRef cell;
    std::int64_t frame_idx = 0;
    std::string raw_label;
    double detection_conf = 0.0;
    cv::Mat image;
};

/// Provenance order: (frame_idx, cell).
bool provenance_less(const FaceSample& a, const FaceSample& b);

struct LabeledDataset {
    std::map<std::string, std::vector<FaceSample>> classes;
    std::filesystem::path root;

    std::size_t sample_count() const;
};

struct BuildStats {
    std::int64_t frames_scanned = 0;
    std::int64_t faces_detected = 0;
    std::int64_t ocr_calls = 0;
    std::int64_t ocr_failures = 0;
    std::int64_t classes_before_prune = 0;
    std::int64_t classes_after_prune = 0;
    std::int64_t merges_substring = 0;
    std::int64_t merges_fuzzy = 0;
    std::int64_t dropped_non_roster = 0;
    std::int64_t dropped_ambiguous = 0;
};

struct DatasetBuildConfig {
    int rows = 5;
    int cols = 5;
    DetectorSpec detector;
    OcrConfig ocr;
    NameStripSpec strip;
    std::int64_t sample_every_n = 30;
    int worker_count = 1;
    double crop_margin = 0.15;  // fraction of the box added on each side
};

struct BuildResult {
    LabeledDataset dataset;
    BuildStats stats;
};

/// Scans sampled frames of a gallery recording; each cell with a detected
/// face and a readable name strip yields one FaceSample under the cleaned
/// name. The strip of a cell is read at most once per second of video. The
/// result (including sample order) does not depend on worker_count.
///
/// Throws UnreadableVideo/EmptyVideo, ModelLoadError, EngineUnavailable,
/// ConfigError (bad config) and InputError (empty roster).
BuildResult build_dataset(const std::filesystem::path& video, const Roster& roster,
                          const DatasetBuildConfig& cfg);

/// Same, with an explicit detector source (one detector per worker).
BuildResult build_dataset(const std::filesystem::path& video, const Roster& roster,
                          const DatasetBuildConfig& cfg, const DetectorFactory& detectors);

/// Keep a class iff it has at least `min_count` samples.
LabeledDataset prune_small_classes(LabeledDataset ds, std::size_t min_count = 100);

enum class MatchKind { exact, substring, fuzzy, unmatched, ambiguous };

std::string_view to_string(MatchKind kind);

struct MergeRecord {
    std::string from;
    std::string to;  // empty when dropped
    MatchKind kind = MatchKind::unmatched;
    double distance = 0.0;  // normalized edit distance for fuzzy matches
    std::size_t samples = 0;
};

struct ReconcileResult {
    LabeledDataset dataset;
    std::vector<MergeRecord> report;  // one record per input class, input order
    std::size_t dropped_samples = 0;
};

/// Levenshtein distance divided by the longer length; 0 for two empty strings.
double normalized_edit_distance(std::string_view a, std::string_view b);

/// Maps every class onto a roster display name, in three passes: substring
/// (the class name contains a normalized roster name), then nearest
/// normalized edit distance if <= fuzzy_max_dist, else drop. A class that
/// contains two or more roster names, or ties in the fuzzy pass, is dropped
/// as ambiguous. Merged sample lists are kept in provenance order.
///
/// Throws InputError for an empty roster.
ReconcileResult reconcile_with_roster(LabeledDataset ds, const Roster& roster,
                                      double fuzzy_max_dist = 0.3);

/// Throws TooShortVideo unless the dataset has at least
/// ceil(min_class_frac * |roster|) classes and every class has at least
/// min_count samples.
void validate_dataset(const LabeledDataset& ds, const Roster& roster, double min_class_frac,
                      std::size_t min_count);

/// Writes root/<class>/NNNNNN.png plus root/manifest.json and fills in every
/// image_ref. Existing contents of the class directories are replaced.
/// `extra` is merged into the manifest's top-level object (JSON text).
/// Throws IoError.
void write_dataset(LabeledDataset& ds, const std::filesystem::path& root,
                   const std::string& extra_json = "{}");

/// Reads root/manifest.json; images are not decoded. Throws InputError.
LabeledDataset load_dataset(const std::filesystem::path& root);

/// Decodes a stored sample (or returns the in-memory crop). Throws InputError.
cv::Mat load_sample_image(const LabeledDataset& ds, const FaceSample& sample);

}  // namespace proctor
