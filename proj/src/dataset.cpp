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

#include "proctor/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

#include <opencv2/imgcodecs.hpp>

#include "json.hpp"
#include "proctor/error.hpp"
#include "proctor/pool.hpp"
#include "proctor/video.hpp"

namespace proctor {
namespace {

using nlohmann::json;

struct SecondBatch {
    std::int64_t second = 0;
    std::vector<Frame> frames;
};

struct SecondResult {
    std::vector<FaceSample> samples;
    std::int64_t frames = 0;
    std::int64_t faces = 0;
    std::int64_t ocr_calls = 0;
    std::int64_t ocr_failures = 0;
};

void check_config(const DatasetBuildConfig& cfg) {
    if (cfg.sample_every_n < 1) {
        throw ConfigError("dataset.sample_every_n must be >= 1");
    }
    if (cfg.worker_count < 1) {
        throw ConfigError("dataset.workers must be >= 1");
    }
    if (cfg.crop_margin < 0.0 || cfg.crop_margin > 1.0) {
        throw ConfigError("dataset.crop_margin must be in [0, 1]");
    }
    cfg.ocr.validate();
    cfg.strip.validate();
}

std::string sample_file_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06zu.png", i + 1);
    return buf;
}

}  // namespace

bool provenance_less(const FaceSample& a, const FaceSample& b) {
    if (a.frame_idx != b.frame_idx) {
        return a.frame_idx < b.frame_idx;
    }
    return a.cell < b.cell;
}

std::size_t LabeledDataset::sample_count() const {
    std::size_t n = 0;
    for (const auto& [name, samples] : classes) {
        n += samples.size();
    }
    return n;
}

BuildResult build_dataset(const std::filesystem::path& video, const Roster& roster,
                          const DatasetBuildConfig& cfg) {
    return build_dataset(video, roster, cfg, detector_factory(cfg.detector));
}

BuildResult build_dataset(const std::filesystem::path& video, const Roster& roster,
                          const DatasetBuildConfig& cfg, const DetectorFactory& detectors) {
    check_config(cfg);
    if (roster.empty()) {
        throw InputError("roster is empty");
    }
    VideoReader reader(video);
    const GridLayout layout(cfg.rows, cfg.cols, reader.meta().width, reader.meta().height);
    const auto cells = partition_frame(layout);
    const double fps = reader.meta().fps;

    std::vector<std::unique_ptr<FaceDetector>> dets;
    std::vector<std::unique_ptr<OcrEngine>> engines;
    for (int w = 0; w < cfg.worker_count; ++w) {
        dets.push_back(detectors());
        if (w == 0 || !engines.front()->concurrent_safe()) {
            engines.push_back(make_ocr_engine(cfg.ocr.engine));
        }
    }

    std::optional<Frame> lookahead = reader.next_sampled(cfg.sample_every_n);
    const std::function<std::optional<SecondBatch>()> produce = [&]() -> std::optional<SecondBatch> {
        if (!lookahead) {
            return std::nullopt;
        }
        SecondBatch batch;
        batch.second = second_of_frame(lookahead->index, fps);
        while (lookahead && second_of_frame(lookahead->index, fps) == batch.second) {
            batch.frames.push_back(std::move(*lookahead));
            lookahead = reader.next_sampled(cfg.sample_every_n);
        }
        return batch;
    };

    const std::function<SecondResult(SecondBatch&, int)> work = [&](SecondBatch& batch, int w) {
        SecondResult out;
        FaceDetector& det = *dets[static_cast<std::size_t>(w)];
        const OcrEngine& engine = *engines[std::min(engines.size() - 1, static_cast<std::size_t>(w))];
        // Name strips are read at most once per (second, cell).
        std::vector<std::optional<std::optional<CleanName>>> names(cells.size());
        for (const auto& frame : batch.frames) {
            ++out.frames;
            for (std::size_t c = 0; c < cells.size(); ++c) {
                const auto& r = cells[c];
                const cv::Mat cell_img = frame.image(cv::Rect(r.x, r.y, r.w, r.h));
                const auto found = det.detect(cell_img);
                const auto best = best_detection(found);
                if (!best) {
                    continue;
                }
                ++out.faces;
                if (!names[c]) {
                    ++out.ocr_calls;
                    names[c] = read_cell_name(cell_img, cfg.strip, cfg.ocr, engine);
                    if (!*names[c]) {
                        ++out.ocr_failures;
                    }
                }
                if (!*names[c]) {
                    continue;
                }
                FaceSample s;
                s.cell = cell_from_index(static_cast<int>(c), layout);
                s.frame_idx = frame.index;
                s.raw_label = (*names[c])->text;
                s.detection_conf = best->confidence;
                s.image = crop_face(cell_img, *best, cfg.crop_margin);
                out.samples.push_back(std::move(s));
            }
        }
        return out;
    };

    BuildResult result;
    const std::function<void(SecondResult&&)> commit = [&](SecondResult&& r) {
        result.stats.frames_scanned += r.frames;
        result.stats.faces_detected += r.faces;
        result.stats.ocr_calls += r.ocr_calls;
        result.stats.ocr_failures += r.ocr_failures;
        for (auto& s : r.samples) {
            result.dataset.classes[s.raw_label].push_back(std::move(s));
        }
    };
    run_ordered<SecondBatch, SecondResult>(cfg.worker_count, produce, work, commit);
    result.stats.classes_before_prune = static_cast<std::int64_t>(result.dataset.classes.size());
    result.stats.classes_after_prune = result.stats.classes_before_prune;
    return result;
}

LabeledDataset prune_small_classes(LabeledDataset ds, std::size_t min_count) {
    std::erase_if(ds.classes, [&](const auto& kv) { return kv.second.size() < min_count; });
    return ds;
}

std::string_view to_string(MatchKind kind) {
    switch (kind) {
    case MatchKind::exact: return "exact";
    case MatchKind::substring: return "substring";
    case MatchKind::fuzzy: return "fuzzy";
    case MatchKind::unmatched: return "unmatched";
    case MatchKind::ambiguous: return "ambiguous";
    }
    return "unknown";
}

double normalized_edit_distance(std::string_view a, std::string_view b) {
    const std::size_t longest = std::max(a.size(), b.size());
    if (longest == 0) {
        return 0.0;
    }
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) {
        prev[j] = j;
    }
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return static_cast<double>(prev[b.size()]) / static_cast<double>(longest);
}

ReconcileResult reconcile_with_roster(LabeledDataset ds, const Roster& roster, double fuzzy_max_dist) {
    if (roster.empty()) {
        throw InputError("roster is empty");
    }
    std::vector<std::string> norm;
    for (const auto& r : roster.records()) {
        norm.push_back(normalize_name(r.display_name));
    }
    const auto& records = roster.records();

    ReconcileResult out;
    out.dataset.root = ds.root;
    for (auto& [name, samples] : ds.classes) {
        MergeRecord rec;
        rec.from = name;
        rec.samples = samples.size();
        const std::string key = normalize_name(name);

        std::vector<std::size_t> contained;
        for (std::size_t i = 0; i < norm.size(); ++i) {
            if (!norm[i].empty() && key.find(norm[i]) != std::string::npos) {
                contained.push_back(i);
            }
        }
        if (contained.size() == 1) {
            rec.to = records[contained[0]].display_name;
            rec.kind = key == norm[contained[0]] ? MatchKind::exact : MatchKind::substring;
        } else if (contained.size() > 1) {
            rec.kind = MatchKind::ambiguous;
        } else {
            double best = 2.0;
            std::size_t best_i = 0;
            int ties = 0;
            for (std::size_t i = 0; i < norm.size(); ++i) {
                const double d = normalized_edit_distance(key, norm[i]);
                if (d < best - 1e-12) {
                    best = d;
                    best_i = i;
                    ties = 1;
                } else if (std::abs(d - best) <= 1e-12) {
                    ++ties;
                }
            }
            if (best <= fuzzy_max_dist + 1e-12) {
                rec.distance = best;
                if (ties > 1) {
                    rec.kind = MatchKind::ambiguous;
                } else {
                    rec.kind = MatchKind::fuzzy;
                    rec.to = records[best_i].display_name;
                }
            } else {
                rec.kind = MatchKind::unmatched;
            }
        }

        if (rec.to.empty()) {
            out.dropped_samples += samples.size();
        } else {
            auto& dst = out.dataset.classes[rec.to];
            dst.insert(dst.end(), std::make_move_iterator(samples.begin()),
                       std::make_move_iterator(samples.end()));
        }
        out.report.push_back(std::move(rec));
    }
    for (auto& [name, samples] : out.dataset.classes) {
        std::stable_sort(samples.begin(), samples.end(), provenance_less);
    }
    return out;
}

void validate_dataset(const LabeledDataset& ds, const Roster& roster, double min_class_frac,
                      std::size_t min_count) {
    const auto needed = static_cast<std::size_t>(
        std::ceil(min_class_frac * static_cast<double>(roster.size()) - 1e-9));
    std::size_t short_classes = 0;
    for (const auto& [name, samples] : ds.classes) {
        if (samples.size() < min_count) {
            ++short_classes;
        }
    }
    if (ds.classes.empty() || ds.classes.size() < needed || short_classes > 0) {
        std::ostringstream msg;
        msg << "training video too short: " << ds.classes.size() - short_classes << " of "
            << roster.size() << " roster students have at least " << min_count
            << " face samples (need " << std::max<std::size_t>(needed, 1)
            << "). Delete the dataset directory and upload a longer training video.";
        throw TooShortVideo(msg.str());
    }
}

void write_dataset(LabeledDataset& ds, const std::filesystem::path& root, const std::string& extra_json) {
    namespace fs = std::filesystem;
    json extra;
    try {
        extra = json::parse(extra_json);
    } catch (const json::exception& e) {
        throw InputError(std::string("invalid manifest extras: ") + e.what());
    }
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec) {
        throw IoError("cannot create dataset root " + root.string() + ": " + ec.message());
    }
    json classes = json::object();
    for (auto& [name, samples] : ds.classes) {
        const fs::path dir = root / name;
        fs::remove_all(dir, ec);
        fs::create_directories(dir, ec);
        if (ec) {
            throw IoError("cannot create " + dir.string() + ": " + ec.message());
        }
        json list = json::array();
        for (std::size_t i = 0; i < samples.size(); ++i) {
            auto& s = samples[i];
            if (s.image.empty()) {
                s.image = load_sample_image(ds, s);
            }
            const std::string ref = name + "/" + sample_file_name(i);
            if (!cv::imwrite((root / ref).string(), s.image)) {
                throw IoError("cannot write " + (root / ref).string());
            }
            s.image_ref = ref;
            list.push_back({{"file", ref},
                            {"frame_idx", s.frame_idx},
                            {"row", s.cell.row},
                            {"col", s.cell.col},
                            {"detection_conf", s.detection_conf},
                            {"raw_label", s.raw_label}});
        }
        classes[name] = std::move(list);
    }
    ds.root = root;
    json manifest = extra.is_object() ? extra : json::object();
    manifest["schema_version"] = kDatasetSchemaVersion;
    manifest["classes"] = std::move(classes);
    std::ofstream f(root / "manifest.json");
    f << manifest.dump(2) << '\n';
    if (!f) {
        throw IoError("cannot write " + (root / "manifest.json").string());
    }
}

LabeledDataset load_dataset(const std::filesystem::path& root) {
    const auto path = root / "manifest.json";
    std::ifstream f(path);
    if (!f) {
        throw InputError("dataset manifest not found: " + path.string());
    }
    json manifest;
    try {
        f >> manifest;
    } catch (const json::exception& e) {
        throw InputError("malformed dataset manifest " + path.string() + ": " + e.what());
    }
    if (manifest.value("schema_version", 0) != kDatasetSchemaVersion) {
        throw InputError("unsupported dataset manifest schema in " + path.string());
    }
    LabeledDataset ds;
    ds.root = root;
    try {
        for (const auto& [name, list] : manifest.at("classes").items()) {
            auto& samples = ds.classes[name];
            for (const auto& e : list) {
                FaceSample s;
                s.image_ref = e.at("file").get<std::string>();
                s.frame_idx = e.at("frame_idx").get<std::int64_t>();
                s.cell = {e.at("row").get<int>(), e.at("col").get<int>()};
                s.detection_conf = e.at("detection_conf").get<double>();
                s.raw_label = e.at("raw_label").get<std::string>();
                samples.push_back(std::move(s));
            }
            if (samples.empty()) {
                ds.classes.erase(name);
            }
        }
    } catch (const json::exception& e) {
        throw InputError("malformed dataset manifest " + path.string() + ": " + e.what());
    }
    return ds;
}

cv::Mat load_sample_image(const LabeledDataset& ds, const FaceSample& sample) {
    if (!sample.image.empty()) {
        return sample.image;
    }
    const auto path = ds.root / sample.image_ref;
    cv::Mat img = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (img.empty()) {
        throw InputError("cannot read dataset image " + path.string());
    }
    return img;
}

}  // namespace proctor
