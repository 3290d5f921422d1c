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

#include "proctor/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "proctor/error.hpp"

namespace proctor {
namespace {

constexpr const char* kBundledCenterFace = "centerface.onnx";
constexpr const char* kCenterFaceSha256 = "09189deaaf8646c5c51a68447e3c744ea1e211798155d4728c20507b9f5aefbc";
constexpr const char* kBundledHaar = "haarcascade_frontalface_default.xml";
constexpr const char* kHaarSha256 = "0f7d4527844eb514d4a4948e822da90fbb16a34a0bbbbc6adc6498747a5aafb0";

std::string fmt_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
    T v{};
    const auto* end = text.data() + text.size();
    const auto r = std::from_chars(text.data(), end, v);
    if (r.ec != std::errc() || r.ptr != end) {
        throw ConfigError("config key " + key + ": '" + text + "' is not a valid number");
    }
    return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1" || text == "yes" || text == "on") {
        return true;
    }
    if (text == "false" || text == "0" || text == "no" || text == "off") {
        return false;
    }
    throw ConfigError("config key " + key + ": '" + text + "' is not a boolean");
}

struct Binding {
    ConfigKey key;
    std::function<std::string(const PipelineConfig&)> get;
    std::function<void(PipelineConfig&, const std::string&)> set;
};

template <class T>
Binding num(std::string section, std::string key, std::string help, T PipelineConfig::*member) {
    ConfigKey k{std::move(section), std::move(key), std::move(help)};
    const auto dotted = k.dotted();
    return {k,
            [member](const PipelineConfig& c) {
                if constexpr (std::is_floating_point_v<T>) {
                    return fmt_double(c.*member);
                } else {
                    return std::to_string(c.*member);
                }
            },
            [member, dotted](PipelineConfig& c, const std::string& v) { c.*member = parse_number<T>(dotted, v); }};
}

template <class T>
Binding num_at(std::string section, std::string key, std::string help, std::function<T&(PipelineConfig&)> at) {
    ConfigKey k{std::move(section), std::move(key), std::move(help)};
    const auto dotted = k.dotted();
    return {k,
            [at](const PipelineConfig& c) {
                auto& v = at(const_cast<PipelineConfig&>(c));
                if constexpr (std::is_floating_point_v<T>) {
                    return fmt_double(v);
                } else {
                    return std::to_string(v);
                }
            },
            [at, dotted](PipelineConfig& c, const std::string& v) { at(c) = parse_number<T>(dotted, v); }};
}

Binding str_at(std::string section, std::string key, std::string help,
               std::function<std::string&(PipelineConfig&)> at) {
    ConfigKey k{std::move(section), std::move(key), std::move(help)};
    return {k, [at](const PipelineConfig& c) { return at(const_cast<PipelineConfig&>(c)); },
            [at](PipelineConfig& c, const std::string& v) { at(c) = v; }};
}

Binding bool_at(std::string section, std::string key, std::string help, std::function<bool&(PipelineConfig&)> at) {
    ConfigKey k{std::move(section), std::move(key), std::move(help)};
    const auto dotted = k.dotted();
    return {k, [at](const PipelineConfig& c) { return std::string(at(const_cast<PipelineConfig&>(c)) ? "true" : "false"); },
            [at, dotted](PipelineConfig& c, const std::string& v) { at(c) = parse_bool(dotted, v); }};
}

const std::vector<Binding>& bindings() {
    using C = PipelineConfig;
    static const std::vector<Binding> table = [] {
        std::vector<Binding> t;
        t.push_back(str_at("paths", "training_video", "recording used to harvest the face dataset",
                           [](C& c) -> std::string& { return c.paths.training_video; }));
        t.push_back(str_at("paths", "exam_video", "exam recording to analyze",
                           [](C& c) -> std::string& { return c.paths.exam_video; }));
        t.push_back(str_at("paths", "roster", "roster CSV (header student_id,name)",
                           [](C& c) -> std::string& { return c.paths.roster; }));
        t.push_back(str_at("paths", "dataset_root", "dataset directory",
                           [](C& c) -> std::string& { return c.paths.dataset_root; }));
        t.push_back(str_at("paths", "model", "classifier stem (<stem>.model, <stem>.manifest.json)",
                           [](C& c) -> std::string& { return c.paths.model; }));
        t.push_back(str_at("paths", "out_dir", "analysis, report and synth output directory",
                           [](C& c) -> std::string& { return c.paths.out_dir; }));
        t.push_back(str_at("paths", "synth_script", "session script JSON for synth (empty = demo session)",
                           [](C& c) -> std::string& { return c.paths.synth_script; }));

        t.push_back(num("grid", "rows", "gallery rows", &C::rows));
        t.push_back(num("grid", "cols", "gallery columns", &C::cols));

        t.push_back({{"detector", "kind", "neural_ssd or haar_cascade"},
                     [](const C& c) { return std::string(to_string(c.detector.kind)); },
                     [](C& c, const std::string& v) { c.detector.kind = parse_detector_kind(v); }});
        t.push_back({{"detector", "model", "model artifact path (empty = bundled model for kind)"},
                     [](const C& c) { return c.detector.model_artifact.string(); },
                     [](C& c, const std::string& v) { c.detector.model_artifact = v; }});
        t.push_back(str_at("detector", "sha256", "expected artifact SHA-256 (empty = unchecked)",
                           [](C& c) -> std::string& { return c.detector.sha256; }));
        t.push_back(num_at<int>("detector", "input_side", "detector input side in pixels",
                                [](C& c) -> int& { return c.detector.input_side; }));
        t.push_back(num_at<double>("detector", "min_confidence", "minimum detection confidence",
                                   [](C& c) -> double& { return c.detector.min_confidence; }));

        t.push_back(str_at("ocr", "engine", "glyph or tesseract", [](C& c) -> std::string& { return c.ocr.engine; }));
        t.push_back(num_at<int>("ocr", "threshold", "binarization threshold (gray < T -> 0)",
                                [](C& c) -> int& { return c.ocr.threshold; }));
        t.push_back(bool_at("ocr", "auto_threshold", "retry with a variance-maximizing split",
                            [](C& c) -> bool& { return c.ocr.auto_threshold; }));
        t.push_back(num_at<int>("ocr", "upscale", "integer upscale factor",
                                [](C& c) -> int& { return c.ocr.upscale_k; }));
        t.push_back(str_at("ocr", "charset", "characters kept in names",
                           [](C& c) -> std::string& { return c.ocr.allowed_charset; }));
        t.push_back(num_at<double>("ocr", "strip_x", "name strip left, fraction of cell width",
                                   [](C& c) -> double& { return c.strip.x_frac; }));
        t.push_back(num_at<double>("ocr", "strip_y", "name strip top, fraction of cell height",
                                   [](C& c) -> double& { return c.strip.y_frac; }));
        t.push_back(num_at<double>("ocr", "strip_w", "name strip width, fraction of cell width",
                                   [](C& c) -> double& { return c.strip.w_frac; }));
        t.push_back(num_at<double>("ocr", "strip_h", "name strip height, fraction of cell height",
                                   [](C& c) -> double& { return c.strip.h_frac; }));

        t.push_back(num("dataset", "sample_every_n", "scan every n-th frame", &C::sample_every_n));
        t.push_back(num("dataset", "workers", "dataset builder workers", &C::dataset_workers));
        t.push_back(num("dataset", "crop_margin", "face crop margin per side", &C::dataset_crop_margin));
        t.push_back(num("dataset", "min_class_size", "classes with fewer samples are pruned", &C::min_class_size));
        t.push_back(num("dataset", "fuzzy_max_dist", "roster match edit-distance limit", &C::fuzzy_max_dist));
        t.push_back(num("dataset", "min_class_frac", "required fraction of roster classes", &C::min_class_frac));

        t.push_back(num_at<int>("train", "epochs", "training epochs", [](C& c) -> int& { return c.train.epochs; }));
        t.push_back(num_at<double>("train", "learning_rate", "Adam learning rate",
                                   [](C& c) -> double& { return c.train.learning_rate; }));
        t.push_back(num_at<int>("train", "batch_size", "mini-batch size",
                                [](C& c) -> int& { return c.train.batch_size; }));
        t.push_back(num_at<int>("train", "input_side", "network input side",
                                [](C& c) -> int& { return c.train.input_side; }));
        t.push_back(str_at("train", "backbone", "resnet-mini or resnet-small",
                           [](C& c) -> std::string& { return c.train.backbone; }));
        t.push_back(bool_at("train", "random_flip", "horizontal flip augmentation",
                            [](C& c) -> bool& { return c.train.augmentation.random_flip; }));
        t.push_back(num_at<double>("train", "rotation_deg", "rotation augmentation range (+/- degrees)",
                                   [](C& c) -> double& { return c.train.augmentation.rotation_deg; }));
        t.push_back(num_at<double>("train", "crop_frac", "random crop side fraction",
                                   [](C& c) -> double& { return c.train.augmentation.crop_frac; }));
        t.push_back(num("train", "train_frac", "training split fraction", &C::train_frac));
        t.push_back(num("train", "val_frac", "validation split fraction", &C::val_frac));

        t.push_back(num_at<double>("analysis", "fps_assumed", "fps when the container reports none",
                                   [](C& c) -> double& { return c.analysis.fps_assumed; }));
        t.push_back(num_at<int>("analysis", "window_s", "presence window length in seconds",
                                [](C& c) -> int& { return c.analysis.window_s; }));
        t.push_back(num_at<int>("analysis", "presence_min_count", "present iff recognitions > this",
                                [](C& c) -> int& { return c.analysis.presence_min_count; }));
        t.push_back(num_at<double>("analysis", "accept_threshold", "accept iff top probability > this",
                                   [](C& c) -> double& { return c.analysis.accept_threshold; }));
        t.push_back(num("analysis", "workers", "analysis workers", &C::analysis_workers));
        t.push_back(num("analysis", "crop_margin", "face crop margin per side", &C::analysis_crop_margin));

        t.push_back(str_at("synth", "preset", "demo session when no script is given: exam or training",
                           [](C& c) -> std::string& { return c.synth_preset; }));

        t.push_back(num("run", "seed", "seed for the split and training", &C::seed));
        return t;
    }();
    return table;
}

const Binding& binding(const std::string& dotted) {
    for (const auto& b : bindings()) {
        if (b.key.dotted() == dotted) {
            return b;
        }
    }
    throw ConfigError("unknown config key '" + dotted + "'");
}

}  // namespace

void PipelineConfig::validate() const {
    if (rows < 1 || cols < 1) {
        throw ConfigError("grid.rows and grid.cols must be >= 1");
    }
    if (detector.input_side < 32) {
        throw ConfigError("detector.input_side must be >= 32");
    }
    if (!(detector.min_confidence >= 0.0 && detector.min_confidence <= 1.0)) {
        throw ConfigError("detector.min_confidence must be in [0, 1]");
    }
    ocr.validate();
    strip.validate();
    if (sample_every_n < 1) {
        throw ConfigError("dataset.sample_every_n must be >= 1");
    }
    if (dataset_workers < 1 || analysis_workers < 1) {
        throw ConfigError("worker counts must be >= 1");
    }
    if (dataset_crop_margin < 0.0 || analysis_crop_margin < 0.0) {
        throw ConfigError("crop margins must be >= 0");
    }
    if (min_class_size < 1) {
        throw ConfigError("dataset.min_class_size must be >= 1");
    }
    if (!(fuzzy_max_dist >= 0.0 && fuzzy_max_dist <= 1.0)) {
        throw ConfigError("dataset.fuzzy_max_dist must be in [0, 1]");
    }
    if (!(min_class_frac > 0.0 && min_class_frac <= 1.0)) {
        throw ConfigError("dataset.min_class_frac must be in (0, 1]");
    }
    train.validate();
    if (!(train_frac > 0.0 && val_frac > 0.0 && train_frac + val_frac < 1.0)) {
        throw ConfigError("train.train_frac and train.val_frac must be > 0 and sum to < 1");
    }
    analysis_config().validate();
    if (synth_preset != "exam" && synth_preset != "training") {
        throw ConfigError("synth.preset must be exam or training");
    }
}

DetectorSpec PipelineConfig::resolved_detector() const {
    DetectorSpec d = detector;
    if (d.model_artifact.empty()) {
        const bool neural = d.kind == DetectorKind::neural_ssd;
        d.model_artifact = std::filesystem::path(PROCTOR_MODEL_DIR) / (neural ? kBundledCenterFace : kBundledHaar);
        if (d.sha256.empty()) {
            d.sha256 = neural ? kCenterFaceSha256 : kHaarSha256;
        }
    }
    return d;
}

DatasetBuildConfig PipelineConfig::dataset_build_config() const {
    DatasetBuildConfig d;
    d.rows = rows;
    d.cols = cols;
    d.detector = resolved_detector();
    d.ocr = ocr;
    d.strip = strip;
    d.sample_every_n = sample_every_n;
    d.worker_count = dataset_workers;
    d.crop_margin = dataset_crop_margin;
    return d;
}

TrainConfig PipelineConfig::train_config() const {
    TrainConfig t = train;
    t.seed = seed;
    return t;
}

AnalysisConfig PipelineConfig::analysis_config() const {
    AnalysisConfig a = analysis;
    a.rows = rows;
    a.cols = cols;
    return a;
}

const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys = [] {
        std::vector<ConfigKey> k;
        for (const auto& b : bindings()) {
            k.push_back(b.key);
        }
        return k;
    }();
    return keys;
}

ConfigValues config_values(const PipelineConfig& cfg) {
    ConfigValues out;
    for (const auto& b : bindings()) {
        out[b.key.dotted()] = b.get(cfg);
    }
    return out;
}

PipelineConfig apply_values(PipelineConfig base, const ConfigValues& values) {
    for (const auto& [k, v] : values) {
        binding(k).set(base, v);
    }
    return base;
}

std::string to_ini(const PipelineConfig& cfg) {
    std::ostringstream os;
    std::string section;
    for (const auto& b : bindings()) {
        if (b.key.section != section) {
            os << (section.empty() ? "" : "\n") << '[' << b.key.section << "]\n";
            section = b.key.section;
        }
        os << "; " << b.key.help << '\n' << b.key.key << " = " << b.get(cfg) << '\n';
    }
    return os.str();
}

ConfigValues read_ini_values(const std::string& text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream is(text);
    try {
        pt::ini_parser::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("malformed config file: ") + e.what());
    }
    ConfigValues out;
    for (const auto& [section, keys] : tree) {
        if (keys.empty()) {
            throw ConfigError("config key '" + section + "' must be inside a [section]");
        }
        for (const auto& [key, node] : keys) {
            const auto dotted = section + "." + key;
            binding(dotted);  // rejects unknown keys
            out[dotted] = node.data();
        }
    }
    return out;
}

PipelineConfig parse_ini(const std::string& text) { return apply_values(PipelineConfig{}, read_ini_values(text)); }

PipelineConfig resolve_config(const std::filesystem::path& file, const ConfigValues& overrides) {
    PipelineConfig cfg;
    if (!file.empty()) {
        std::ifstream f(file);
        if (!f) {
            throw ConfigError("cannot read config file " + file.string());
        }
        std::stringstream ss;
        ss << f.rdbuf();
        cfg = parse_ini(ss.str());
    }
    cfg = apply_values(std::move(cfg), overrides);
    cfg.validate();
    return cfg;
}

}  // namespace proctor
