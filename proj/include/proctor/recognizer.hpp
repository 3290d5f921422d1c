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

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <opencv2/core.hpp>

#include "proctor/dataset.hpp"

namespace proctor {

inline constexpr int kModelSchemaVersion = 1;

struct SampleRef {
    std::string class_name;
    std::size_t index = 0;  // position in ds.classes[class_name]
    friend bool operator==(const SampleRef&, const SampleRef&) = default;
};

struct SplitSizes {
    std::size_t train = 0;
    std::size_t val = 0;
    std::size_t test = 0;
};

/// train = floor(train_frac * n), val = floor(val_frac * n), test = rest.
SplitSizes split_sizes(std::size_t n, double train_frac = 0.7, double val_frac = 0.2);

struct DatasetSplit {
    std::vector<SampleRef> train;
    std::vector<SampleRef> val;
    std::vector<SampleRef> test;
    std::uint64_t seed = 0;
};

/// Uniform index in [0, n) by rejection sampling; portable across standard
/// libraries, unlike std::uniform_int_distribution.
std::size_t uniform_index(std::mt19937_64& rng, std::size_t n);

/// Shuffles all samples (classes in name order, samples in stored order)
/// with a seeded Fisher-Yates pass and cuts the result by split_sizes().
/// Throws DatasetTooSmall when any part would be empty.
DatasetSplit split_dataset(const LabeledDataset& ds, std::uint64_t seed, double train_frac = 0.7,
                           double val_frac = 0.2);

struct AugmentConfig {
    bool random_flip = true;        // horizontal, p = 0.5
    double rotation_deg = 10.0;     // uniform in [-deg, +deg]
    double crop_frac = 0.875;       // side of the random square crop, relative
};

struct TrainConfig {
    int epochs = 10;
    double learning_rate = 1e-3;
    int batch_size = 32;
    std::uint64_t seed = 7;
    int input_side = 48;
    std::string backbone = "resnet-mini";
    AugmentConfig augmentation;

    /// Throws ConfigError.
    void validate() const;
};

struct Prediction {
    std::vector<double> probs;
    std::size_t argmax_index = 0;
    std::string argmax_class;
    double argmax_prob = 0.0;
};

/// Probabilities from raw scores; ties in argmax go to the lowest index.
Prediction prediction_from_logits(const std::vector<double>& logits,
                                  const std::vector<std::string>& class_names);

/// Opaque score function behind a Classifier. Implementations must be safe
/// for concurrent calls.
class LogitModel {
public:
    virtual ~LogitModel() = default;
    /// One logit vector per image, each of length classes().
    virtual std::vector<std::vector<double>> logits(const std::vector<cv::Mat>& images) const = 0;
    virtual int classes() const = 0;
};

/// Closed-set face classifier: a LogitModel plus the class order and a JSON
/// manifest. Read-only after construction; predict() may run concurrently.
class Classifier {
public:
    Classifier(std::vector<std::string> class_names, std::shared_ptr<const LogitModel> model,
               std::string manifest_json = "{}");

    /// Stub with injectable logits, for tests.
    static Classifier from_logit_fn(std::vector<std::string> class_names,
                                    std::function<std::vector<double>(const cv::Mat&)> fn);

    /// Reads `<stem>.model` and `<stem>.manifest.json`; `path` may name either
    /// file or the stem. Throws InputError (missing/corrupt) or BackendError.
    static Classifier load(const std::filesystem::path& path);

    /// Writes `<stem>.model` and `<stem>.manifest.json`. Only classifiers
    /// produced by train() or load() are serializable. Throws IoError.
    void save(const std::filesystem::path& stem) const;

    const std::vector<std::string>& class_names() const noexcept { return class_names_; }
    /// JSON text.
    const std::string& manifest() const noexcept { return manifest_; }

    /// Throws std::invalid_argument on an empty image; BackendError on a
    /// model failure.
    Prediction predict(const cv::Mat& face) const;
    std::vector<Prediction> predict_batch(const std::vector<cv::Mat>& faces) const;

private:
    std::vector<std::string> class_names_;
    std::shared_ptr<const LogitModel> model_;
    std::string manifest_;
};

/// argmax_class iff argmax_prob > theta; nullopt = Rejected.
/// Throws std::invalid_argument unless 0 <= theta <= 1.
std::optional<std::string> accept_prediction(const Prediction& pred, double theta);

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_accuracy = 0.0;
};

struct TrainHooks {
    /// Called with every network input image (after preprocessing and, for
    /// "train", augmentation). `part` is "train", "val" or "test".
    std::function<void(std::string_view part, const SampleRef& ref, const cv::Mat& input)> on_input;
    /// Called after every epoch.
    std::function<void(const EpochStats&)> on_epoch;
};

struct TrainResult {
    Classifier classifier;
    std::vector<EpochStats> history;
    double test_accuracy = 0.0;
};

/// Deterministic resize (and 3-channel conversion) applied to every image
/// before it reaches the network at evaluation time.
cv::Mat prepare_eval_input(const cv::Mat& image, int input_side);

/// Random flip / rotation / crop, then the evaluation resize.
cv::Mat augment_train_input(const cv::Mat& image, const AugmentConfig& cfg, int input_side,
                            std::mt19937_64& rng);

/// Trains a fresh network on split.train, tracking val accuracy per epoch,
/// and reports accuracy on split.test. Class order is ds class-name order.
/// Throws DatasetTooSmall (empty part or < 2 classes), ConfigError,
/// InputError (undecodable sample).
TrainResult train(const LabeledDataset& ds, const DatasetSplit& split, const TrainConfig& cfg,
                  const TrainHooks& hooks = {});

/// Fraction of refs whose argmax class equals the stored class.
double evaluate_accuracy(const Classifier& clf, const LabeledDataset& ds,
                         const std::vector<SampleRef>& refs);

}  // namespace proctor
