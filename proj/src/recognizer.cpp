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

#include "proctor/recognizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include <opencv2/imgproc.hpp>

#include "json.hpp"
#include "proctor/error.hpp"
#include "proctor/hash.hpp"
#include "proctor/nn.hpp"

namespace proctor {
namespace {

using nlohmann::json;
using Net = nn::Network<float>;

constexpr char kModelMagic[8] = {'P', 'L', 'N', 'N', 'v', '1', 0, 0};
constexpr std::size_t kInferenceChunk = 64;

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

cv::Mat to_bgr(const cv::Mat& image) {
    if (image.channels() == 3) {
        return image;
    }
    cv::Mat out;
    cv::cvtColor(image, out, image.channels() == 4 ? cv::COLOR_BGRA2BGR : cv::COLOR_GRAY2BGR);
    return out;
}

struct Normalization {
    std::array<double, 3> mean{0.5, 0.5, 0.5};
    std::array<double, 3> std{0.25, 0.25, 0.25};
};

/// Stacks prepared side x side BGR images into a 3 x (B*side*side) tensor.
nn::Mat<float> to_tensor(const std::vector<cv::Mat>& images, std::size_t begin, std::size_t end,
                         int side, const Normalization& norm) {
    const Eigen::Index pixels = static_cast<Eigen::Index>(side) * side;
    nn::Mat<float> x(3, static_cast<Eigen::Index>(end - begin) * pixels);
    std::array<float, 3> scale{}, shift{};
    for (int c = 0; c < 3; ++c) {
        scale[static_cast<std::size_t>(c)] = static_cast<float>(1.0 / (255.0 * norm.std[static_cast<std::size_t>(c)]));
        shift[static_cast<std::size_t>(c)] = static_cast<float>(norm.mean[static_cast<std::size_t>(c)] / norm.std[static_cast<std::size_t>(c)]);
    }
    for (std::size_t b = begin; b < end; ++b) {
        const cv::Mat& img = images[b];
        const Eigen::Index base = static_cast<Eigen::Index>(b - begin) * pixels;
        for (int y = 0; y < side; ++y) {
            const auto* row = img.ptr<cv::Vec3b>(y);
            for (int xx = 0; xx < side; ++xx) {
                float* dst = x.col(base + y * side + xx).data();
                for (int c = 0; c < 3; ++c) {
                    dst[c] = row[xx][c] * scale[static_cast<std::size_t>(c)] - shift[static_cast<std::size_t>(c)];
                }
            }
        }
    }
    return x;
}

class NetModel final : public LogitModel {
public:
    NetModel(Net net, Normalization norm) : net_(std::move(net)), norm_(norm) {}

    std::vector<std::vector<double>> logits(const std::vector<cv::Mat>& images) const override {
        const int side = net_.input_shape().h;
        std::vector<cv::Mat> prepared;
        prepared.reserve(images.size());
        for (const auto& img : images) {
            prepared.push_back(prepare_eval_input(img, side));
        }
        return logits_prepared(prepared);
    }

    std::vector<std::vector<double>> logits_prepared(const std::vector<cv::Mat>& prepared) const {
        const int side = net_.input_shape().h;
        std::vector<std::vector<double>> out;
        out.reserve(prepared.size());
        for (std::size_t b = 0; b < prepared.size(); b += kInferenceChunk) {
            const std::size_t e = std::min(prepared.size(), b + kInferenceChunk);
            const nn::Mat<float> z = net_.forward(to_tensor(prepared, b, e, side, norm_), static_cast<int>(e - b));
            for (Eigen::Index j = 0; j < z.cols(); ++j) {
                out.emplace_back(z.col(j).data(), z.col(j).data() + z.rows());
            }
        }
        return out;
    }

    int classes() const override { return net_.classes(); }
    Net& net() { return net_; }
    const Normalization& normalization() const { return norm_; }

    void write(std::ostream& os) const {
        os.write(kModelMagic, sizeof kModelMagic);
        auto params = const_cast<Net&>(net_).params();
        const auto count = static_cast<std::uint32_t>(params.size());
        os.write(reinterpret_cast<const char*>(&count), sizeof count);
        for (const auto* p : params) {
            const auto rows = static_cast<std::uint32_t>(p->value.rows());
            const auto cols = static_cast<std::uint32_t>(p->value.cols());
            os.write(reinterpret_cast<const char*>(&rows), sizeof rows);
            os.write(reinterpret_cast<const char*>(&cols), sizeof cols);
            os.write(reinterpret_cast<const char*>(p->value.data()),
                     static_cast<std::streamsize>(sizeof(float) * p->value.size()));
        }
    }

    void read(std::istream& is) {
        char magic[sizeof kModelMagic];
        is.read(magic, sizeof magic);
        if (!is || std::memcmp(magic, kModelMagic, sizeof magic) != 0) {
            throw InputError("not a model file (bad magic)");
        }
        std::uint32_t count = 0;
        is.read(reinterpret_cast<char*>(&count), sizeof count);
        auto params = net_.params();
        if (!is || count != params.size()) {
            throw InputError("model file does not match the manifest's backbone");
        }
        for (auto* p : params) {
            std::uint32_t rows = 0, cols = 0;
            is.read(reinterpret_cast<char*>(&rows), sizeof rows);
            is.read(reinterpret_cast<char*>(&cols), sizeof cols);
            if (!is || rows != p->value.rows() || cols != p->value.cols()) {
                throw InputError("model tensor shape mismatch");
            }
            is.read(reinterpret_cast<char*>(p->value.data()),
                    static_cast<std::streamsize>(sizeof(float) * p->value.size()));
            if (!is) {
                throw InputError("truncated model file");
            }
        }
    }

private:
    Net net_;
    Normalization norm_;
};

class FnModel final : public LogitModel {
public:
    FnModel(int classes, std::function<std::vector<double>(const cv::Mat&)> fn)
        : classes_(classes), fn_(std::move(fn)) {}
    std::vector<std::vector<double>> logits(const std::vector<cv::Mat>& images) const override {
        std::vector<std::vector<double>> out;
        for (const auto& img : images) {
            out.push_back(fn_(img));
        }
        return out;
    }
    int classes() const override { return classes_; }

private:
    int classes_;
    std::function<std::vector<double>(const cv::Mat&)> fn_;
};

json train_config_json(const TrainConfig& cfg) {
    return {{"epochs", cfg.epochs},
            {"learning_rate", cfg.learning_rate},
            {"batch_size", cfg.batch_size},
            {"seed", cfg.seed},
            {"input_side", cfg.input_side},
            {"backbone", cfg.backbone},
            {"augmentation",
             {{"random_flip", cfg.augmentation.random_flip},
              {"rotation_deg", cfg.augmentation.rotation_deg},
              {"crop_frac", cfg.augmentation.crop_frac}}}};
}

std::filesystem::path stem_of(const std::filesystem::path& p) {
    std::string s = p.string();
    for (const std::string suffix : {".manifest.json", ".model"}) {
        if (s.size() > suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0) {
            return s.substr(0, s.size() - suffix.size());
        }
    }
    return p;
}

}  // namespace

SplitSizes split_sizes(std::size_t n, double train_frac, double val_frac) {
    if (train_frac < 0 || val_frac < 0 || train_frac + val_frac > 1.0 + 1e-12) {
        throw std::invalid_argument("split fractions must be >= 0 and sum to <= 1");
    }
    // Small epsilon so 0.7 * 10 lands on 7 despite binary rounding.
    const auto floor_of = [n](double f) {
        return static_cast<std::size_t>(std::floor(f * static_cast<double>(n) + 1e-9));
    };
    SplitSizes s;
    s.train = floor_of(train_frac);
    s.val = floor_of(val_frac);
    s.test = n - s.train - s.val;
    return s;
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
    if (n == 0) {
        throw std::invalid_argument("uniform_index: empty range");
    }
    const std::uint64_t range = n;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % range;
    std::uint64_t v = 0;
    do {
        v = rng();
    } while (v >= limit);
    return static_cast<std::size_t>(v % range);
}

DatasetSplit split_dataset(const LabeledDataset& ds, std::uint64_t seed, double train_frac,
                           double val_frac) {
    std::vector<SampleRef> all;
    for (const auto& [name, samples] : ds.classes) {
        for (std::size_t i = 0; i < samples.size(); ++i) {
            all.push_back({name, i});
        }
    }
    const auto sizes = split_sizes(all.size(), train_frac, val_frac);
    if (sizes.train == 0 || sizes.val == 0 || sizes.test == 0) {
        throw DatasetTooSmall("dataset of " + std::to_string(all.size()) +
                              " samples cannot be split into non-empty train/val/test parts");
    }
    std::mt19937_64 rng(seed);
    for (std::size_t i = all.size(); i > 1; --i) {
        std::swap(all[i - 1], all[uniform_index(rng, i)]);
    }
    DatasetSplit split;
    split.seed = seed;
    const auto b = all.begin();
    split.train.assign(b, b + static_cast<long>(sizes.train));
    split.val.assign(b + static_cast<long>(sizes.train), b + static_cast<long>(sizes.train + sizes.val));
    split.test.assign(b + static_cast<long>(sizes.train + sizes.val), all.end());
    return split;
}

void TrainConfig::validate() const {
    if (epochs < 1) {
        throw ConfigError("train.epochs must be >= 1");
    }
    if (!(learning_rate > 0.0)) {
        throw ConfigError("train.learning_rate must be > 0");
    }
    if (batch_size < 1) {
        throw ConfigError("train.batch_size must be >= 1");
    }
    if (input_side < 16) {
        throw ConfigError("train.input_side must be >= 16");
    }
    if (backbone == "resnet50") {
        throw ConfigError("backbone 'resnet50' is not available in this build; use resnet-mini or resnet-small");
    }
    if (backbone != "resnet-mini" && backbone != "resnet-small") {
        throw ConfigError("unknown backbone '" + backbone + "'");
    }
    if (!(augmentation.crop_frac > 0.0 && augmentation.crop_frac <= 1.0)) {
        throw ConfigError("train.crop_frac must be in (0, 1]");
    }
    if (augmentation.rotation_deg < 0.0) {
        throw ConfigError("train.rotation_deg must be >= 0");
    }
}

Prediction prediction_from_logits(const std::vector<double>& logits,
                                  const std::vector<std::string>& class_names) {
    if (logits.empty() || logits.size() != class_names.size()) {
        throw BackendError("model returned " + std::to_string(logits.size()) + " scores for " +
                           std::to_string(class_names.size()) + " classes");
    }
    Prediction p;
    const double mx = *std::max_element(logits.begin(), logits.end());
    p.probs.resize(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p.probs[i] = std::exp(logits[i] - mx);
        sum += p.probs[i];
    }
    for (auto& v : p.probs) {
        v /= sum;
    }
    for (std::size_t i = 1; i < p.probs.size(); ++i) {
        if (p.probs[i] > p.probs[p.argmax_index]) {
            p.argmax_index = i;
        }
    }
    p.argmax_class = class_names[p.argmax_index];
    p.argmax_prob = p.probs[p.argmax_index];
    return p;
}

Classifier::Classifier(std::vector<std::string> class_names, std::shared_ptr<const LogitModel> model,
                       std::string manifest_json)
    : class_names_(std::move(class_names)), model_(std::move(model)), manifest_(std::move(manifest_json)) {
    if (class_names_.empty()) {
        throw InputError("classifier needs at least one class");
    }
    auto sorted = class_names_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw InputError("classifier class names must be unique");
    }
    if (!model_ || model_->classes() != static_cast<int>(class_names_.size())) {
        throw InputError("classifier model output size does not match the class list");
    }
}

Classifier Classifier::from_logit_fn(std::vector<std::string> class_names,
                                     std::function<std::vector<double>(const cv::Mat&)> fn) {
    const int k = static_cast<int>(class_names.size());
    return Classifier(std::move(class_names), std::make_shared<FnModel>(k, std::move(fn)));
}

Prediction Classifier::predict(const cv::Mat& face) const {
    if (face.empty()) {
        throw std::invalid_argument("predict: empty image");
    }
    return predict_batch({face}).front();
}

std::vector<Prediction> Classifier::predict_batch(const std::vector<cv::Mat>& faces) const {
    for (const auto& f : faces) {
        if (f.empty()) {
            throw std::invalid_argument("predict: empty image");
        }
    }
    std::vector<std::vector<double>> z;
    try {
        z = model_->logits(faces);
    } catch (const cv::Exception& e) {
        throw BackendError(std::string("inference failed: ") + e.what());
    }
    std::vector<Prediction> out;
    out.reserve(z.size());
    for (const auto& l : z) {
        out.push_back(prediction_from_logits(l, class_names_));
    }
    return out;
}

void Classifier::save(const std::filesystem::path& path) const {
    const auto* net = dynamic_cast<const NetModel*>(model_.get());
    if (!net) {
        throw InputError("only trained classifiers can be saved");
    }
    const auto stem = stem_of(path);
    if (stem.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(stem.parent_path(), ec);
    }
    const std::filesystem::path model_path = stem.string() + ".model";
    const std::filesystem::path manifest_path = stem.string() + ".manifest.json";
    {
        std::ofstream f(model_path, std::ios::binary);
        net->write(f);
        if (!f) {
            throw IoError("cannot write " + model_path.string());
        }
    }
    json m = json::parse(manifest_);
    m["model_file"] = model_path.filename().string();
    m["model_sha256"] = sha256_file(model_path);
    std::ofstream f(manifest_path);
    f << m.dump(2) << '\n';
    if (!f) {
        throw IoError("cannot write " + manifest_path.string());
    }
}

Classifier Classifier::load(const std::filesystem::path& path) {
    const auto stem = stem_of(path);
    const std::filesystem::path model_path = stem.string() + ".model";
    const std::filesystem::path manifest_path = stem.string() + ".manifest.json";
    std::ifstream mf(manifest_path);
    if (!mf) {
        throw InputError("model manifest not found: " + manifest_path.string());
    }
    json m;
    try {
        mf >> m;
        if (m.at("schema_version").get<int>() != kModelSchemaVersion) {
            throw InputError("unsupported model manifest schema in " + manifest_path.string());
        }
        const auto names = m.at("class_names").get<std::vector<std::string>>();
        const int side = m.at("input_side").get<int>();
        Normalization norm;
        norm.mean = m.at("normalization").at("mean").get<std::array<double, 3>>();
        norm.std = m.at("normalization").at("std").get<std::array<double, 3>>();
        if (m.contains("model_sha256") && std::filesystem::exists(model_path) &&
            sha256_file(model_path) != m["model_sha256"].get<std::string>()) {
            throw InputError("model file hash does not match its manifest: " + model_path.string());
        }
        Net net = Net::make(m.at("backbone").get<std::string>(), static_cast<int>(names.size()), side, 0);
        auto model = std::make_shared<NetModel>(std::move(net), norm);
        std::ifstream f(model_path, std::ios::binary);
        if (!f) {
            throw InputError("model file not found: " + model_path.string());
        }
        model->read(f);
        m.erase("model_file");
        m.erase("model_sha256");
        return Classifier(names, std::move(model), m.dump());
    } catch (const json::exception& e) {
        throw InputError("malformed model manifest " + manifest_path.string() + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw InputError(std::string("bad model manifest: ") + e.what());
    }
}

std::optional<std::string> accept_prediction(const Prediction& pred, double theta) {
    if (!(theta >= 0.0 && theta <= 1.0)) {
        throw std::invalid_argument("acceptance threshold must be in [0, 1]");
    }
    if (pred.argmax_prob > theta) {
        return pred.argmax_class;
    }
    return std::nullopt;
}

cv::Mat prepare_eval_input(const cv::Mat& image, int input_side) {
    if (image.empty()) {
        throw std::invalid_argument("prepare_eval_input: empty image");
    }
    const cv::Mat bgr = to_bgr(image);
    cv::Mat out;
    const bool shrink = bgr.cols > input_side || bgr.rows > input_side;
    cv::resize(bgr, out, {input_side, input_side}, 0, 0, shrink ? cv::INTER_AREA : cv::INTER_LINEAR);
    return out;
}

cv::Mat augment_train_input(const cv::Mat& image, const AugmentConfig& cfg, int input_side,
                            std::mt19937_64& rng) {
    cv::Mat img = to_bgr(image).clone();
    if (cfg.random_flip && uniform01(rng) < 0.5) {
        cv::flip(img, img, 1);
    }
    if (cfg.rotation_deg > 0.0) {
        const double angle = (2.0 * uniform01(rng) - 1.0) * cfg.rotation_deg;
        const cv::Mat rot = cv::getRotationMatrix2D({img.cols / 2.0f, img.rows / 2.0f}, angle, 1.0);
        cv::warpAffine(img, img, rot, img.size(), cv::INTER_LINEAR, cv::BORDER_REFLECT_101);
    }
    if (cfg.crop_frac < 1.0) {
        const int w = std::max(1, static_cast<int>(std::lround(img.cols * cfg.crop_frac)));
        const int h = std::max(1, static_cast<int>(std::lround(img.rows * cfg.crop_frac)));
        const int x = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(img.cols - w + 1)));
        const int y = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(img.rows - h + 1)));
        img = img(cv::Rect(x, y, w, h));
    }
    return prepare_eval_input(img, input_side);
}

TrainResult train(const LabeledDataset& ds, const DatasetSplit& split, const TrainConfig& cfg,
                  const TrainHooks& hooks) {
    cfg.validate();
    if (ds.classes.size() < 2) {
        throw DatasetTooSmall("training needs at least 2 classes, got " + std::to_string(ds.classes.size()));
    }
    if (split.train.empty() || split.val.empty() || split.test.empty()) {
        throw DatasetTooSmall("every split part must be non-empty");
    }
    std::vector<std::string> names;
    std::map<std::string, int> label_of;
    for (const auto& [name, samples] : ds.classes) {
        label_of[name] = static_cast<int>(names.size());
        names.push_back(name);
    }
    const auto decode = [&](const SampleRef& r) {
        const auto it = ds.classes.find(r.class_name);
        if (it == ds.classes.end() || r.index >= it->second.size()) {
            throw InputError("split refers to a missing sample " + r.class_name + "#" + std::to_string(r.index));
        }
        return load_sample_image(ds, it->second[r.index]);
    };
    const int side = cfg.input_side;
    std::vector<cv::Mat> train_raw;
    std::vector<int> train_labels;
    for (const auto& r : split.train) {
        train_raw.push_back(to_bgr(decode(r)));
        train_labels.push_back(label_of.at(r.class_name));
    }
    const auto prepare_part = [&](const std::vector<SampleRef>& refs) {
        std::vector<cv::Mat> out;
        for (const auto& r : refs) {
            out.push_back(prepare_eval_input(decode(r), side));
        }
        return out;
    };
    const auto val_inputs = prepare_part(split.val);
    const auto test_inputs = prepare_part(split.test);

    Normalization norm;
    {
        std::array<double, 3> sum{}, sq{};
        double count = 0;
        for (const auto& img : train_raw) {
            const cv::Mat p = prepare_eval_input(img, side);
            for (int y = 0; y < p.rows; ++y) {
                const auto* row = p.ptr<cv::Vec3b>(y);
                for (int x = 0; x < p.cols; ++x) {
                    for (int c = 0; c < 3; ++c) {
                        const double v = row[x][c] / 255.0;
                        sum[static_cast<std::size_t>(c)] += v;
                        sq[static_cast<std::size_t>(c)] += v * v;
                    }
                }
            }
            count += p.rows * p.cols;
        }
        for (std::size_t c = 0; c < 3; ++c) {
            norm.mean[c] = sum[c] / count;
            norm.std[c] = std::max(1e-3, std::sqrt(std::max(0.0, sq[c] / count - norm.mean[c] * norm.mean[c])));
        }
    }

    auto model = std::make_shared<NetModel>(
        Net::make(cfg.backbone, static_cast<int>(names.size()), side, cfg.seed), norm);
    Net& net = model->net();
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    nn::AdamConfig adam;
    adam.learning_rate = cfg.learning_rate;

    const auto accuracy = [&](const std::vector<cv::Mat>& inputs, const std::vector<SampleRef>& refs,
                              std::string_view part) {
        if (hooks.on_input) {
            for (std::size_t i = 0; i < inputs.size(); ++i) {
                hooks.on_input(part, refs[i], inputs[i]);
            }
        }
        const auto z = model->logits_prepared(inputs);
        std::size_t hits = 0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            const auto p = prediction_from_logits(z[i], names);
            hits += p.argmax_class == refs[i].class_name ? 1 : 0;
        }
        return static_cast<double>(hits) / static_cast<double>(z.size());
    };

    TrainResult result{Classifier(names, model), {}, 0.0};
    std::vector<std::size_t> order(train_raw.size());
    const auto batch_size = static_cast<std::size_t>(cfg.batch_size);
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[uniform_index(rng, i)]);
        }
        double loss_sum = 0.0;
        for (std::size_t b = 0; b < order.size(); b += batch_size) {
            const std::size_t e = std::min(order.size(), b + batch_size);
            std::vector<cv::Mat> inputs;
            std::vector<int> labels;
            for (std::size_t i = b; i < e; ++i) {
                const std::size_t k = order[i];
                inputs.push_back(augment_train_input(train_raw[k], cfg.augmentation, side, rng));
                labels.push_back(train_labels[k]);
                if (hooks.on_input) {
                    hooks.on_input("train", split.train[k], inputs.back());
                }
            }
            const float loss = net.compute_gradients(to_tensor(inputs, 0, inputs.size(), side, norm), labels);
            if (!std::isfinite(loss)) {
                throw BackendError("training diverged (non-finite loss)");
            }
            net.adam_step(adam);
            loss_sum += static_cast<double>(loss) * static_cast<double>(e - b);
        }
        EpochStats st{epoch, loss_sum / static_cast<double>(order.size()), accuracy(val_inputs, split.val, "val")};
        result.history.push_back(st);
        if (hooks.on_epoch) {
            hooks.on_epoch(st);
        }
    }
    result.test_accuracy = accuracy(test_inputs, split.test, "test");

    json m;
    m["schema_version"] = kModelSchemaVersion;
    m["class_names"] = names;
    m["input_side"] = side;
    m["normalization"] = {{"mean", norm.mean}, {"std", norm.std}};
    m["backbone"] = cfg.backbone;
    m["train_config"] = train_config_json(cfg);
    m["train_config_hash"] = sha256_hex(train_config_json(cfg).dump());
    m["parameter_count"] = net.parameter_count();
    m["split"] = {{"seed", split.seed},
                  {"train", split.train.size()},
                  {"val", split.val.size()},
                  {"test", split.test.size()}};
    json hist = json::array();
    for (const auto& h : result.history) {
        hist.push_back({{"epoch", h.epoch}, {"train_loss", h.train_loss}, {"val_accuracy", h.val_accuracy}});
    }
    m["history"] = hist;
    m["test_accuracy"] = result.test_accuracy;
    result.classifier = Classifier(names, model, m.dump());
    return result;
}

double evaluate_accuracy(const Classifier& clf, const LabeledDataset& ds, const std::vector<SampleRef>& refs) {
    if (refs.empty()) {
        return 0.0;
    }
    std::vector<cv::Mat> images;
    for (const auto& r : refs) {
        images.push_back(load_sample_image(ds, ds.classes.at(r.class_name).at(r.index)));
    }
    const auto preds = clf.predict_batch(images);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < refs.size(); ++i) {
        hits += preds[i].argmax_class == refs[i].class_name ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(refs.size());
}

}  // namespace proctor
