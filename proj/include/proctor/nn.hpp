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

// Small convolutional networks on Eigen.
//
// Activations of a batch are stored as a C x (B*H*W) matrix; column
// b*H*W + y*W + x holds the channel vector of pixel (y, x) of image b.

#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace proctor::nn {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

struct Shape {
    int c = 0;
    int h = 0;
    int w = 0;
    int pixels() const { return h * w; }
    friend bool operator==(const Shape&, const Shape&) = default;
};

template <class S>
struct Param {
    Mat<S> value;
    Mat<S> grad;
    Mat<S> m;  // Adam first moment
    Mat<S> v;  // Adam second moment

    void resize(Eigen::Index rows, Eigen::Index cols) {
        value = Mat<S>::Zero(rows, cols);
        grad = Mat<S>::Zero(rows, cols);
        m = Mat<S>::Zero(rows, cols);
        v = Mat<S>::Zero(rows, cols);
    }
};

/// What a layer keeps from forward() for backward().
template <class S>
struct Cache {
    std::vector<Mat<S>> mats;
    std::vector<int> index;
    std::vector<Cache> children;
};

template <class S>
class Layer {
public:
    virtual ~Layer() = default;
    virtual Shape out_shape(Shape in) const = 0;
    /// `cache` is null for inference.
    virtual Mat<S> forward(const Mat<S>& x, Shape in, int batch, Cache<S>* cache) const = 0;
    /// Accumulates parameter gradients and returns d(loss)/d(x).
    virtual Mat<S> backward(const Mat<S>& dy, Shape in, int batch, const Cache<S>& cache) = 0;
    virtual std::vector<Param<S>*> params() { return {}; }
};

template <class S>
class Conv2d final : public Layer<S> {
public:
    Conv2d(int cin, int cout, int k, int stride, int pad)
        : cin_(cin), cout_(cout), k_(k), stride_(stride), pad_(pad) {
        w_.resize(cout, cin * k * k);
        b_.resize(cout, 1);
    }

    template <class Rng>
    void init(Rng& rng, double gain = 1.0) {
        std::normal_distribution<double> n(0.0, gain * std::sqrt(2.0 / (cin_ * k_ * k_)));
        for (Eigen::Index i = 0; i < w_.value.size(); ++i) {
            w_.value.data()[i] = static_cast<S>(n(rng));
        }
        b_.value.setZero();
    }

    Shape out_shape(Shape in) const override {
        return {cout_, (in.h + 2 * pad_ - k_) / stride_ + 1, (in.w + 2 * pad_ - k_) / stride_ + 1};
    }

    Mat<S> forward(const Mat<S>& x, Shape in, int batch, Cache<S>* cache) const override {
        const Shape out = out_shape(in);
        Mat<S> col = im2col(x, in, out, batch);
        Mat<S> y = w_.value * col;
        y.colwise() += b_.value.col(0);
        if (cache) {
            cache->mats = {std::move(col)};
        }
        return y;
    }

    Mat<S> backward(const Mat<S>& dy, Shape in, int batch, const Cache<S>& cache) override {
        const Mat<S>& col = cache.mats.at(0);
        w_.grad.noalias() += dy * col.transpose();
        b_.grad.col(0) += dy.rowwise().sum();
        const Mat<S> dcol = w_.value.transpose() * dy;
        return col2im(dcol, in, out_shape(in), batch);
    }

    std::vector<Param<S>*> params() override { return {&w_, &b_}; }

private:
    Mat<S> im2col(const Mat<S>& x, Shape in, Shape out, int batch) const {
        const int rows = cin_ * k_ * k_;
        Mat<S> col = Mat<S>::Zero(rows, static_cast<Eigen::Index>(batch) * out.pixels());
        for (int b = 0; b < batch; ++b) {
            const Eigen::Index xbase = static_cast<Eigen::Index>(b) * in.pixels();
            for (int oy = 0; oy < out.h; ++oy) {
                for (int ox = 0; ox < out.w; ++ox) {
                    const Eigen::Index j = static_cast<Eigen::Index>(b) * out.pixels() + oy * out.w + ox;
                    S* dst = col.col(j).data();
                    for (int ky = 0; ky < k_; ++ky) {
                        const int iy = oy * stride_ - pad_ + ky;
                        if (iy < 0 || iy >= in.h) {
                            continue;
                        }
                        for (int kx = 0; kx < k_; ++kx) {
                            const int ix = ox * stride_ - pad_ + kx;
                            if (ix < 0 || ix >= in.w) {
                                continue;
                            }
                            const S* src = x.col(xbase + iy * in.w + ix).data();
                            for (int c = 0; c < cin_; ++c) {
                                dst[(c * k_ + ky) * k_ + kx] = src[c];
                            }
                        }
                    }
                }
            }
        }
        return col;
    }

    Mat<S> col2im(const Mat<S>& dcol, Shape in, Shape out, int batch) const {
        Mat<S> dx = Mat<S>::Zero(cin_, static_cast<Eigen::Index>(batch) * in.pixels());
        for (int b = 0; b < batch; ++b) {
            const Eigen::Index xbase = static_cast<Eigen::Index>(b) * in.pixels();
            for (int oy = 0; oy < out.h; ++oy) {
                for (int ox = 0; ox < out.w; ++ox) {
                    const Eigen::Index j = static_cast<Eigen::Index>(b) * out.pixels() + oy * out.w + ox;
                    const S* src = dcol.col(j).data();
                    for (int ky = 0; ky < k_; ++ky) {
                        const int iy = oy * stride_ - pad_ + ky;
                        if (iy < 0 || iy >= in.h) {
                            continue;
                        }
                        for (int kx = 0; kx < k_; ++kx) {
                            const int ix = ox * stride_ - pad_ + kx;
                            if (ix < 0 || ix >= in.w) {
                                continue;
                            }
                            S* dst = dx.col(xbase + iy * in.w + ix).data();
                            for (int c = 0; c < cin_; ++c) {
                                dst[c] += src[(c * k_ + ky) * k_ + kx];
                            }
                        }
                    }
                }
            }
        }
        return dx;
    }

    int cin_, cout_, k_, stride_, pad_;
    Param<S> w_, b_;
};

template <class S>
class Relu final : public Layer<S> {
public:
    Shape out_shape(Shape in) const override { return in; }
    Mat<S> forward(const Mat<S>& x, Shape, int, Cache<S>* cache) const override {
        Mat<S> y = x.cwiseMax(S(0));
        if (cache) {
            cache->mats = {y};
        }
        return y;
    }
    Mat<S> backward(const Mat<S>& dy, Shape, int, const Cache<S>& cache) override {
        return (cache.mats.at(0).array() > S(0)).select(dy, S(0));
    }
};

/// 2x2 max pooling, stride 2; odd trailing rows/columns are dropped.
template <class S>
class MaxPool2 final : public Layer<S> {
public:
    Shape out_shape(Shape in) const override { return {in.c, in.h / 2, in.w / 2}; }

    Mat<S> forward(const Mat<S>& x, Shape in, int batch, Cache<S>* cache) const override {
        const Shape out = out_shape(in);
        Mat<S> y(in.c, static_cast<Eigen::Index>(batch) * out.pixels());
        std::vector<int> arg;
        if (cache) {
            arg.resize(static_cast<std::size_t>(y.size()));
        }
        for (int b = 0; b < batch; ++b) {
            const int xbase = b * in.pixels();
            for (int oy = 0; oy < out.h; ++oy) {
                for (int ox = 0; ox < out.w; ++ox) {
                    const Eigen::Index j = static_cast<Eigen::Index>(b) * out.pixels() + oy * out.w + ox;
                    for (int c = 0; c < in.c; ++c) {
                        int best = xbase + (2 * oy) * in.w + 2 * ox;
                        for (int dy = 0; dy < 2; ++dy) {
                            for (int dx = 0; dx < 2; ++dx) {
                                const int src = xbase + (2 * oy + dy) * in.w + 2 * ox + dx;
                                if (x(c, src) > x(c, best)) {
                                    best = src;
                                }
                            }
                        }
                        y(c, j) = x(c, best);
                        if (cache) {
                            arg[static_cast<std::size_t>(j * in.c + c)] = best;
                        }
                    }
                }
            }
        }
        if (cache) {
            cache->index = std::move(arg);
        }
        return y;
    }

    Mat<S> backward(const Mat<S>& dy, Shape in, int batch, const Cache<S>& cache) override {
        Mat<S> dx = Mat<S>::Zero(in.c, static_cast<Eigen::Index>(batch) * in.pixels());
        for (Eigen::Index j = 0; j < dy.cols(); ++j) {
            for (int c = 0; c < in.c; ++c) {
                dx(c, cache.index[static_cast<std::size_t>(j * in.c + c)]) += dy(c, j);
            }
        }
        return dx;
    }
};

/// relu(x + conv_b(relu(conv_a(x)))), channel- and size-preserving.
template <class S>
class Residual final : public Layer<S> {
public:
    explicit Residual(int channels) : a_(channels, channels, 3, 1, 1), b_(channels, channels, 3, 1, 1) {}

    template <class Rng>
    void init(Rng& rng) {
        a_.init(rng);
        b_.init(rng, 0.5);
    }

    Shape out_shape(Shape in) const override { return in; }

    Mat<S> forward(const Mat<S>& x, Shape in, int batch, Cache<S>* cache) const override {
        Cache<S>* ca = nullptr;
        Cache<S>* cr = nullptr;
        Cache<S>* cb = nullptr;
        Cache<S>* cout = nullptr;
        if (cache) {
            cache->children.assign(4, {});
            ca = &cache->children[0];
            cr = &cache->children[1];
            cb = &cache->children[2];
            cout = &cache->children[3];
        }
        Mat<S> h = a_.forward(x, in, batch, ca);
        h = relu_.forward(h, in, batch, cr);
        h = b_.forward(h, in, batch, cb);
        h += x;
        return relu_.forward(h, in, batch, cout);
    }

    Mat<S> backward(const Mat<S>& dy, Shape in, int batch, const Cache<S>& cache) override {
        const Mat<S> ds = relu_.backward(dy, in, batch, cache.children[3]);
        Mat<S> d = b_.backward(ds, in, batch, cache.children[2]);
        d = relu_.backward(d, in, batch, cache.children[1]);
        d = a_.backward(d, in, batch, cache.children[0]);
        return d + ds;
    }

    std::vector<Param<S>*> params() override {
        auto p = a_.params();
        for (auto* q : b_.params()) {
            p.push_back(q);
        }
        return p;
    }

private:
    Conv2d<S> a_, b_;
    Relu<S> relu_;
};

template <class S>
class GlobalAvgPool final : public Layer<S> {
public:
    Shape out_shape(Shape in) const override { return {in.c, 1, 1}; }
    Mat<S> forward(const Mat<S>& x, Shape in, int batch, Cache<S>*) const override {
        Mat<S> y(in.c, batch);
        for (int b = 0; b < batch; ++b) {
            y.col(b) = x.middleCols(static_cast<Eigen::Index>(b) * in.pixels(), in.pixels()).rowwise().mean();
        }
        return y;
    }
    Mat<S> backward(const Mat<S>& dy, Shape in, int batch, const Cache<S>&) override {
        Mat<S> dx(in.c, static_cast<Eigen::Index>(batch) * in.pixels());
        const S inv = S(1) / static_cast<S>(in.pixels());
        for (int b = 0; b < batch; ++b) {
            dx.middleCols(static_cast<Eigen::Index>(b) * in.pixels(), in.pixels()).colwise() = dy.col(b) * inv;
        }
        return dx;
    }
};

template <class S>
class Linear final : public Layer<S> {
public:
    Linear(int in, int out) : in_(in), out_(out) {
        w_.resize(out, in);
        b_.resize(out, 1);
    }

    template <class Rng>
    void init(Rng& rng) {
        std::normal_distribution<double> n(0.0, std::sqrt(1.0 / in_));
        for (Eigen::Index i = 0; i < w_.value.size(); ++i) {
            w_.value.data()[i] = static_cast<S>(n(rng));
        }
        b_.value.setZero();
    }

    Shape out_shape(Shape) const override { return {out_, 1, 1}; }
    Mat<S> forward(const Mat<S>& x, Shape, int, Cache<S>* cache) const override {
        Mat<S> y = w_.value * x;
        y.colwise() += b_.value.col(0);
        if (cache) {
            cache->mats = {x};
        }
        return y;
    }
    Mat<S> backward(const Mat<S>& dy, Shape, int, const Cache<S>& cache) override {
        w_.grad.noalias() += dy * cache.mats.at(0).transpose();
        b_.grad.col(0) += dy.rowwise().sum();
        return w_.value.transpose() * dy;
    }
    std::vector<Param<S>*> params() override { return {&w_, &b_}; }

private:
    int in_, out_;
    Param<S> w_, b_;
};

/// Column-wise softmax, max-shifted.
template <class S>
Mat<S> softmax_columns(const Mat<S>& logits) {
    Mat<S> p = logits;
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
        const S mx = p.col(j).maxCoeff();
        p.col(j) = (p.col(j).array() - mx).exp();
        p.col(j) /= p.col(j).sum();
    }
    return p;
}

/// Mean cross-entropy over the batch; `grad` receives d(loss)/d(logits).
template <class S>
S cross_entropy(const Mat<S>& logits, const std::vector<int>& labels, Mat<S>* grad) {
    const Mat<S> p = softmax_columns(logits);
    const auto batch = static_cast<S>(logits.cols());
    S loss = 0;
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
        loss -= std::log(std::max(p(labels[static_cast<std::size_t>(j)], j), S(1e-12)));
    }
    if (grad) {
        *grad = p;
        for (Eigen::Index j = 0; j < logits.cols(); ++j) {
            (*grad)(labels[static_cast<std::size_t>(j)], j) -= S(1);
        }
        *grad /= batch;
    }
    return loss / batch;
}

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Feed-forward stack of layers ending in class logits.
template <class S>
class Network {
public:
    /// Known backbones: "resnet-mini" (16/32/64 channels) and "resnet-small"
    /// (32/64/128). Throws std::invalid_argument for anything else.
    static Network make(std::string_view backbone, int classes, int input_side, std::uint64_t seed) {
        int w = 0;
        if (backbone == "resnet-mini") {
            w = 16;
        } else if (backbone == "resnet-small") {
            w = 32;
        } else {
            throw std::invalid_argument("unknown backbone '" + std::string(backbone) + "'");
        }
        if (classes < 1 || input_side < 16) {
            throw std::invalid_argument("network needs >= 1 class and input_side >= 16");
        }
        std::mt19937_64 rng(seed);
        Network net;
        net.in_ = {3, input_side, input_side};
        auto stem = std::make_unique<Conv2d<S>>(3, w, 3, 1, 1);
        stem->init(rng);
        net.layers_.push_back(std::move(stem));
        net.layers_.push_back(std::make_unique<Relu<S>>());
        net.layers_.push_back(std::make_unique<MaxPool2<S>>());
        int c = w;
        for (int stage = 0; stage < 3; ++stage) {
            if (stage > 0) {
                auto down = std::make_unique<Conv2d<S>>(c, 2 * c, 3, 2, 1);
                down->init(rng);
                net.layers_.push_back(std::move(down));
                net.layers_.push_back(std::make_unique<Relu<S>>());
                c *= 2;
            }
            if (stage < 2) {
                auto res = std::make_unique<Residual<S>>(c);
                res->init(rng);
                net.layers_.push_back(std::move(res));
            }
        }
        net.layers_.push_back(std::make_unique<GlobalAvgPool<S>>());
        auto fc = std::make_unique<Linear<S>>(c, classes);
        fc->init(rng);
        net.layers_.push_back(std::move(fc));
        net.classes_ = classes;
        return net;
    }

    Shape input_shape() const { return in_; }
    int classes() const { return classes_; }

    /// Logits, classes x batch.
    Mat<S> forward(const Mat<S>& x, int batch) const {
        Mat<S> h = x;
        Shape s = in_;
        for (const auto& l : layers_) {
            h = l->forward(h, s, batch, nullptr);
            s = l->out_shape(s);
        }
        return h;
    }

    /// Forward + backward; gradients are overwritten. Returns the mean loss.
    S compute_gradients(const Mat<S>& x, const std::vector<int>& labels) {
        const int batch = static_cast<int>(labels.size());
        for (auto* p : params()) {
            p->grad.setZero();
        }
        std::vector<Cache<S>> caches(layers_.size());
        std::vector<Shape> shapes{in_};
        Mat<S> h = x;
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            h = layers_[i]->forward(h, shapes.back(), batch, &caches[i]);
            shapes.push_back(layers_[i]->out_shape(shapes.back()));
        }
        Mat<S> d;
        const S loss = cross_entropy<S>(h, labels, &d);
        for (std::size_t i = layers_.size(); i-- > 0;) {
            d = layers_[i]->backward(d, shapes[i], batch, caches[i]);
        }
        return loss;
    }

    void adam_step(const AdamConfig& cfg) {
        ++step_;
        const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step_));
        const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step_));
        const S lr = static_cast<S>(cfg.learning_rate * std::sqrt(c2) / c1);
        const S b1 = static_cast<S>(cfg.beta1);
        const S b2 = static_cast<S>(cfg.beta2);
        const S eps = static_cast<S>(cfg.eps);
        for (auto* p : params()) {
            p->m = b1 * p->m + (S(1) - b1) * p->grad;
            p->v = b2 * p->v + (S(1) - b2) * p->grad.cwiseProduct(p->grad);
            p->value.array() -= lr * p->m.array() / (p->v.array().sqrt() + eps);
        }
    }

    std::vector<Param<S>*> params() {
        std::vector<Param<S>*> out;
        for (auto& l : layers_) {
            for (auto* p : l->params()) {
                out.push_back(p);
            }
        }
        return out;
    }

    std::size_t parameter_count() {
        std::size_t n = 0;
        for (auto* p : params()) {
            n += static_cast<std::size_t>(p->value.size());
        }
        return n;
    }

private:
    Shape in_;
    int classes_ = 0;
    std::int64_t step_ = 0;
    std::vector<std::unique_ptr<Layer<S>>> layers_;
};

}  // namespace proctor::nn
