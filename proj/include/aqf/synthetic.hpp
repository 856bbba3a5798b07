#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "aqf/tensor.hpp"
#include "aqf/workload.hpp"

// Fixed-seed synthetic layer suites standing in for model checkpoints.
// Three weight-distribution families, from narrow to wide spread:
//   resnet-like:      narrow Gaussian, range [-0.78, 1.32]
//   seq2seq-like:     Laplacian tails, range [-2.21, 2.39]
//   transformer-like: Gaussian mixture with outliers, range [-12.46, 20.41]
// Each suite injects its exact range endpoints (scaled per layer) so the
// derived exponent biases are reproducible, and every layer is generated
// from a recorded seed.

namespace aqf::synthetic {

inline constexpr unsigned kResnetSeed = 101;
inline constexpr unsigned kSeq2SeqSeed = 202;
inline constexpr unsigned kTransformerSeed = 303;
inline constexpr unsigned kWorkloadSeed = 404;

namespace detail {

// mt19937 driven directly; std::*_distribution is implementation-defined,
// which would break byte-identical reruns across standard libraries.
class Rng {
public:
    explicit Rng(unsigned seed) : gen_(seed) {}

    double uniform01() { return (static_cast<double>(gen_()) + 0.5) * 0x1p-32; }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double laplace(double b) {
        const double u = uniform01() - 0.5;
        return -b * (u < 0 ? -1.0 : 1.0) * std::log(1.0 - 2.0 * std::abs(u));
    }

private:
    std::mt19937 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

inline constexpr double kLayerSpread[8] = {1.0, 0.5, 0.7, 0.35, 0.9, 0.45, 0.6, 0.8};
inline constexpr double kSigmaJitter[8] = {1.0, 0.85, 1.1, 0.9, 1.05, 0.95, 1.15, 0.8};

inline TensorF32 finish_layer(std::string name, std::vector<float> data, double lo, double hi) {
    for (float& v : data) v = std::clamp(v, static_cast<float>(lo), static_cast<float>(hi));
    // Pin the exact endpoints so max|W| (and with it the exponent bias) is
    // a known constant for the layer.
    data[0] = static_cast<float>(hi);
    data[1] = static_cast<float>(lo);
    TensorF32 t;
    t.name = std::move(name);
    t.shape = {static_cast<std::uint32_t>(data.size())};
    t.data = std::move(data);
    return t;
}

} // namespace detail

inline std::vector<TensorF32> resnet_like_suite(unsigned seed = kResnetSeed,
                                                std::size_t layer_size = 4096) {
    std::vector<TensorF32> layers;
    for (int i = 0; i < 8; ++i) {
        detail::Rng rng(seed + static_cast<unsigned>(i));
        const double s = detail::kLayerSpread[i];
        std::vector<float> data(layer_size);
        for (float& v : data)
            v = static_cast<float>(0.15 * detail::kSigmaJitter[i] * s * rng.normal());
        layers.push_back(detail::finish_layer("resnet/conv_" + std::to_string(i), std::move(data),
                                              -0.78 * s, 1.32 * s));
    }
    return layers;
}

inline std::vector<TensorF32> seq2seq_like_suite(unsigned seed = kSeq2SeqSeed,
                                                 std::size_t layer_size = 4096) {
    std::vector<TensorF32> layers;
    for (int i = 0; i < 8; ++i) {
        detail::Rng rng(seed + static_cast<unsigned>(i));
        const double s = detail::kLayerSpread[i];
        std::vector<float> data(layer_size);
        for (float& v : data)
            v = static_cast<float>(rng.laplace(0.28 * detail::kSigmaJitter[i] * s));
        layers.push_back(detail::finish_layer("seq2seq/lstm_" + std::to_string(i), std::move(data),
                                              -2.21 * s, 2.39 * s));
    }
    return layers;
}

// Two embedding-like layers carry the model's full [-12.46, 20.41] range;
// the attention/fc layers are narrower, the way the per-layer biases of the
// real model spread over a few octaves.
inline std::vector<TensorF32> transformer_like_suite(unsigned seed = kTransformerSeed,
                                                     std::size_t layer_size = 4096) {
    std::vector<TensorF32> layers;
    for (int i = 0; i < 8; ++i) {
        detail::Rng rng(seed + static_cast<unsigned>(i));
        const bool wide = i < 2;
        const double s = wide ? (i == 0 ? 1.0 : 0.8) : 0.15 * detail::kLayerSpread[i];
        std::vector<float> data(layer_size);
        for (float& v : data) {
            const bool outlier = rng.uniform01() < 0.05;
            const double sigma = (outlier ? 4.0 : 0.9) * detail::kSigmaJitter[i] * s;
            v = static_cast<float>(sigma * rng.normal());
        }
        layers.push_back(detail::finish_layer("transformer/attn_" + std::to_string(i),
                                              std::move(data), -12.46 * s, 20.41 * s));
    }
    return layers;
}

inline std::vector<TensorF32> suite_by_name(std::string_view name, unsigned seed = 0) {
    if (name == "resnet") return resnet_like_suite(seed ? seed : kResnetSeed);
    if (name == "seq2seq") return seq2seq_like_suite(seed ? seed : kSeq2SeqSeed);
    if (name == "transformer") return transformer_like_suite(seed ? seed : kTransformerSeed);
    throw ConfigError("unknown synthetic suite: " + std::string(name));
}

// Wide-spread-weight LSTM at desk scale.  Weights and input features are
// both Gaussian mixtures with heavy outlier components, the regime where a
// fixed-point grid starves the bulk of the distribution.
inline wl::Workload lstm_wide_workload(int hidden = 32, int timesteps = 100, int input = 32,
                                       unsigned seed = kWorkloadSeed) {
    detail::Rng rng(seed);
    wl::Workload w;
    w.kind = wl::Workload::Kind::lstm;
    w.timesteps = timesteps;
    w.input_size = input;
    w.hidden_size = hidden;

    const int rows = 4 * hidden, cols = input + hidden;
    w.weights.name = "lstm/weights";
    w.weights.shape = {static_cast<std::uint32_t>(rows), static_cast<std::uint32_t>(cols)};
    w.weights.data.resize(static_cast<std::size_t>(rows) * cols);
    for (float& v : w.weights.data) {
        const bool outlier = rng.uniform01() < 0.05;
        v = static_cast<float>((outlier ? 2.3 : 0.22) * rng.normal());
    }
    w.bias.name = "lstm/bias";
    w.bias.shape = {static_cast<std::uint32_t>(rows)};
    w.bias.data.resize(rows);
    for (float& v : w.bias.data) v = static_cast<float>(0.05 * rng.normal());

    w.inputs.name = "lstm/inputs";
    w.inputs.shape = {static_cast<std::uint32_t>(timesteps), static_cast<std::uint32_t>(input)};
    w.inputs.data.resize(static_cast<std::size_t>(timesteps) * input);
    for (float& v : w.inputs.data) {
        const bool outlier = rng.uniform01() < 0.12;
        v = static_cast<float>(
            std::clamp((outlier ? 0.9 : 0.12) * rng.normal(), -2.2, 2.2));
    }
    return w;
}

// Identity-weight GEMV whose inputs live in the top three octaves of the
// activation format, where the post-accumulator integer window is lossless.
inline wl::Workload identity_gemv_workload(int size = 16, int timesteps = 8,
                                           unsigned seed = kWorkloadSeed + 1) {
    detail::Rng rng(seed);
    wl::Workload w;
    w.kind = wl::Workload::Kind::gemv;
    w.timesteps = timesteps;
    w.input_size = size;
    w.hidden_size = size;
    w.act = pe::Activation::identity;

    w.weights.name = "gemv/identity";
    w.weights.shape = {static_cast<std::uint32_t>(size), static_cast<std::uint32_t>(size)};
    w.weights.data.assign(static_cast<std::size_t>(size) * size, 0.0f);
    for (int i = 0; i < size; ++i) w.weights.data[static_cast<std::size_t>(i) * size + i] = 1.0f;

    w.bias.name = "gemv/bias";
    w.bias.shape = {static_cast<std::uint32_t>(size)};
    w.bias.data.assign(size, 0.0f);

    w.inputs.name = "gemv/inputs";
    w.inputs.shape = {static_cast<std::uint32_t>(timesteps), static_cast<std::uint32_t>(size)};
    w.inputs.data.resize(static_cast<std::size_t>(timesteps) * size);
    for (float& v : w.inputs.data) {
        const double mag = 0.3 + 1.6 * rng.uniform01();
        v = static_cast<float>(rng.uniform01() < 0.5 ? -mag : mag);
    }
    // Pin the calibrated range to a fixed, exactly-representable endpoint.
    w.inputs.data[0] = 1.9375f;
    return w;
}

} // namespace aqf::synthetic
