#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "aqf/quantize.hpp"

// Per-layer quantization error analysis: RMSE against fp32, format sweeps,
// exponent-width search, and activation-range calibration.

namespace aqf {

struct LayerStats {
    std::string layer;
    FormatKind format = FormatKind::AdaptivFloat;
    int n = 0;
    int e = 0;
    double bias_or_scale = 0.0;
    double rms = 0.0;
    double min = 0.0;
    double max = 0.0;
};

// Quartiles with linear interpolation between order statistics (type 7),
// so summaries reproduce bit for bit.
struct ErrorDistribution {
    double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0, mean = 0.0;
    std::size_t count = 0;
};

inline double quantile_type7(std::span<const double> sorted, double p) {
    if (sorted.empty()) return 0.0;
    const double h = static_cast<double>(sorted.size() - 1) * p;
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + (h - lo) * (sorted[lo + 1] - sorted[lo]);
}

inline ErrorDistribution summarize(std::span<const double> values) {
    ErrorDistribution d;
    d.count = values.size();
    if (values.empty()) return d;
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    d.min = v.front();
    d.max = v.back();
    d.q1 = quantile_type7(v, 0.25);
    d.median = quantile_type7(v, 0.5);
    d.q3 = quantile_type7(v, 0.75);
    double sum = 0.0;
    for (double x : v) sum += x;
    d.mean = sum / static_cast<double>(v.size());
    return d;
}

inline double rms_error(const TensorF32& w, const QuantizedTensor& q) {
    if (w.shape != q.shape || w.data.size() != q.count)
        throw DataError("rms_error: tensor '" + w.name + "' shape does not match quantized data");
    double sum = 0.0;
    for (std::size_t i = 0; i < q.count; ++i) {
        const double d = static_cast<double>(w.data[i]) - decode_value(q.code(i), q.params);
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(q.count));
}

// Exponent widths the models in the source comparisons settled on: 3 bits
// for adaptivfloat, 4 for float and 1 for posit, each dropping by one when
// the word shrinks to 4 bits.
inline int default_exp_bits(FormatKind kind, int n) {
    switch (kind) {
        case FormatKind::AdaptivFloat:  return std::min(3, n - 1);
        case FormatKind::IeeeLikeFloat: return n > 4 ? 4 : 3;
        case FormatKind::Posit:         return n > 4 ? 1 : 0;
        default:                        return 0;
    }
}

inline double bias_or_scale_of(const QuantizedTensor& q) {
    switch (q.params.spec.kind) {
        case FormatKind::AdaptivFloat:
        case FormatKind::BlockFloat: return static_cast<double>(q.params.exp_bias);
        case FormatKind::Uniform:    return static_cast<double>(q.params.scale);
        default:                     return 0.0;
    }
}

// Full cross product of layers x formats x widths, in that order.
inline std::vector<LayerStats> layer_sweep(std::span<const TensorF32> layers,
                                           std::span<const FormatKind> formats,
                                           std::span<const int> widths) {
    if (layers.empty() || formats.empty() || widths.empty())
        throw ConfigError("layer_sweep: layers, formats and widths must be non-empty");
    std::vector<int> ns(widths.begin(), widths.end());
    std::sort(ns.begin(), ns.end());

    std::vector<LayerStats> rows;
    rows.reserve(layers.size() * formats.size() * ns.size());
    for (const TensorF32& layer : layers) {
        for (FormatKind kind : formats) {
            for (int n : ns) {
                try {
                    FormatSpec spec{kind, n, default_exp_bits(kind, n)};
                    const QuantizedTensor q = quantize_tensor(layer, spec);
                    LayerStats row;
                    row.layer = layer.name;
                    row.format = kind;
                    row.n = n;
                    row.e = spec.uses_exponent() ? spec.e : 0;
                    row.bias_or_scale = bias_or_scale_of(q);
                    row.rms = rms_error(layer, q);
                    const auto [mn, mx] = std::minmax_element(layer.data.begin(), layer.data.end());
                    row.min = *mn;
                    row.max = *mx;
                    rows.push_back(std::move(row));
                } catch (const Error& err) {
                    throw DataError("layer '" + layer.name + "': " + err.what());
                }
            }
        }
    }
    return rows;
}

// Exponent width minimizing mean RMSE across the layers; ties go to the
// smaller width.  Formats without an exponent field report 0.
inline int exponent_search(std::span<const TensorF32> layers, int n, FormatKind kind) {
    if (layers.empty())
        throw ConfigError("exponent_search: need at least one layer");
    const int e_lo = kind == FormatKind::Posit ? 0 : 1;
    const int e_hi = kind == FormatKind::Posit ? n - 3 : n - 1;
    FormatSpec probe{kind, n, e_lo};
    probe.validate();
    if (!probe.uses_exponent()) return 0;
    int best_e = e_lo;
    double best_mean = std::numeric_limits<double>::infinity();
    for (int e = e_lo; e <= e_hi; ++e) {
        double sum = 0.0;
        for (const TensorF32& layer : layers)
            sum += rms_error(layer, quantize_tensor(layer, FormatSpec{kind, n, e}));
        const double mean = sum / static_cast<double>(layers.size());
        if (mean < best_mean) {
            best_mean = mean;
            best_e = e;
        }
    }
    return best_e;
}

// Activation-range statistics gathered over offline calibration batches:
// a running max of |A| with the bias derived once at the end.
struct CalibrationRecord {
    std::string name;
    double observed_max = 0.0;
    int exp_bias = 0;
    bool degenerate = false;  // all batches identically zero
};

inline CalibrationRecord calibrate_activation_bias(std::span<const TensorF32> batches, int e) {
    if (batches.empty())
        throw ConfigError("calibrate_activation_bias: need at least one batch");
    CalibrationRecord rec;
    rec.name = batches.front().name;
    for (const TensorF32& b : batches) {
        b.validate();
        rec.observed_max = std::max(rec.observed_max, static_cast<double>(b.max_abs()));
    }
    if (rec.observed_max > 0.0) {
        rec.exp_bias = adaptivfloat::derive_exp_bias(rec.observed_max, e);
    } else {
        rec.exp_bias = -((1 << e) - 1);
        rec.degenerate = true;
    }
    return rec;
}

// CSV emission, one row per sweep cell, formatted identically on every run.
inline std::string sweep_csv(std::span<const LayerStats> rows) {
    std::string out = "layer,format,n,e,bias_or_scale,rms,min,max\n";
    char buf[256];
    for (const LayerStats& r : rows) {
        std::snprintf(buf, sizeof buf, "%s,%s,%d,%d,%.9g,%.9g,%.9g,%.9g\n", r.layer.c_str(),
                      to_string(r.format), r.n, r.e, r.bias_or_scale, r.rms, r.min, r.max);
        out += buf;
    }
    return out;
}

} // namespace aqf
