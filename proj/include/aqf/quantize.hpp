#pragma once

#include <vector>

#include "aqf/codebook.hpp"

// Quantization entry points for the nearest-value-backed formats, a
// kind-dispatching front door used by the analyzer and CLI, and tensor
// dequantization.

namespace aqf {

// IEEE-like float: nearest representable value, denormals included,
// saturating at the largest finite magnitude (the codebook has no Inf).
inline QuantizedTensor float_quantize(const TensorF32& w, int n, int e) {
    w.validate();
    QuantParams qp;
    qp.spec = FormatSpec{FormatKind::IeeeLikeFloat, n, e};
    const Codebook cb = enumerate_codebook(qp);
    std::vector<CodeWord> codes;
    codes.reserve(w.data.size());
    for (float v : w.data)
        codes.push_back(nearest_value(cb, v).code);
    return make_quantized(w.shape, qp, codes);
}

// Posit: nearest over the enumerated codebook; out-of-range magnitudes land
// on +-maxpos and NaR is never produced.
inline QuantizedTensor posit_quantize(const TensorF32& w, int n, int es) {
    w.validate();
    QuantParams qp;
    qp.spec = FormatSpec{FormatKind::Posit, n, es};
    const Codebook cb = enumerate_codebook(qp);
    std::vector<CodeWord> codes;
    codes.reserve(w.data.size());
    for (float v : w.data)
        codes.push_back(nearest_value(cb, v).code);
    return make_quantized(w.shape, qp, codes);
}

inline QuantizedTensor quantize_tensor(const TensorF32& w, const FormatSpec& spec) {
    spec.validate();
    switch (spec.kind) {
        case FormatKind::AdaptivFloat:  return adaptivfloat::quantize_tensor(w, spec.n, spec.e);
        case FormatKind::IeeeLikeFloat: return float_quantize(w, spec.n, spec.e);
        case FormatKind::BlockFloat:    return bfp::quantize(w, spec.n);
        case FormatKind::Uniform:       return uniform::quantize(w, spec.n);
        case FormatKind::Posit:         return posit_quantize(w, spec.n, spec.e);
    }
    throw ConfigError("quantize_tensor: unhandled format kind");
}

inline std::vector<double> dequantize(const QuantizedTensor& q) {
    std::vector<double> out;
    out.reserve(q.count);
    for (std::size_t i = 0; i < q.count; ++i)
        out.push_back(decode_value(q.code(i), q.params));
    return out;
}

} // namespace aqf
