#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "aqf/adaptivfloat.hpp"  // floor_log2
#include "aqf/format.hpp"
#include "aqf/tensor.hpp"

// Block floating-point over a whole tensor: one shared exponent E with
// 2^E <= max|W| < 2^(E+1), each element a sign-magnitude (n-1)-bit mantissa
// on the step 2^(E+2-n).  Elements far below the maximum underflow to zero,
// which is the data-loss behavior that distinguishes BFP from per-element
// exponent formats.

namespace aqf::bfp {

struct Params {
    int n = 8;
    int shared_exp = 0;

    double step() const { return std::ldexp(1.0, shared_exp + 2 - n); }
    int max_level() const { return (1 << (n - 1)) - 1; }

    void validate() const { FormatSpec{FormatKind::BlockFloat, n, 0}.validate(); }

    FormatSpec spec() const { return FormatSpec{FormatKind::BlockFloat, n, 0}; }
};

inline int code_level(CodeWord w, const Params& p) {
    const int mag = w.bits & ((1 << (p.n - 1)) - 1);
    return (w.bits >> (p.n - 1)) ? -mag : mag;
}

inline CodeWord level_code(int level, const Params& p) {
    std::uint32_t bits = static_cast<std::uint32_t>(std::abs(level));
    if (level < 0) bits |= 1u << (p.n - 1);
    return CodeWord{static_cast<std::uint16_t>(bits), p.n};
}

inline double decode(CodeWord w, const Params& p) {
    const int level = code_level(w, p);
    return level == 0 ? 0.0 : level * p.step();
}

// The step is a power of two, so x/step is exact and round() alone
// reproduces the nearest-with-half-away rule bit for bit.
inline int quantize_level(double x, const Params& p) {
    const int L = p.max_level();
    const double r = std::round(x / p.step());
    return r >= L ? L : (r <= -L ? -L : static_cast<int>(r));
}

inline QuantizedTensor quantize(const TensorF32& w, int n) {
    w.validate();
    FormatSpec spec{FormatKind::BlockFloat, n, 0};
    spec.validate();

    const float max_abs = w.max_abs();
    Params p;
    p.n = n;
    p.shared_exp = max_abs > 0.0f ? adaptivfloat::floor_log2(max_abs) : 0;

    std::vector<CodeWord> codes;
    codes.reserve(w.data.size());
    for (float v : w.data)
        codes.push_back(level_code(quantize_level(v, p), p));

    QuantParams qp;
    qp.spec = spec;
    qp.exp_bias = p.shared_exp;
    return make_quantized(w.shape, qp, codes);
}

} // namespace aqf::bfp
