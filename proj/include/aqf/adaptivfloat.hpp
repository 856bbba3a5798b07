#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "aqf/format.hpp"
#include "aqf/tensor.hpp"

// AdaptivFloat: a sign/exponent/mantissa format without denormals whose
// exponent range is shifted per tensor by a small signed bias derived from
// the tensor's largest magnitude.  The all-zero exponent+mantissa pattern
// is reclaimed as zero (for either sign bit), sacrificing the positive and
// negative minimum values.

namespace aqf::adaptivfloat {

struct Params {
    int n = 8;
    int e = 3;
    int exp_bias = 0;

    int mant_bits() const { return n - e - 1; }
    int exp_max() const { return exp_bias + (1 << e) - 1; }

    // Smallest nonzero and largest representable magnitudes.
    double value_min() const { return std::ldexp(1.0 + std::ldexp(1.0, -mant_bits()), exp_bias); }
    double value_max() const { return std::ldexp(2.0 - std::ldexp(1.0, -mant_bits()), exp_max()); }

    void validate() const {
        FormatSpec{FormatKind::AdaptivFloat, n, e}.validate();
    }

    FormatSpec spec() const { return FormatSpec{FormatKind::AdaptivFloat, n, e}; }
};

// Bit vector -> value.  Total on valid-width words.
inline double decode(CodeWord word, const Params& p) {
    const int m = p.mant_bits();
    const std::uint32_t payload = word.bits & ((1u << (p.n - 1)) - 1);
    if (payload == 0) return 0.0;  // both zero codes decode to zero
    const double sign = (word.bits >> (p.n - 1)) ? -1.0 : 1.0;
    const int exp_field = static_cast<int>(payload >> m);
    const std::uint32_t mant_field = payload & ((1u << m) - 1);
    const double mant = 1.0 + std::ldexp(static_cast<double>(mant_field), -m);
    return sign * std::ldexp(mant, exp_field + p.exp_bias);
}

// Largest k with 2^k <= a, by exponent extraction rather than a log, so the
// power-of-two boundaries classify exactly.
inline int floor_log2(double a) {
    int ex = 0;
    std::frexp(a, &ex);  // a = f * 2^ex, f in [0.5, 1)
    return ex - 1;
}

inline int derive_exp_bias(double max_abs, int e) {
    if (!(max_abs > 0.0) || !std::isfinite(max_abs))
        throw DataError("derive_exp_bias: tensor maximum must be positive and finite");
    return floor_log2(max_abs) - ((1 << e) - 1);
}

// One element of the quantization: nearest representable magnitude under a
// fixed bias.  Values below value_min round to 0 or value_min at the
// value_min/2 midpoint; mantissas round half away from zero, with overflow
// to 2.0 carrying into the exponent; everything past value_max clamps.
inline double quantize_magnitude(double a, const Params& p) {
    const double vmin = p.value_min();
    const double vmax = p.value_max();
    if (a < 0.5 * vmin) return 0.0;
    if (a < vmin) return vmin;
    if (a > vmax) return vmax;
    int ex = 0;
    const double f = std::frexp(a, &ex);
    int pow = ex - 1;
    const int m = p.mant_bits();
    double mant = std::round(std::ldexp(2.0 * f, m));  // round() is half-away
    if (mant == std::ldexp(2.0, m)) {
        ++pow;
        mant = std::ldexp(1.0, m);
    }
    if (pow > p.exp_max()) return vmax;
    return std::ldexp(mant, pow - m);
}

inline double quantize_value(double x, const Params& p) {
    const double q = quantize_magnitude(std::abs(x), p);
    return x < 0.0 && q != 0.0 ? -q : q;
}

// Exact inverse of decode.  Zero encodes with sign bit 0.
inline CodeWord encode_value(double x, const Params& p) {
    if (x == 0.0) return CodeWord{0, p.n};
    const int m = p.mant_bits();
    const double a = std::abs(x);
    int ex = 0;
    const double f = std::frexp(a, &ex);
    const int pow = ex - 1;
    const int exp_field = pow - p.exp_bias;
    const double mant_scaled = std::ldexp(2.0 * f - 1.0, m);
    const double mant_rounded = std::round(mant_scaled);
    if (exp_field < 0 || exp_field >= (1 << p.e) || mant_scaled != mant_rounded ||
        (exp_field == 0 && mant_rounded == 0.0))
        throw PrecisionError("encode_value: value is not representable; quantize first");
    std::uint32_t bits = (static_cast<std::uint32_t>(exp_field) << m) |
                         static_cast<std::uint32_t>(mant_rounded);
    if (x < 0.0) bits |= 1u << (p.n - 1);
    return CodeWord{static_cast<std::uint16_t>(bits), p.n};
}

namespace detail {

inline CodeWord encode_quantized(double v, const Params& p) {
    if (v == 0.0) return CodeWord{0, p.n};
    const int m = p.mant_bits();
    int ex = 0;
    const double f = std::frexp(std::abs(v), &ex);
    const std::uint32_t exp_field = static_cast<std::uint32_t>(ex - 1 - p.exp_bias);
    const std::uint32_t mant_field = static_cast<std::uint32_t>(std::ldexp(2.0 * f - 1.0, m));
    std::uint32_t bits = (exp_field << m) | mant_field;
    if (v < 0.0) bits |= 1u << (p.n - 1);
    return CodeWord{static_cast<std::uint16_t>(bits), p.n};
}

} // namespace detail

// Tensor quantization: derive the bias from max|W|, then quantize each
// element under it.  An all-zero tensor gets the most negative normalized
// bias, -(2^e - 1), and all-zero codes; the bias still lands in the output
// header so round trips stay deterministic.
inline QuantizedTensor quantize_tensor(const TensorF32& w, int n, int e) {
    w.validate();
    FormatSpec spec{FormatKind::AdaptivFloat, n, e};
    spec.validate();

    const float max_abs = w.max_abs();
    Params p{n, e, 0};
    p.exp_bias = max_abs > 0.0f ? derive_exp_bias(max_abs, e) : -((1 << e) - 1);

    std::vector<CodeWord> codes;
    codes.reserve(w.data.size());
    for (float v : w.data)
        codes.push_back(detail::encode_quantized(quantize_value(v, p), p));

    QuantParams qp;
    qp.spec = spec;
    qp.exp_bias = p.exp_bias;
    return make_quantized(w.shape, qp, codes);
}

// Quantization under an externally fixed bias (activation streams, PE
// output stages) instead of one derived from the tensor itself.
inline QuantizedTensor quantize_tensor_with_bias(const TensorF32& w, const Params& p) {
    w.validate();
    p.validate();
    std::vector<CodeWord> codes;
    codes.reserve(w.data.size());
    for (float v : w.data)
        codes.push_back(detail::encode_quantized(quantize_value(v, p), p));
    QuantParams qp;
    qp.spec = p.spec();
    qp.exp_bias = p.exp_bias;
    return make_quantized(w.shape, qp, codes);
}

// Matrix view of the quantization intermediates, used by tests.
struct Decomposition {
    std::vector<int> sign;        // +1 / -1
    std::vector<double> abs;      // |w| after the min/max handling
    std::vector<int> exp;         // normalized exponents (0 where abs == 0)
    std::vector<double> mant;     // mantissas in [1,2) (0 where abs == 0)
    std::vector<double> mant_q;   // mantissas on the 2^-m grid
};

inline Decomposition decompose(const TensorF32& w, const Params& p) {
    Decomposition d;
    const std::size_t c = w.data.size();
    d.sign.reserve(c); d.abs.reserve(c); d.exp.reserve(c); d.mant.reserve(c); d.mant_q.reserve(c);
    for (float v : w.data) {
        d.sign.push_back(v < 0.0f ? -1 : 1);
        double a = std::abs(static_cast<double>(v));
        if (a < 0.5 * p.value_min()) a = 0.0;
        else if (a < p.value_min()) a = p.value_min();
        else if (a > p.value_max()) a = p.value_max();
        d.abs.push_back(a);
        if (a == 0.0) {
            d.exp.push_back(0);
            d.mant.push_back(0.0);
            d.mant_q.push_back(0.0);
            continue;
        }
        int ex = 0;
        const double f = std::frexp(a, &ex);
        d.exp.push_back(ex - 1);
        d.mant.push_back(2.0 * f);
        d.mant_q.push_back(std::ldexp(std::round(std::ldexp(2.0 * f, p.mant_bits())),
                                      -p.mant_bits()));
    }
    return d;
}

} // namespace aqf::adaptivfloat
