#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "aqf/format.hpp"
#include "aqf/tensor.hpp"

// Symmetric uniform quantizer: integer levels -(2^(n-1)-1) .. 2^(n-1)-1
// times a full-precision scale.  Codes are sign-magnitude, so the unused
// -2^(n-1) pattern never appears and +-0 are distinct codes of equal value.

namespace aqf::uniform {

struct Params {
    int n = 8;
    double scale = 1.0;

    int max_level() const { return (1 << (n - 1)) - 1; }

    void validate() const {
        FormatSpec{FormatKind::Uniform, n, 0}.validate();
        if (!(scale > 0.0) || !std::isfinite(scale))
            throw ConfigError("uniform scale must be positive and finite");
    }

    FormatSpec spec() const { return FormatSpec{FormatKind::Uniform, n, 0}; }
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
    return level == 0 ? 0.0 : level * p.scale;
}

// Half-away rounding onto the level grid.  round() handles everything but
// the float-noise band around exact midpoints; the neighbor check resolves
// that band against the same k*scale products the codebook stores, so the
// codec and the nearest-value oracle agree bit for bit.
inline int quantize_level(double x, const Params& p) {
    const double s = p.scale;
    const int L = p.max_level();
    const double r = std::round(x / s);
    int k = r >= L ? L : (r <= -L ? -L : static_cast<int>(r));
    double best = std::abs(x - k * s);
    for (int c : {k - 1, k + 1}) {
        if (c < -L || c > L) continue;
        const double d = std::abs(x - c * s);
        if (d < best || (d == best && std::abs(c) > std::abs(k))) {
            k = c;
            best = d;
        }
    }
    return k;
}

inline QuantizedTensor quantize(const TensorF32& w, int n) {
    w.validate();
    FormatSpec spec{FormatKind::Uniform, n, 0};
    spec.validate();

    const float max_abs = w.max_abs();
    Params p;
    p.n = n;
    p.scale = max_abs > 0.0f ? max_abs / static_cast<double>((1 << (n - 1)) - 1) : 1.0;

    std::vector<CodeWord> codes;
    codes.reserve(w.data.size());
    for (float v : w.data)
        codes.push_back(level_code(quantize_level(v, p), p));

    QuantParams qp;
    qp.spec = spec;
    qp.scale = p.scale;
    return make_quantized(w.shape, qp, codes);
}

} // namespace aqf::uniform
