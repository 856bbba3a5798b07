#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "aqf/adaptivfloat.hpp"
#include "aqf/bfp.hpp"
#include "aqf/format.hpp"
#include "aqf/ieee_like.hpp"
#include "aqf/posit.hpp"
#include "aqf/tensor.hpp"
#include "aqf/uniform.hpp"

// The universal oracle: the exhaustive ordered set of representable values
// of a parameterized format.  Every codec is verified against nearest-value
// lookups over its own enumeration.

namespace aqf {

inline double decode_value(CodeWord w, const QuantParams& p) {
    switch (p.spec.kind) {
        case FormatKind::AdaptivFloat:
            return adaptivfloat::decode(w, {p.spec.n, p.spec.e, p.exp_bias});
        case FormatKind::IeeeLikeFloat:
            return ieee::decode(w, {p.spec.n, p.spec.e});
        case FormatKind::BlockFloat:
            return bfp::decode(w, {p.spec.n, p.exp_bias});
        case FormatKind::Uniform:
            return uniform::decode(w, {p.spec.n, p.scale});
        case FormatKind::Posit:
            return posit::decode(w, {p.spec.n, p.spec.e});
    }
    throw ConfigError("decode_value: unhandled format kind");
}

struct CodebookEntry {
    CodeWord code;
    double value;
};

struct Codebook {
    QuantParams params;
    std::vector<CodebookEntry> entries;  // ascending by value, ties by code bits

    bool empty() const { return entries.empty(); }
};

// All 2^n codes decoded to values (posit NaR excluded), duplicates such as
// +-0 retained as distinct codes mapping to equal value.
inline Codebook enumerate_codebook(const QuantParams& params) {
    params.spec.validate();
    if (params.spec.kind == FormatKind::Uniform)
        uniform::Params{params.spec.n, params.scale}.validate();

    Codebook cb;
    cb.params = params;
    const std::uint32_t total = 1u << params.spec.n;
    cb.entries.reserve(total);
    for (std::uint32_t bits = 0; bits < total; ++bits) {
        const CodeWord w{static_cast<std::uint16_t>(bits), params.spec.n};
        if (params.spec.kind == FormatKind::Posit &&
            posit::is_nar(w, {params.spec.n, params.spec.e}))
            continue;
        cb.entries.push_back({w, decode_value(w, params)});
    }
    std::sort(cb.entries.begin(), cb.entries.end(), [](const CodebookEntry& a, const CodebookEntry& b) {
        return a.value != b.value ? a.value < b.value : a.code.bits < b.code.bits;
    });
    return cb;
}

// bias_or_scale is the per-tensor exponent bias for AdaptivFloat and block
// float, the step for uniform, and ignored elsewhere.
inline Codebook enumerate_codebook(const FormatSpec& spec, double bias_or_scale = 0.0) {
    QuantParams p;
    p.spec = spec;
    if (spec.kind == FormatKind::Uniform)
        p.scale = bias_or_scale == 0.0 ? 1.0 : bias_or_scale;
    else
        p.exp_bias = static_cast<int>(bias_or_scale);
    return enumerate_codebook(p);
}

// Entry minimizing |value - x|; exact midpoints resolve toward the value of
// larger magnitude, matching the codecs' round-half-away rule.  Among codes
// of equal value (the two zeros) the lowest code wins.
inline const CodebookEntry& nearest_value(const Codebook& cb, double x) {
    if (cb.empty())
        throw ConfigError("nearest_value: empty codebook");
    const auto& v = cb.entries;
    auto it = std::lower_bound(v.begin(), v.end(), x, [](const CodebookEntry& e, double t) {
        return e.value < t;
    });
    if (it != v.end() && (it == v.begin() || it->value == x)) return *it;
    if (it == v.end() || (it != v.begin() && [&] {
            const double d_lo = x - std::prev(it)->value;
            const double d_hi = it->value - x;
            return d_lo < d_hi ||
                   (d_lo == d_hi && std::abs(std::prev(it)->value) >= std::abs(it->value));
        }()))
        --it;
    while (it != v.begin() && std::prev(it)->value == it->value) --it;
    return *it;
}

} // namespace aqf
