#pragma once

#include <cmath>
#include <cstdint>

#include "aqf/format.hpp"

// Non-adaptive IEEE-style float with the standard bias 2^(e-1)-1 and
// denormals, but with the all-ones exponent reclaimed as ordinary normal
// values: no Inf/NaN codes, quantization saturates at the largest finite
// magnitude.  That maximizes usable range at tiny word sizes.

namespace aqf::ieee {

struct Params {
    int n = 8;
    int e = 4;

    int mant_bits() const { return n - e - 1; }
    int exp_bias() const { return (1 << (e - 1)) - 1; }

    double max_finite() const {
        const int m = mant_bits();
        return std::ldexp(2.0 - std::ldexp(1.0, -m), (1 << e) - 1 - exp_bias());
    }
    double min_denormal() const { return std::ldexp(1.0, 1 - exp_bias() - mant_bits()); }

    void validate() const { FormatSpec{FormatKind::IeeeLikeFloat, n, e}.validate(); }

    FormatSpec spec() const { return FormatSpec{FormatKind::IeeeLikeFloat, n, e}; }
};

inline double decode(CodeWord w, const Params& p) {
    const int m = p.mant_bits();
    const std::uint32_t payload = w.bits & ((1u << (p.n - 1)) - 1);
    const int exp_field = static_cast<int>(payload >> m);
    const std::uint32_t mant_field = payload & ((1u << m) - 1);
    const double sign = (w.bits >> (p.n - 1)) ? -1.0 : 1.0;
    if (exp_field == 0) {
        if (mant_field == 0) return 0.0;
        return sign * std::ldexp(static_cast<double>(mant_field), 1 - p.exp_bias() - m);
    }
    return sign * std::ldexp(static_cast<double>((1u << m) | mant_field),
                             exp_field - p.exp_bias() - m);
}

} // namespace aqf::ieee
