#pragma once

#include <cmath>
#include <cstdint>

#include "aqf/format.hpp"

// Standard posit decoding: sign (two's-complement negation for negative
// words), run-length regime, es exponent bits, fraction.  NaR (1 followed
// by zeros) is the sole non-real code; quantization never produces it and
// decoding it raises an explicit not-a-real signal.

namespace aqf::posit {

struct Params {
    int n = 8;
    int es = 1;

    double useed() const { return std::ldexp(1.0, 1 << es); }
    double maxpos() const { return std::ldexp(1.0, (1 << es) * (n - 2)); }
    double minpos() const { return std::ldexp(1.0, -(1 << es) * (n - 2)); }

    void validate() const { FormatSpec{FormatKind::Posit, n, es}.validate(); }

    FormatSpec spec() const { return FormatSpec{FormatKind::Posit, n, es}; }
};

inline bool is_nar(CodeWord w, const Params& p) {
    return w.bits == (1u << (p.n - 1));
}

inline double decode(CodeWord w, const Params& p) {
    const std::uint32_t mask = (1u << p.n) - 1;
    if (w.bits == 0) return 0.0;
    if (is_nar(w, p))
        throw NotARealError("posit NaR code encountered");

    const bool negative = (w.bits >> (p.n - 1)) != 0;
    std::uint32_t bits = negative ? (~w.bits + 1u) & mask : w.bits;

    // Regime: run of identical bits starting below the sign.
    const int first = p.n - 2;
    const int r0 = (bits >> first) & 1u;
    int run = 0;
    int pos = first;
    while (pos >= 0 && static_cast<int>((bits >> pos) & 1u) == r0) {
        ++run;
        --pos;
    }
    const int k = r0 ? run - 1 : -run;
    --pos;  // skip the terminator (absent when the run hits the end)

    // Exponent: up to es bits; bits cut off at the word edge are zeros.
    int exp = 0;
    int exp_bits_seen = 0;
    while (exp_bits_seen < p.es && pos >= 0) {
        exp = (exp << 1) | static_cast<int>((bits >> pos) & 1u);
        --pos;
        ++exp_bits_seen;
    }
    exp <<= (p.es - exp_bits_seen);

    // Fraction: whatever remains.
    const int frac_bits = pos + 1;
    const std::uint32_t frac = frac_bits > 0 ? bits & ((1u << frac_bits) - 1) : 0;
    const double mant = 1.0 + std::ldexp(static_cast<double>(frac), -frac_bits);

    const double v = std::ldexp(mant, k * (1 << p.es) + exp);
    return negative ? -v : v;
}

} // namespace aqf::posit
