#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "aqf/adaptivfloat.hpp"
#include "aqf/format.hpp"

// Bit-accurate functional models of the two processing-element datapaths:
// the conventional integer PE (n-bit MACs, wide accumulate, fixed-point
// scale, shift, clip, activation) and the hybrid float-integer PE (float
// multiplies on AdaptivFloat codes, integer accumulate, shift, clip,
// re-encode).  Every intermediate is checked against its declared register
// width; an overflow is a hard simulation error that preserves the trace.

namespace aqf::pe {

enum class Activation { identity, relu, sigmoid, tanh };

inline const char* to_string(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::relu:     return "relu";
        case Activation::sigmoid:  return "sigmoid";
        case Activation::tanh:     return "tanh";
    }
    return "?";
}

inline Activation activation_from_string(std::string_view s) {
    if (s == "identity") return Activation::identity;
    if (s == "relu")     return Activation::relu;
    if (s == "sigmoid")  return Activation::sigmoid;
    if (s == "tanh")     return Activation::tanh;
    throw ConfigError("unknown activation: " + std::string(s));
}

enum class AccWidthMode { paper, checked };

// Smallest signed register width that holds v.
inline int min_signed_width(std::int64_t v) {
    const std::uint64_t mag = v >= 0 ? static_cast<std::uint64_t>(v)
                                     : static_cast<std::uint64_t>(-(v + 1));
    return static_cast<int>(std::bit_width(mag)) + 1;
}

inline bool fits_signed(std::int64_t v, int width) {
    if (width >= 64) return true;
    const std::int64_t hi = (std::int64_t{1} << (width - 1)) - 1;
    return v >= -hi - 1 && v <= hi;
}

// Arithmetic right shift rounding half away from zero.  A plain floor
// shift would bias every output downward by up to one LSB, which breaks
// exact requantization identities.
inline std::int64_t shift_round(std::int64_t v, int sh) {
    if (sh == 0) return v;
    const std::int64_t half = std::int64_t{1} << (sh - 1);
    return v >= 0 ? (v + half) >> sh : -((-v + half) >> sh);
}

struct TraceRow {
    std::int64_t step = 0;        // output element index, global over the run
    std::int64_t acc = 0;         // accumulator after the final MAC
    std::int64_t post_scale = 0;  // post-scale / post-shift value, before clipping
    int out_code = 0;             // n-bit output pattern
    bool overflow = false;
};

struct PETrace {
    std::vector<TraceRow> rows;
    std::int64_t max_abs_acc = 0;
    int declared_acc_width = 0;

    int max_acc_bits() const { return min_signed_width(max_abs_acc); }
};

class OverflowError : public Error {
public:
    OverflowError(const std::string& what, int minimal_width_, PETrace trace_)
        : Error(what), minimal_width(minimal_width_), trace(std::move(trace_)) {}

    int minimal_width;
    PETrace trace;
};

// ---------------------------------------------------------------------------
// Conventional integer PE.
// ---------------------------------------------------------------------------

struct IntPEConfig {
    int n = 8;
    int lanes = 4;        // V: MAC vector width
    int max_accum = 256;  // H: products one accumulator may absorb
    int scale_bits = 16;  // S
    int scale_frac_bits = 15;  // F

    int acc_width() const { return 2 * n + ceil_log2(static_cast<std::uint64_t>(max_accum)); }
    int scaled_width() const { return acc_width() + scale_bits; }

    void validate() const {
        if (n < 3 || n > 16) throw ConfigError("int PE: operand bits must be in [3,16]");
        if (lanes < 1) throw ConfigError("int PE: need at least one lane");
        if (max_accum < 1 || max_accum > (1 << 20))
            throw ConfigError("int PE: max accumulation count out of range");
        if (scale_bits < 1 || scale_bits > 32) throw ConfigError("int PE: scale bits out of range");
        if (scale_frac_bits < 0 || scale_frac_bits >= scale_bits)
            throw ConfigError("int PE: fractional bits must satisfy 0 <= F < S");
        if (scaled_width() > 63)
            throw ConfigError("int PE: scaled register exceeds the 63-bit simulation domain");
    }
};

// Adversarial bound: H products of the most negative operand squared.
inline int int_min_acc_width(const IntPEConfig& cfg) {
    const std::int64_t max_term = std::int64_t{1} << (2 * cfg.n - 2);
    return min_signed_width(max_term * cfg.max_accum);
}

struct IntAccResult {
    std::vector<std::int64_t> acc;
    PETrace trace;
};

// MAC stage only: rows x cols weights against x, lane-grouped accumulation
// with a width check at every register write.
inline IntAccResult int_pe_accumulate(const IntPEConfig& cfg, std::span<const int> weights,
                                      std::size_t rows, std::size_t cols, std::span<const int> x,
                                      std::span<const std::int64_t> acc_preload = {},
                                      std::int64_t step_base = 0) {
    cfg.validate();
    if (weights.size() != rows * cols || x.size() != cols)
        throw DataError("int PE: weight/input dimensions are inconsistent");
    if (cols > static_cast<std::size_t>(cfg.max_accum))
        throw ConfigError("int PE: accumulation count exceeds H");
    if (!acc_preload.empty() && acc_preload.size() != rows)
        throw DataError("int PE: accumulator preload size mismatch");
    const int lim = 1 << (cfg.n - 1);
    for (int v : x)
        if (v < -lim || v >= lim) throw DataError("int PE: activation operand exceeds n bits");
    for (int v : weights)
        if (v < -lim || v >= lim) throw DataError("int PE: weight operand exceeds n bits");

    IntAccResult r;
    r.acc.resize(rows, 0);
    r.trace.declared_acc_width = cfg.acc_width();
    r.trace.rows.reserve(rows);
    for (std::size_t row = 0; row < rows; ++row) {
        std::int64_t acc = acc_preload.empty() ? 0 : acc_preload[row];
        TraceRow tr;
        tr.step = step_base + static_cast<std::int64_t>(row);
        if (!fits_signed(acc, cfg.acc_width())) {
            tr.acc = acc;
            tr.overflow = true;
            r.trace.rows.push_back(tr);
            throw OverflowError("int PE: accumulator preload overflows " +
                                    std::to_string(cfg.acc_width()) + " bits; needs " +
                                    std::to_string(min_signed_width(acc)),
                                min_signed_width(acc), std::move(r.trace));
        }
        for (std::size_t k = 0; k < cols; k += cfg.lanes) {
            std::int64_t chunk = 0;
            const std::size_t end = std::min(cols, k + cfg.lanes);
            for (std::size_t j = k; j < end; ++j)
                chunk += static_cast<std::int64_t>(weights[row * cols + j]) * x[j];
            acc += chunk;
            r.trace.max_abs_acc = std::max(r.trace.max_abs_acc, std::abs(acc));
            if (!fits_signed(acc, cfg.acc_width())) {
                tr.acc = acc;
                tr.overflow = true;
                r.trace.rows.push_back(tr);
                throw OverflowError("int PE: accumulator overflows " +
                                        std::to_string(cfg.acc_width()) + " bits; needs " +
                                        std::to_string(min_signed_width(acc)),
                                    min_signed_width(acc), std::move(r.trace));
            }
        }
        tr.acc = acc;
        r.acc[row] = acc;
        r.trace.rows.push_back(tr);
    }
    return r;
}

struct IntPEResult {
    std::vector<int> out;  // n-bit integer outputs
    PETrace trace;
};

// Full datapath: MAC, S-bit fixed-point scale, shift by F, clip to the
// symmetric n-bit range, activation.  sigmoid/tanh evaluate in high
// precision on the dequantized accumulator (acc * acc_lsb) and requantize
// onto out_lsb; identity and relu stay on the integer path.
inline IntPEResult int_pe_forward(const IntPEConfig& cfg, std::span<const int> weights,
                                  std::size_t rows, std::size_t cols, std::span<const int> x,
                                  double scale, Activation act,
                                  std::span<const std::int64_t> acc_preload = {},
                                  double acc_lsb = 1.0, double out_lsb = 1.0,
                                  std::int64_t step_base = 0) {
    const std::int64_t scale_int =
        std::llround(scale * std::ldexp(1.0, cfg.scale_frac_bits));
    if (!fits_signed(scale_int, cfg.scale_bits))
        throw ConfigError("int PE: scale does not fit " + std::to_string(cfg.scale_bits) +
                          "-bit fixed point with " + std::to_string(cfg.scale_frac_bits) +
                          " fractional bits");

    IntAccResult accres = int_pe_accumulate(cfg, weights, rows, cols, x, acc_preload, step_base);
    IntPEResult r;
    r.trace = std::move(accres.trace);
    r.out.resize(rows, 0);
    const int clip = (1 << (cfg.n - 1)) - 1;
    for (std::size_t row = 0; row < rows; ++row) {
        const std::int64_t scaled = accres.acc[row] * scale_int;
        if (!fits_signed(scaled, cfg.scaled_width())) {
            r.trace.rows[row].overflow = true;
            throw OverflowError("int PE: scaled register overflows " +
                                    std::to_string(cfg.scaled_width()) + " bits; needs " +
                                    std::to_string(min_signed_width(scaled)),
                                min_signed_width(scaled), std::move(r.trace));
        }
        const std::int64_t shifted = shift_round(scaled, cfg.scale_frac_bits);
        r.trace.rows[row].post_scale = shifted;
        std::int64_t y = std::clamp<std::int64_t>(shifted, -clip, clip);
        switch (act) {
            case Activation::identity: break;
            case Activation::relu: y = std::max<std::int64_t>(0, y); break;
            case Activation::sigmoid:
            case Activation::tanh: {
                const double v = static_cast<double>(accres.acc[row]) * acc_lsb;
                const double f = act == Activation::sigmoid ? 1.0 / (1.0 + std::exp(-v))
                                                            : std::tanh(v);
                const double r = std::round(f / out_lsb);
                y = r >= clip ? clip : (r <= -clip ? -clip : static_cast<std::int64_t>(r));
                break;
            }
        }
        r.out[row] = static_cast<int>(y);
        r.trace.rows[row].out_code = static_cast<int>(y);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Hybrid float-integer PE.
// ---------------------------------------------------------------------------

struct HfintPEConfig {
    int n = 8;
    int e = 3;
    int lanes = 4;
    int max_accum = 256;
    int weight_bias = 0;  // AdaptivFloat exp_bias of the weight tensor
    int act_bias = 0;     //   ... of the streaming activations
    int out_bias = 0;     //   ... of the re-encoded outputs
    AccWidthMode width_mode = AccWidthMode::paper;
    int acc_width_override = 0;  // 0: use width_mode
    int shift = 0;               // r, the calibrated post-accumulator shift

    int mant_bits() const { return n - e - 1; }

    // 2*(2^e - 1) + 2*m + log2(H): the nominal accumulation precision.
    int paper_width() const {
        return 2 * ((1 << e) - 1) + 2 * mant_bits() +
               ceil_log2(static_cast<std::uint64_t>(max_accum));
    }
    // Hidden-bit product growth plus a sign bit on top of the nominal form.
    int checked_width() const {
        return 2 * ((1 << e) - 1) + 2 * (mant_bits() + 1) +
               ceil_log2(static_cast<std::uint64_t>(max_accum)) + 1;
    }
    int acc_width() const {
        if (acc_width_override > 0) return acc_width_override;
        return width_mode == AccWidthMode::paper ? paper_width() : checked_width();
    }

    // Accumulator LSB is 2^q: the sum of products of two biased formats,
    // each mantissa carrying m fractional bits.
    int q_exponent() const { return weight_bias + act_bias - 2 * mant_bits(); }

    adaptivfloat::Params weight_params() const { return {n, e, weight_bias}; }
    adaptivfloat::Params act_params() const { return {n, e, act_bias}; }
    adaptivfloat::Params out_params() const { return {n, e, out_bias}; }

    void validate() const {
        FormatSpec{FormatKind::AdaptivFloat, n, e}.validate();
        for (int b : {weight_bias, act_bias, out_bias})
            if (b < -8 || b > 7)
                throw ConfigError("hfint PE: exp_bias " + std::to_string(b) +
                                  " does not fit the 4-bit bias register");
        if (lanes < 1) throw ConfigError("hfint PE: need at least one lane");
        if (max_accum < 1 || max_accum > (1 << 20))
            throw ConfigError("hfint PE: max accumulation count out of range");
        if (shift < 0 || shift > 62) throw ConfigError("hfint PE: shift out of range");
        if (checked_width() > 63)
            throw ConfigError("hfint PE: accumulator exceeds the 63-bit simulation domain");
        if (acc_width() < 2 || acc_width() > 63)
            throw ConfigError("hfint PE: invalid accumulator width");
    }
};

// Adversarial bound: H products of the largest-magnitude code with itself.
inline int hfint_min_acc_width(const HfintPEConfig& cfg) {
    const int m = cfg.mant_bits();
    const std::int64_t mmax = (std::int64_t{1} << (m + 1)) - 1;
    const int sh = 2 * ((1 << cfg.e) - 1);
    const int bound = 2 * (m + 1) + sh + ceil_log2(static_cast<std::uint64_t>(cfg.max_accum)) + 1;
    if (bound > 80) return bound;  // symbolic answer; exact value needs no shift that wide
    unsigned __int128 s = static_cast<unsigned __int128>(mmax * mmax) * cfg.max_accum;
    s <<= sh;
    int bits = 0;
    while (s) {
        ++bits;
        s >>= 1;
    }
    return bits + 1;
}

namespace detail {

struct AfFields {
    bool zero;
    bool neg;
    int exp;
    std::int64_t mant;  // hidden bit appended: 2^m .. 2^(m+1)-1
};

inline AfFields af_fields(std::uint32_t bits, int n, int m) {
    AfFields f;
    const std::uint32_t payload = bits & ((1u << (n - 1)) - 1);
    f.zero = payload == 0;
    f.neg = (bits >> (n - 1)) != 0;
    f.exp = static_cast<int>(payload >> m);
    f.mant = static_cast<std::int64_t>((1u << m) | (payload & ((1u << m) - 1)));
    return f;
}

} // namespace detail

struct HfintAccResult {
    std::vector<std::int64_t> acc;  // exact sum scaled by 2^-q
    PETrace trace;
};

// MAC stage: sign XOR, local exponent add, (m+1)-bit mantissa multiply,
// product aligned into the accumulator by the summed local exponents.
inline HfintAccResult hfint_pe_accumulate(const HfintPEConfig& cfg,
                                          std::span<const CodeWord> weights, std::size_t rows,
                                          std::size_t cols, std::span<const CodeWord> x,
                                          std::span<const std::int64_t> acc_preload = {},
                                          std::int64_t step_base = 0) {
    cfg.validate();
    if (weights.size() != rows * cols || x.size() != cols)
        throw DataError("hfint PE: weight/input dimensions are inconsistent");
    if (cols > static_cast<std::size_t>(cfg.max_accum))
        throw ConfigError("hfint PE: accumulation count exceeds H");
    if (!acc_preload.empty() && acc_preload.size() != rows)
        throw DataError("hfint PE: accumulator preload size mismatch");
    for (const CodeWord& w : weights)
        if (w.width != cfg.n) throw DataError("hfint PE: weight code width mismatch");
    for (const CodeWord& w : x)
        if (w.width != cfg.n) throw DataError("hfint PE: activation code width mismatch");

    const int m = cfg.mant_bits();
    const int width = cfg.acc_width();

    std::vector<detail::AfFields> xf;
    xf.reserve(cols);
    for (const CodeWord& w : x) xf.push_back(detail::af_fields(w.bits, cfg.n, m));

    HfintAccResult r;
    r.acc.resize(rows, 0);
    r.trace.declared_acc_width = width;
    r.trace.rows.reserve(rows);
    for (std::size_t row = 0; row < rows; ++row) {
        std::int64_t acc = acc_preload.empty() ? 0 : acc_preload[row];
        TraceRow tr;
        tr.step = step_base + static_cast<std::int64_t>(row);
        for (std::size_t k = 0; k < cols; k += cfg.lanes) {
            std::int64_t chunk = 0;
            const std::size_t end = std::min(cols, k + cfg.lanes);
            for (std::size_t j = k; j < end; ++j) {
                const auto wf = detail::af_fields(weights[row * cols + j].bits, cfg.n, m);
                const auto& af = xf[j];
                if (wf.zero || af.zero) continue;
                const std::int64_t prod = (wf.mant * af.mant) << (wf.exp + af.exp);
                chunk += wf.neg != af.neg ? -prod : prod;
            }
            acc += chunk;
            r.trace.max_abs_acc = std::max(r.trace.max_abs_acc, std::abs(acc));
            if (!fits_signed(acc, width)) {
                tr.acc = acc;
                tr.overflow = true;
                r.trace.rows.push_back(tr);
                throw OverflowError("hfint PE: accumulator overflows " + std::to_string(width) +
                                        " bits; needs " + std::to_string(min_signed_width(acc)),
                                    min_signed_width(acc), std::move(r.trace));
            }
        }
        tr.acc = acc;
        r.acc[row] = acc;
        r.trace.rows.push_back(tr);
    }
    return r;
}

struct HfintPEResult {
    std::vector<CodeWord> out;  // AdaptivFloat codes under (n, e, out_bias)
    PETrace trace;
};

// Full datapath: MAC, arithmetic shift by the calibrated r, clip to the
// symmetric n-bit integer window, activation, re-encode to AdaptivFloat via
// the codec's own fixed-bias quantization.  sigmoid/tanh take the exact
// dequantized accumulator (acc * 2^q).
inline HfintPEResult hfint_pe_forward(const HfintPEConfig& cfg, std::span<const CodeWord> weights,
                                      std::size_t rows, std::size_t cols,
                                      std::span<const CodeWord> x,
                                      Activation act,
                                      std::span<const std::int64_t> acc_preload = {},
                                      std::int64_t step_base = 0) {
    HfintAccResult accres =
        hfint_pe_accumulate(cfg, weights, rows, cols, x, acc_preload, step_base);
    HfintPEResult r;
    r.trace = std::move(accres.trace);
    r.out.reserve(rows);
    const int clip = (1 << (cfg.n - 1)) - 1;
    const adaptivfloat::Params out_p = cfg.out_params();
    const int q = cfg.q_exponent();
    for (std::size_t row = 0; row < rows; ++row) {
        const std::int64_t shifted = shift_round(accres.acc[row], cfg.shift);
        r.trace.rows[row].post_scale = shifted;
        std::int64_t y = std::clamp<std::int64_t>(shifted, -clip, clip);
        double value = 0.0;
        switch (act) {
            case Activation::identity:
                value = std::ldexp(static_cast<double>(y), q + cfg.shift);
                break;
            case Activation::relu:
                y = std::max<std::int64_t>(0, y);
                value = std::ldexp(static_cast<double>(y), q + cfg.shift);
                break;
            case Activation::sigmoid:
            case Activation::tanh: {
                const double v = std::ldexp(static_cast<double>(accres.acc[row]), q);
                value = act == Activation::sigmoid ? 1.0 / (1.0 + std::exp(-v)) : std::tanh(v);
                break;
            }
        }
        const CodeWord code =
            adaptivfloat::encode_value(adaptivfloat::quantize_value(value, out_p), out_p);
        r.out.push_back(code);
        r.trace.rows[row].out_code = code.bits;
    }
    return r;
}

// Shift that brings the largest observed accumulator into the n-bit window.
inline int calibrate_shift(std::int64_t max_abs_acc, int n) {
    return std::max(0, min_signed_width(max_abs_acc) - n);
}

} // namespace aqf::pe
