#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace aqf {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid format descriptor or simulator configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed input data: bad files, NaN/Inf tensors, shape mismatches.
class DataError : public Error {
public:
    static constexpr std::size_t no_offset = static_cast<std::size_t>(-1);

    explicit DataError(const std::string& what, std::size_t byte_offset = no_offset)
        : Error(what), offset(byte_offset) {}

    std::size_t offset;
};

// Posit NaR met while decoding external data.
class NotARealError : public DataError {
public:
    using DataError::DataError;
};

// encode_value called on a value the format cannot represent exactly.
class PrecisionError : public Error {
public:
    using Error::Error;
};

enum class FormatKind : std::uint8_t {
    AdaptivFloat  = 0,
    IeeeLikeFloat = 1,
    BlockFloat    = 2,
    Uniform       = 3,
    Posit         = 4,
};

inline const char* to_string(FormatKind k) {
    switch (k) {
        case FormatKind::AdaptivFloat:  return "adaptivfloat";
        case FormatKind::IeeeLikeFloat: return "float";
        case FormatKind::BlockFloat:    return "bfp";
        case FormatKind::Uniform:       return "uniform";
        case FormatKind::Posit:         return "posit";
    }
    return "?";
}

inline FormatKind format_kind_from_string(std::string_view s) {
    if (s == "adaptivfloat") return FormatKind::AdaptivFloat;
    if (s == "float")        return FormatKind::IeeeLikeFloat;
    if (s == "bfp")          return FormatKind::BlockFloat;
    if (s == "uniform")      return FormatKind::Uniform;
    if (s == "posit")        return FormatKind::Posit;
    throw ConfigError("unknown format kind: " + std::string(s));
}

inline int ceil_log2(std::uint64_t v) {
    if (v <= 1) return 0;
    return std::bit_width(v - 1);
}

// Identifies a number format family and its bit allocation.
//
// n is the total word size, 3..16.  e is the exponent width for the
// float-like kinds, es for posit, and unused for uniform and block float.
struct FormatSpec {
    FormatKind kind = FormatKind::AdaptivFloat;
    int n = 8;
    int e = 0;

    int mant_bits() const { return n - e - 1; }

    bool uses_exponent() const {
        return kind == FormatKind::AdaptivFloat || kind == FormatKind::IeeeLikeFloat ||
               kind == FormatKind::Posit;
    }

    void validate() const {
        if (n < 3 || n > 16)
            throw ConfigError("total bits must be in [3,16], got " + std::to_string(n));
        switch (kind) {
            case FormatKind::AdaptivFloat:
            case FormatKind::IeeeLikeFloat:
                if (e < 1)
                    throw ConfigError("float-like formats need at least 1 exponent bit");
                if (mant_bits() < 0)
                    throw ConfigError("exponent bits " + std::to_string(e) +
                                      " leave no room in an n=" + std::to_string(n) + " word");
                break;
            case FormatKind::Posit:
                if (e < 0 || e > n - 3)
                    throw ConfigError("posit es must satisfy 0 <= es <= n-3");
                // maxpos = 2^(2^es * (n-2)) has to stay inside double range.
                if ((std::int64_t{1} << e) * (n - 2) > 960)
                    throw ConfigError("posit es too large: dynamic range exceeds the double domain");
                break;
            case FormatKind::BlockFloat:
            case FormatKind::Uniform:
                break;
        }
    }

    friend bool operator==(const FormatSpec&, const FormatSpec&) = default;
};

// One n-bit code pattern.  Bit n-1 is the sign for sign-magnitude kinds.
struct CodeWord {
    std::uint16_t bits = 0;
    int width = 0;

    friend bool operator==(const CodeWord&, const CodeWord&) = default;
};

inline CodeWord make_code(std::uint32_t bits, int width) {
    if (width < 3 || width > 16)
        throw ConfigError("code width must be in [3,16], got " + std::to_string(width));
    if (bits >> width)
        throw ConfigError("code bits do not fit the declared width");
    return CodeWord{static_cast<std::uint16_t>(bits), width};
}

// Two's-complement reading of an n-bit pattern.
inline int code_to_signed(CodeWord w) {
    const int sign_bit = 1 << (w.width - 1);
    int v = w.bits;
    if (v & sign_bit) v -= (1 << w.width);
    return v;
}

inline CodeWord signed_to_code(int v, int width) {
    const int lo = -(1 << (width - 1));
    const int hi = (1 << (width - 1)) - 1;
    if (v < lo || v > hi)
        throw ConfigError("signed value out of range for code width");
    return make_code(static_cast<std::uint32_t>(v) & ((1u << width) - 1), width);
}

} // namespace aqf
