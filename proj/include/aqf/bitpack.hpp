#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "aqf/format.hpp"

namespace aqf {

// Packed code stream layout: little-endian, LSB-first.  Code i occupies bit
// positions [i*n, (i+1)*n) of the stream; the final byte is zero-padded in
// its high bits.

inline std::size_t packed_size(int width, std::size_t count) {
    return (count * static_cast<std::size_t>(width) + 7) / 8;
}

inline std::vector<std::uint8_t> pack_codes(std::span<const CodeWord> words) {
    if (words.empty()) return {};
    const int n = words.front().width;
    if (n < 3 || n > 16)
        throw ConfigError("pack_codes: width must be in [3,16]");
    std::vector<std::uint8_t> out(packed_size(n, words.size()), 0);
    std::size_t bit = 0;
    for (const CodeWord& w : words) {
        if (w.width != n)
            throw ConfigError("pack_codes: mixed code widths in one stream");
        std::uint32_t v = w.bits;
        // A 16-bit code starting mid-byte spans at most 3 bytes.
        out[bit >> 3] |= static_cast<std::uint8_t>(v << (bit & 7));
        if (int spill = static_cast<int>(bit & 7) + n - 8; spill > 0) {
            out[(bit >> 3) + 1] |= static_cast<std::uint8_t>(v >> (8 - (bit & 7)));
            if (spill > 8)
                out[(bit >> 3) + 2] |= static_cast<std::uint8_t>(v >> (16 - (bit & 7)));
        }
        bit += static_cast<std::size_t>(n);
    }
    return out;
}

inline std::vector<CodeWord> unpack_codes(std::span<const std::uint8_t> bytes, int width,
                                          std::size_t count) {
    if (width < 3 || width > 16)
        throw ConfigError("unpack_codes: width must be in [3,16]");
    const std::size_t need = packed_size(width, count);
    if (bytes.size() < need)
        throw DataError("packed code stream truncated at byte " + std::to_string(bytes.size()) +
                            ": " + std::to_string(count) + " codes of width " +
                            std::to_string(width) + " need " + std::to_string(need) + " bytes",
                        bytes.size());
    std::vector<CodeWord> out;
    out.reserve(count);
    const std::uint32_t mask = (1u << width) - 1;
    std::size_t bit = 0;
    for (std::size_t i = 0; i < count; ++i) {
        std::uint32_t v = static_cast<std::uint32_t>(bytes[bit >> 3]) >> (bit & 7);
        int got = 8 - static_cast<int>(bit & 7);
        for (std::size_t byte = (bit >> 3) + 1; got < width; ++byte, got += 8)
            v |= static_cast<std::uint32_t>(bytes[byte]) << got;
        out.push_back(CodeWord{static_cast<std::uint16_t>(v & mask), width});
        bit += static_cast<std::size_t>(width);
    }
    return out;
}

} // namespace aqf
