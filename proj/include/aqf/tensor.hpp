#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "aqf/bitpack.hpp"
#include "aqf/format.hpp"

namespace aqf {

// Row-major fp32 tensor.  NaN/Inf entries are rejected at ingestion;
// quantization is only defined on finite data.
struct TensorF32 {
    std::string name;
    std::vector<std::uint32_t> shape;
    std::vector<float> data;

    std::size_t count() const {
        std::size_t c = 1;
        for (std::uint32_t d : shape) c *= d;
        return c;
    }

    void validate() const {
        if (shape.empty())
            throw DataError("tensor '" + name + "': empty shape");
        for (std::uint32_t d : shape)
            if (d == 0)
                throw DataError("tensor '" + name + "': zero-sized dimension");
        if (data.size() != count())
            throw DataError("tensor '" + name + "': shape product " + std::to_string(count()) +
                            " does not match " + std::to_string(data.size()) + " elements");
        for (std::size_t i = 0; i < data.size(); ++i)
            if (!std::isfinite(data[i]))
                throw DataError("tensor '" + name + "': non-finite value at index " +
                                std::to_string(i));
    }

    float max_abs() const {
        float m = 0.0f;
        for (float v : data) m = std::max(m, std::abs(v));
        return m;
    }
};

// Parameter block shared by all codecs and the file container.
// exp_bias carries the AdaptivFloat per-tensor bias or the block-float
// shared exponent; scale is the uniform codec's step and zero otherwise.
struct QuantParams {
    FormatSpec spec;
    int exp_bias = 0;
    double scale = 0.0;  // full precision in memory; the container narrows to f32
};

// Bit-packed code words plus everything needed to decode them.
struct QuantizedTensor {
    std::vector<std::uint32_t> shape;
    QuantParams params;
    std::size_t count = 0;
    std::vector<std::uint8_t> packed;

    CodeWord code(std::size_t i) const {
        const int n = params.spec.n;
        std::size_t bit = i * static_cast<std::size_t>(n);
        std::uint32_t v = static_cast<std::uint32_t>(packed[bit >> 3]) >> (bit & 7);
        int got = 8 - static_cast<int>(bit & 7);
        for (std::size_t byte = (bit >> 3) + 1; got < n; ++byte, got += 8)
            v |= static_cast<std::uint32_t>(packed[byte]) << got;
        return CodeWord{static_cast<std::uint16_t>(v & ((1u << n) - 1)), n};
    }

    std::vector<CodeWord> codes() const {
        return unpack_codes(packed, params.spec.n, count);
    }
};

inline QuantizedTensor make_quantized(std::vector<std::uint32_t> shape, const QuantParams& params,
                                      std::span<const CodeWord> codes) {
    QuantizedTensor q;
    q.shape = std::move(shape);
    q.params = params;
    q.count = codes.size();
    q.packed = pack_codes(codes);
    return q;
}

} // namespace aqf
