#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "aqf/codebook.hpp"
#include "aqf/pe.hpp"

using namespace aqf;
using namespace aqf::pe;

namespace {

// Independent wide-integer oracle for a dot product of decoded code fields.
__int128 hfint_oracle(const HfintPEConfig& cfg, std::span<const CodeWord> w,
                      std::span<const CodeWord> x) {
    const int m = cfg.mant_bits();
    __int128 acc = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const std::uint32_t wp = w[i].bits & ((1u << (cfg.n - 1)) - 1);
        const std::uint32_t xp = x[i].bits & ((1u << (cfg.n - 1)) - 1);
        if (wp == 0 || xp == 0) continue;
        const __int128 mw = (1 << m) | (wp & ((1 << m) - 1));
        const __int128 mx = (1 << m) | (xp & ((1 << m) - 1));
        __int128 term = (mw * mx) << ((wp >> m) + (xp >> m));
        const bool neg = ((w[i].bits >> (cfg.n - 1)) ^ (x[i].bits >> (cfg.n - 1))) != 0;
        acc += neg ? -term : term;
    }
    return acc;
}

__int128 int_oracle(std::span<const int> w, std::span<const int> x) {
    __int128 acc = 0;
    for (std::size_t i = 0; i < w.size(); ++i)
        acc += static_cast<__int128>(w[i]) * x[i];
    return acc;
}

std::vector<CodeWord> random_codes(std::mt19937& gen, int n, std::size_t count) {
    std::vector<CodeWord> c(count);
    for (auto& w : c) w = CodeWord{static_cast<std::uint16_t>(gen() & ((1u << n) - 1)), n};
    return c;
}

} // namespace

TEST_CASE("int PE register widths") {
    const IntPEConfig cfg{8, 4, 256, 16, 15};
    CHECK(cfg.acc_width() == 24);
    CHECK(cfg.scaled_width() == 40);
    CHECK(int_min_acc_width(cfg) == 24);  // the conventional width is exactly minimal

    const IntPEConfig cfg100{8, 4, 100, 16, 15};
    CHECK(cfg100.acc_width() == 2 * 8 + 7);

    CHECK_THROWS_AS((IntPEConfig{8, 4, 256, 16, 16}.validate()), ConfigError);  // F >= S
    CHECK_THROWS_AS((IntPEConfig{16, 4, 1 << 20, 32, 15}.validate()), ConfigError);  // > 63 bits
}

TEST_CASE("hfint PE register widths") {
    const HfintPEConfig cfg{8, 3, 4, 256};
    CHECK(cfg.paper_width() == 30);    // 2*7 + 2*4 + 8
    CHECK(cfg.checked_width() == 33);  // hidden-bit growth + sign
    CHECK(hfint_min_acc_width(cfg) == 33);

    HfintPEConfig bad = cfg;
    bad.weight_bias = 9;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.act_bias = -9;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("int PE zero inputs produce a zero trace") {
    const IntPEConfig cfg;
    std::vector<int> w(4 * 8, 0), x(8, 0);
    const auto r = int_pe_forward(cfg, w, 4, 8, x, 0.5, Activation::identity);
    for (int v : r.out) CHECK(v == 0);
    for (const auto& row : r.trace.rows) {
        CHECK(row.acc == 0);
        CHECK(row.post_scale == 0);
        CHECK_FALSE(row.overflow);
    }
}

TEST_CASE("single saturating product") {
    // 127*127 with unit scale (F=0) clips to the top of the 8-bit window.
    const IntPEConfig cfg{8, 1, 256, 16, 0};
    std::vector<int> w{127}, x{127};
    const auto r = int_pe_forward(cfg, w, 1, 1, x, 1.0, Activation::identity);
    CHECK(r.trace.rows[0].acc == 16129);
    CHECK(r.trace.rows[0].post_scale == 16129);
    CHECK(r.out[0] == 127);
    CHECK(static_cast<__int128>(r.trace.rows[0].acc) == int_oracle(w, x));
}

TEST_CASE("int PE matches the wide-integer oracle") {
    std::mt19937 gen(43);
    const IntPEConfig cfg{8, 4, 256, 16, 15};
    for (int rep = 0; rep < 300; ++rep) {
        const std::size_t k = 1 + gen() % 256;
        std::vector<int> w(k), x(k);
        for (auto& v : w) v = static_cast<int>(gen() % 256) - 128;
        for (auto& v : x) v = static_cast<int>(gen() % 256) - 128;
        const auto r = int_pe_accumulate(cfg, w, 1, k, x);
        CHECK(static_cast<__int128>(r.acc[0]) == int_oracle(w, x));
    }
}

TEST_CASE("hfint PE matches the wide-integer oracle") {
    std::mt19937 gen(47);
    HfintPEConfig cfg{8, 3, 4, 256};
    cfg.width_mode = AccWidthMode::checked;
    for (int rep = 0; rep < 300; ++rep) {
        const std::size_t k = 1 + gen() % 256;
        const auto w = random_codes(gen, 8, k);
        const auto x = random_codes(gen, 8, k);
        const auto r = hfint_pe_accumulate(cfg, w, 1, k, x);
        CHECK(static_cast<__int128>(r.acc[0]) == hfint_oracle(cfg, w, x));
    }
}

TEST_CASE("hfint zero codes give zero output codes") {
    HfintPEConfig cfg{8, 3, 1, 256};
    std::vector<CodeWord> w(8, CodeWord{0, 8}), x(8, CodeWord{0, 8});
    const auto r = hfint_pe_forward(cfg, w, 1, 8, x, Activation::identity);
    CHECK(r.out[0].bits == 0);
    CHECK(r.trace.rows[0].acc == 0);
}

TEST_CASE("checked width survives the adversarial stream, width-1 does not") {
    // All-max-magnitude codes of equal sign: the worst-case positive sum.
    HfintPEConfig cfg{8, 3, 4, 256};
    cfg.width_mode = AccWidthMode::checked;
    const CodeWord maxcode{0x7F, 8};  // sign 0, exp all ones, mant all ones
    std::vector<CodeWord> w(256, maxcode), x(256, maxcode);
    const auto r = hfint_pe_accumulate(cfg, w, 1, 256, x);
    CHECK(min_signed_width(r.acc[0]) == 33);
    for (const auto& row : r.trace.rows) CHECK_FALSE(row.overflow);

    HfintPEConfig narrow = cfg;
    narrow.acc_width_override = cfg.checked_width() - 1;
    try {
        hfint_pe_accumulate(narrow, w, 1, 256, x);
        FAIL("expected OverflowError");
    } catch (const OverflowError& e) {
        CHECK(e.minimal_width == 33);
        REQUIRE_FALSE(e.trace.rows.empty());
        CHECK(e.trace.rows.back().overflow);
    }

    // Paper-mode width overflows on the same stream.
    HfintPEConfig paper = cfg;
    paper.width_mode = AccWidthMode::paper;
    CHECK_THROWS_AS(hfint_pe_accumulate(paper, w, 1, 256, x), OverflowError);
}

TEST_CASE("int adversarial stream pins the conventional width") {
    const IntPEConfig cfg{8, 4, 256, 16, 15};
    std::vector<int> w(256, -128), x(256, -128);
    const auto r = int_pe_accumulate(cfg, w, 1, 256, x);
    CHECK(r.acc[0] == std::int64_t{1} << 22);
    CHECK(min_signed_width(r.acc[0]) == 24);
    CHECK_FALSE(fits_signed(r.acc[0], 23));
    CHECK(fits_signed(r.acc[0], 24));
}

TEST_CASE("hfint requantization consistency with the codec") {
    std::mt19937 gen(53);
    HfintPEConfig cfg{8, 3, 4, 64};
    cfg.weight_bias = -5;
    cfg.act_bias = -7;
    cfg.out_bias = -2;
    cfg.shift = 12;
    const adaptivfloat::Params out_p = cfg.out_params();
    for (int rep = 0; rep < 100; ++rep) {
        const auto w = random_codes(gen, 8, 64);
        const auto x = random_codes(gen, 8, 64);
        for (Activation act : {Activation::identity, Activation::relu}) {
            const auto r = hfint_pe_forward(cfg, w, 1, 64, x, act);
            std::int64_t y = std::clamp<std::int64_t>(r.trace.rows[0].post_scale, -127, 127);
            if (act == Activation::relu) y = std::max<std::int64_t>(0, y);
            const double v = std::ldexp(static_cast<double>(y), cfg.q_exponent() + cfg.shift);
            const CodeWord want =
                adaptivfloat::encode_value(adaptivfloat::quantize_value(v, out_p), out_p);
            CHECK(r.out[0] == want);
        }
    }
}

TEST_CASE("identical runs produce identical traces") {
    std::mt19937 gen(59);
    HfintPEConfig cfg{8, 3, 4, 128};
    cfg.shift = 10;
    const auto w = random_codes(gen, 8, 512);
    const auto x = random_codes(gen, 8, 128);
    const auto a = hfint_pe_forward(cfg, w, 4, 128, x, Activation::relu);
    const auto b = hfint_pe_forward(cfg, w, 4, 128, x, Activation::relu);
    REQUIRE(a.trace.rows.size() == b.trace.rows.size());
    for (std::size_t i = 0; i < a.trace.rows.size(); ++i) {
        CHECK(a.trace.rows[i].acc == b.trace.rows[i].acc);
        CHECK(a.trace.rows[i].post_scale == b.trace.rows[i].post_scale);
        CHECK(a.trace.rows[i].out_code == b.trace.rows[i].out_code);
    }
}

TEST_CASE("scale must fit its fixed-point register") {
    const IntPEConfig cfg{8, 4, 256, 16, 15};
    std::vector<int> w{1}, x{1};
    CHECK_THROWS_AS(int_pe_forward(cfg, w, 1, 1, x, 1.5, Activation::identity), ConfigError);
    CHECK_NOTHROW(int_pe_forward(cfg, w, 1, 1, x, 0.75, Activation::identity));
}

TEST_CASE("accumulation depth beyond H is rejected") {
    const IntPEConfig cfg{8, 4, 16, 16, 15};
    std::vector<int> w(17, 1), x(17, 1);
    CHECK_THROWS_AS(int_pe_accumulate(cfg, w, 1, 17, x), ConfigError);
}

TEST_CASE("rounding shift rounds half away from zero") {
    CHECK(shift_round(5, 1) == 3);    // 2.5 -> 3
    CHECK(shift_round(-5, 1) == -3);  // -2.5 -> -3
    CHECK(shift_round(4, 1) == 2);
    CHECK(shift_round(7, 2) == 2);    // 1.75 -> 2
    CHECK(shift_round(-7, 2) == -2);
    CHECK(shift_round(12345, 0) == 12345);
}
