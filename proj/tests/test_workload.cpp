#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "aqf/synthetic.hpp"
#include "aqf/workload.hpp"

using namespace aqf;

TEST_CASE("identity gemv reproduces the requantized inputs on both PEs") {
    const wl::Workload w = synthetic::identity_gemv_workload();
    const wl::Reference ref = wl::reference_run(w);

    const auto irep = wl::run_workload_int(w, pe::IntPEConfig{}, &ref);
    const int L = 127;
    const uniform::Params xp{8, static_cast<float>(w.inputs.max_abs() / L)};
    pe::HfintPEConfig hcfg;
    const auto hrep = wl::run_workload_hfint(w, hcfg, &ref);
    const adaptivfloat::Params ap{8, 3, adaptivfloat::derive_exp_bias(w.inputs.max_abs(), 3)};

    for (int t = 0; t < w.timesteps; ++t) {
        for (int j = 0; j < w.input_size; ++j) {
            const float x = w.inputs.data[static_cast<std::size_t>(t) * w.input_size + j];
            const std::size_t row = static_cast<std::size_t>(t) * w.input_size + j;
            CHECK(irep.trace.rows[row].out_code == uniform::quantize_level(x, xp));
            const CodeWord want =
                adaptivfloat::encode_value(adaptivfloat::quantize_value(x, ap), ap);
            CHECK(hrep.trace.rows[row].out_code == want.bits);
        }
    }
}

TEST_CASE("zero inputs and biases give zero outputs for all steps") {
    wl::Workload w = synthetic::identity_gemv_workload(8, 5);
    for (float& v : w.inputs.data) v = 0.0f;
    const auto irep = wl::run_workload_int(w, pe::IntPEConfig{});
    const auto hrep = wl::run_workload_hfint(w, pe::HfintPEConfig{});
    for (const auto& row : irep.trace.rows) {
        CHECK(row.acc == 0);
        CHECK(row.out_code == 0);
    }
    for (const auto& row : hrep.trace.rows) {
        CHECK(row.acc == 0);
        CHECK(row.out_code == 0);
    }
    // The all-zero LSTM follows: gates at sigmoid(0) keep c and h at zero.
    wl::Workload lz = synthetic::lstm_wide_workload(8, 10, 8);
    for (float& v : lz.inputs.data) v = 0.0f;
    for (float& v : lz.weights.data) v = 0.0f;
    for (float& v : lz.bias.data) v = 0.0f;
    const auto lrep = wl::run_workload_int(lz, pe::IntPEConfig{});
    for (double m : lrep.step_mse) CHECK(m == 0.0);
}

TEST_CASE("hfint beats int on the wide-weight lstm workload") {
    const wl::Workload w = synthetic::lstm_wide_workload();
    const wl::Reference ref = wl::reference_run(w);
    const auto irep = wl::run_workload_int(w, pe::IntPEConfig{}, &ref);
    const auto hrep = wl::run_workload_hfint(w, pe::HfintPEConfig{}, &ref);
    REQUIRE(irep.step_mse.size() == 100);
    REQUIRE(hrep.step_mse.size() == 100);
    int wins = 0;
    double isum = 0.0, hsum = 0.0;
    for (int t = 0; t < 100; ++t) {
        if (hrep.step_mse[t] <= irep.step_mse[t]) ++wins;
        isum += irep.step_mse[t];
        hsum += hrep.step_mse[t];
    }
    CHECK(wins >= 95);
    CHECK(hsum < isum);
    // The calibration records land in the 4-bit register range.
    for (int b : {hrep.weight_bias, hrep.act_bias, hrep.out_bias}) {
        CHECK(b >= -8);
        CHECK(b <= 7);
    }
    CHECK(hrep.max_acc_bits <= hrep.trace.declared_acc_width);
}

TEST_CASE("explicit calibration records reproduce the auto-calibrated run") {
    const wl::Workload w = synthetic::lstm_wide_workload(16, 20, 16);
    const wl::Reference ref = wl::reference_run(w);
    const auto auto_rep = wl::run_workload_hfint(w, pe::HfintPEConfig{}, &ref);
    const wl::HfintCalibration fixed{auto_rep.weight_bias, auto_rep.act_bias,
                                     auto_rep.out_bias, auto_rep.acc_shift};
    const auto fixed_rep = wl::run_workload_hfint(w, pe::HfintPEConfig{}, &ref, &fixed);
    CHECK(fixed_rep.step_mse == auto_rep.step_mse);
    REQUIRE(fixed_rep.trace.rows.size() == auto_rep.trace.rows.size());
    for (std::size_t i = 0; i < auto_rep.trace.rows.size(); ++i)
        CHECK(fixed_rep.trace.rows[i].out_code == auto_rep.trace.rows[i].out_code);
}

TEST_CASE("workload reruns are byte-identical") {
    const wl::Workload w = synthetic::lstm_wide_workload(16, 20, 16);
    const auto a = wl::run_workload_hfint(w, pe::HfintPEConfig{});
    const auto b = wl::run_workload_hfint(w, pe::HfintPEConfig{});
    REQUIRE(a.trace.rows.size() == b.trace.rows.size());
    for (std::size_t i = 0; i < a.trace.rows.size(); ++i) {
        CHECK(a.trace.rows[i].acc == b.trace.rows[i].acc);
        CHECK(a.trace.rows[i].out_code == b.trace.rows[i].out_code);
    }
    CHECK(a.step_mse == b.step_mse);
}

TEST_CASE("workload validation catches dimension mismatches") {
    wl::Workload w = synthetic::identity_gemv_workload(8, 4);
    w.hidden_size = 9;
    CHECK_THROWS_AS(w.validate(), DataError);
    w = synthetic::lstm_wide_workload(8, 4, 8);
    w.bias.shape = {31};
    w.bias.data.resize(31);
    CHECK_THROWS_AS(w.validate(), DataError);
}

TEST_CASE("accumulation depth beyond the PE's H is a configuration error") {
    const wl::Workload w = synthetic::lstm_wide_workload(32, 2, 32);
    pe::IntPEConfig cfg;
    cfg.max_accum = 32;  // needs 64
    CHECK_THROWS_AS(wl::run_workload_int(w, cfg), ConfigError);
}
