#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "aqf/analyzer.hpp"
#include "aqf/pe.hpp"
#include "aqf/quantize.hpp"

// Weight-stationary workload runner: a GEMV stream or a single-layer LSTM
// rolled out over T timesteps, executed once through a quantized PE
// pipeline and once through an fp64 reference, reporting per-step MSE.
//
// LSTM gate nonlinearities evaluate in high precision on the dequantized
// accumulator and are then requantized; the PE MAC stage is the bit-exact
// part under test.  Gate row order is i, f, g, o.

namespace aqf::wl {

struct Workload {
    enum class Kind { gemv, lstm };

    Kind kind = Kind::gemv;
    int timesteps = 1;    // T
    int input_size = 0;   // D
    int hidden_size = 0;  // N; GEMV output rows
    pe::Activation act = pe::Activation::identity;  // GEMV only
    TensorF32 weights;  // gemv: [N, D]; lstm: [4N, D+N]
    TensorF32 bias;     // gemv: [N]; lstm: [4N]
    TensorF32 inputs;   // [T, D]

    int rows() const { return kind == Kind::lstm ? 4 * hidden_size : hidden_size; }
    int cols() const { return kind == Kind::lstm ? input_size + hidden_size : input_size; }

    void validate() const {
        if (timesteps < 1 || input_size < 1 || hidden_size < 1)
            throw ConfigError("workload: timesteps and dimensions must be positive");
        weights.validate();
        bias.validate();
        inputs.validate();
        const std::vector<std::uint32_t> wshape{static_cast<std::uint32_t>(rows()),
                                                static_cast<std::uint32_t>(cols())};
        if (weights.shape != wshape)
            throw DataError("workload: weight tensor shape mismatch");
        if (bias.shape != std::vector<std::uint32_t>{static_cast<std::uint32_t>(rows())})
            throw DataError("workload: bias tensor shape mismatch");
        const std::vector<std::uint32_t> xshape{static_cast<std::uint32_t>(timesteps),
                                                static_cast<std::uint32_t>(input_size)};
        if (inputs.shape != xshape)
            throw DataError("workload: input tensor shape mismatch");
    }
};

inline double apply_act(pe::Activation a, double v) {
    switch (a) {
        case pe::Activation::identity: return v;
        case pe::Activation::relu:     return std::max(0.0, v);
        case pe::Activation::sigmoid:  return 1.0 / (1.0 + std::exp(-v));
        case pe::Activation::tanh:     return std::tanh(v);
    }
    return v;
}

struct Reference {
    std::vector<std::vector<double>> outputs;  // [T][N]: GEMV y / LSTM h
    double max_abs_output = 0.0;
    double max_abs_hidden = 0.0;  // LSTM h high-water mark (equals output)
};

inline Reference reference_run(const Workload& wl) {
    wl.validate();
    const int N = wl.hidden_size, D = wl.input_size, R = wl.rows(), K = wl.cols();
    Reference ref;
    ref.outputs.reserve(wl.timesteps);
    std::vector<double> h(N, 0.0), c(N, 0.0), z(R, 0.0);
    for (int t = 0; t < wl.timesteps; ++t) {
        const float* x = wl.inputs.data.data() + static_cast<std::size_t>(t) * D;
        for (int r = 0; r < R; ++r) {
            double acc = wl.bias.data[r];
            const float* wrow = wl.weights.data.data() + static_cast<std::size_t>(r) * K;
            for (int j = 0; j < D; ++j) acc += static_cast<double>(wrow[j]) * x[j];
            if (wl.kind == Workload::Kind::lstm)
                for (int j = 0; j < N; ++j) acc += static_cast<double>(wrow[D + j]) * h[j];
            z[r] = acc;
        }
        std::vector<double> out(N, 0.0);
        if (wl.kind == Workload::Kind::gemv) {
            for (int r = 0; r < N; ++r) out[r] = apply_act(wl.act, z[r]);
        } else {
            for (int j = 0; j < N; ++j) {
                const double i = 1.0 / (1.0 + std::exp(-z[j]));
                const double f = 1.0 / (1.0 + std::exp(-z[N + j]));
                const double g = std::tanh(z[2 * N + j]);
                const double o = 1.0 / (1.0 + std::exp(-z[3 * N + j]));
                c[j] = f * c[j] + i * g;
                out[j] = o * std::tanh(c[j]);
                h[j] = out[j];
            }
            for (double v : h) ref.max_abs_hidden = std::max(ref.max_abs_hidden, std::abs(v));
        }
        for (double v : out) ref.max_abs_output = std::max(ref.max_abs_output, std::abs(v));
        ref.outputs.push_back(std::move(out));
    }
    return ref;
}

struct RunReport {
    std::string pe_kind;
    std::vector<double> step_mse;  // quantized pipeline vs fp64 reference, per timestep
    pe::PETrace trace;
    int max_acc_bits = 0;
    // calibration actually used
    CalibrationRecord act_calibration;  // hfint activation bias record
    int acc_shift = 0;                  // hfint r
    double weight_scale = 0.0, act_scale = 0.0, out_scale = 0.0, multiplier = 0.0;  // int
    int weight_bias = 0, act_bias = 0, out_bias = 0;                                // hfint
};

// Pre-recorded calibration for the hfint pipeline.  When present, the
// runner uses these registers verbatim instead of deriving them from the
// data and the offline pass.
struct HfintCalibration {
    int weight_bias = 0;
    int act_bias = 0;
    int out_bias = 0;
    int acc_shift = 0;
};

namespace detail {

inline void merge_trace(pe::PETrace& into, pe::PETrace&& part) {
    into.declared_acc_width = part.declared_acc_width;
    into.max_abs_acc = std::max(into.max_abs_acc, part.max_abs_acc);
    into.rows.insert(into.rows.end(), part.rows.begin(), part.rows.end());
}

inline double mse(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s / static_cast<double>(a.size());
}

} // namespace detail

// ---------------------------------------------------------------------------
// Integer pipeline.
// ---------------------------------------------------------------------------

inline RunReport run_workload_int(const Workload& wl, const pe::IntPEConfig& cfg,
                                  const Reference* ref_in = nullptr) {
    wl.validate();
    cfg.validate();
    if (wl.cols() > cfg.max_accum)
        throw ConfigError("workload: accumulation depth exceeds the PE's H");
    const Reference ref_local = ref_in ? Reference{} : reference_run(wl);
    const Reference& ref = ref_in ? *ref_in : ref_local;

    const int N = wl.hidden_size, D = wl.input_size, R = wl.rows(), K = wl.cols();
    const int L = (1 << (cfg.n - 1)) - 1;

    RunReport rep;
    rep.pe_kind = "int";

    // Per-tensor weight scale; shared input/hidden scale from offline
    // statistics; output scale from the reference range.
    const QuantizedTensor wq = uniform::quantize(wl.weights, cfg.n);
    const uniform::Params wp{cfg.n, wq.params.scale};
    std::vector<int> wlevels(wq.count);
    for (std::size_t i = 0; i < wq.count; ++i) wlevels[i] = uniform::code_level(wq.code(i), wp);

    const double act_max = std::max(static_cast<double>(wl.inputs.max_abs()),
                                    wl.kind == Workload::Kind::lstm ? ref.max_abs_hidden : 0.0);
    const uniform::Params xp{cfg.n, act_max > 0.0 ? act_max / L : 1.0};
    const uniform::Params yp{cfg.n,
                             ref.max_abs_output > 0.0 ? ref.max_abs_output / L : xp.scale};

    rep.weight_scale = wp.scale;
    rep.act_scale = xp.scale;
    rep.out_scale = yp.scale;

    const double acc_lsb = wp.scale * xp.scale;
    rep.multiplier = acc_lsb / yp.scale;

    std::vector<std::int64_t> preload(R);
    for (int r = 0; r < R; ++r)
        preload[r] = std::llround(static_cast<double>(wl.bias.data[r]) / acc_lsb);

    std::vector<double> h(N, 0.0), c(N, 0.0);
    std::vector<int> hlev(N, 0);
    std::vector<int> xlev(K, 0);
    for (int t = 0; t < wl.timesteps; ++t) {
        const float* x = wl.inputs.data.data() + static_cast<std::size_t>(t) * D;
        for (int j = 0; j < D; ++j) xlev[j] = uniform::quantize_level(x[j], xp);
        if (wl.kind == Workload::Kind::lstm)
            for (int j = 0; j < N; ++j) xlev[D + j] = hlev[j];
        const std::int64_t step_base = static_cast<std::int64_t>(t) * R;

        std::vector<double> out(N, 0.0);
        if (wl.kind == Workload::Kind::gemv) {
            auto res = pe::int_pe_forward(cfg, wlevels, R, K, xlev, rep.multiplier, wl.act,
                                          preload, acc_lsb, yp.scale, step_base);
            for (int r = 0; r < N; ++r) out[r] = res.out[r] * yp.scale;
            detail::merge_trace(rep.trace, std::move(res.trace));
        } else {
            // Gate math runs in high precision on the dequantized
            // accumulators; only the hidden state that streams back into
            // the MACs is requantized.
            auto res = pe::int_pe_accumulate(cfg, wlevels, R, K, xlev, preload, step_base);
            for (int j = 0; j < N; ++j) {
                const double gi = 1.0 / (1.0 + std::exp(-res.acc[j] * acc_lsb));
                const double gf = 1.0 / (1.0 + std::exp(-res.acc[N + j] * acc_lsb));
                const double gg = std::tanh(res.acc[2 * N + j] * acc_lsb);
                const double go = 1.0 / (1.0 + std::exp(-res.acc[3 * N + j] * acc_lsb));
                c[j] = gf * c[j] + gi * gg;
                const double hv = go * std::tanh(c[j]);
                hlev[j] = uniform::quantize_level(hv, xp);
                h[j] = hlev[j] * xp.scale;
                out[j] = h[j];
                res.trace.rows[j].out_code = hlev[j];
            }
            detail::merge_trace(rep.trace, std::move(res.trace));
        }
        rep.step_mse.push_back(detail::mse(out, ref.outputs[t]));
    }
    rep.max_acc_bits = rep.trace.max_acc_bits();
    return rep;
}

// ---------------------------------------------------------------------------
// Hybrid float-integer pipeline.
// ---------------------------------------------------------------------------

inline RunReport run_workload_hfint(const Workload& wl, pe::HfintPEConfig cfg,
                                    const Reference* ref_in = nullptr,
                                    const HfintCalibration* fixed = nullptr) {
    wl.validate();
    if (wl.cols() > cfg.max_accum)
        throw ConfigError("workload: accumulation depth exceeds the PE's H");
    const Reference ref_local = ref_in ? Reference{} : reference_run(wl);
    const Reference& ref = ref_in ? *ref_in : ref_local;

    const int N = wl.hidden_size, D = wl.input_size, R = wl.rows(), K = wl.cols();

    RunReport rep;
    rep.pe_kind = "hfint";

    // Weight bias from the tensor itself; activation bias from offline
    // statistics over the inputs plus, for the recurrent case, the
    // reference hidden states.  Derived biases clamp into [-8, 7], the
    // range of the PE's 4-bit bias registers.
    const auto clamp_bias = [](int b) { return std::clamp(b, -8, 7); };

    const float wmax = wl.weights.max_abs();
    cfg.weight_bias = fixed ? fixed->weight_bias
                            : clamp_bias(wmax > 0.0f ? adaptivfloat::derive_exp_bias(wmax, cfg.e)
                                                     : -((1 << cfg.e) - 1));
    const QuantizedTensor wq =
        adaptivfloat::quantize_tensor_with_bias(wl.weights, {cfg.n, cfg.e, cfg.weight_bias});

    std::vector<TensorF32> calib_batches{wl.inputs};
    if (wl.kind == Workload::Kind::lstm && ref.max_abs_hidden > 0.0) {
        TensorF32 hstats;
        hstats.name = "hidden-states";
        hstats.shape = {1};
        hstats.data = {static_cast<float>(ref.max_abs_hidden)};
        calib_batches.push_back(std::move(hstats));
    }
    rep.act_calibration = calibrate_activation_bias(calib_batches, cfg.e);
    rep.act_calibration.name = wl.inputs.name;
    cfg.act_bias = fixed ? fixed->act_bias
                         : clamp_bias(rep.act_calibration.degenerate
                                          ? -((1 << cfg.e) - 1)
                                          : rep.act_calibration.exp_bias);

    const double out_max =
        wl.kind == Workload::Kind::lstm ? ref.max_abs_hidden : ref.max_abs_output;
    cfg.out_bias =
        fixed ? fixed->out_bias
              : clamp_bias(out_max > 0.0 ? adaptivfloat::derive_exp_bias(out_max, cfg.e)
                                         : cfg.act_bias);

    const adaptivfloat::Params apar = cfg.act_params();
    const int q = cfg.q_exponent();

    const std::vector<CodeWord> wcodes = wq.codes();
    std::vector<std::int64_t> preload(R);
    for (int r = 0; r < R; ++r)
        preload[r] = std::llround(std::ldexp(static_cast<double>(wl.bias.data[r]), -q));

    auto encode_act = [&](double v, const adaptivfloat::Params& p) {
        return adaptivfloat::encode_value(adaptivfloat::quantize_value(v, p), p);
    };

    // Offline calibration pass: run the MAC stream once to size the
    // post-accumulator shift; the recurrent state evolves with the same
    // arithmetic it will use in the measured pass.
    const CodeWord zero_code{0, cfg.n};
    if (fixed) {
        cfg.shift = fixed->acc_shift;
    } else {
        pe::HfintPEConfig probe = cfg;
        probe.width_mode = pe::AccWidthMode::checked;
        probe.acc_width_override = 0;
        std::int64_t max_acc = 1;
        std::vector<CodeWord> xcodes(K, zero_code);
        std::vector<CodeWord> hcodes(N, zero_code);
        std::vector<double> cc(N, 0.0);
        for (int t = 0; t < wl.timesteps; ++t) {
            const float* x = wl.inputs.data.data() + static_cast<std::size_t>(t) * D;
            for (int j = 0; j < D; ++j) xcodes[j] = encode_act(x[j], apar);
            if (wl.kind == Workload::Kind::lstm)
                for (int j = 0; j < N; ++j) xcodes[D + j] = hcodes[j];
            auto res = pe::hfint_pe_accumulate(probe, wcodes, R, K, xcodes, preload);
            max_acc = std::max(max_acc, res.trace.max_abs_acc);
            if (wl.kind != Workload::Kind::lstm) continue;
            for (int j = 0; j < N; ++j) {
                const double gi = 1.0 / (1.0 + std::exp(-std::ldexp(static_cast<double>(res.acc[j]), q)));
                const double gf = 1.0 / (1.0 + std::exp(-std::ldexp(static_cast<double>(res.acc[N + j]), q)));
                const double gg = std::tanh(std::ldexp(static_cast<double>(res.acc[2 * N + j]), q));
                const double go = 1.0 / (1.0 + std::exp(-std::ldexp(static_cast<double>(res.acc[3 * N + j]), q)));
                cc[j] = gf * cc[j] + gi * gg;
                hcodes[j] = encode_act(go * std::tanh(cc[j]), apar);
            }
        }
        cfg.shift = pe::calibrate_shift(max_acc, cfg.n);
    }
    rep.acc_shift = cfg.shift;
    rep.weight_bias = cfg.weight_bias;
    rep.act_bias = cfg.act_bias;
    rep.out_bias = cfg.out_bias;
    cfg.validate();

    const adaptivfloat::Params opar = cfg.out_params();
    std::vector<CodeWord> xcodes(K, zero_code);
    std::vector<CodeWord> hcodes(N, zero_code);
    std::vector<double> h(N, 0.0), c(N, 0.0);
    for (int t = 0; t < wl.timesteps; ++t) {
        const float* x = wl.inputs.data.data() + static_cast<std::size_t>(t) * D;
        for (int j = 0; j < D; ++j) xcodes[j] = encode_act(x[j], apar);
        if (wl.kind == Workload::Kind::lstm)
            for (int j = 0; j < N; ++j) xcodes[D + j] = hcodes[j];
        const std::int64_t step_base = static_cast<std::int64_t>(t) * R;

        std::vector<double> out(N, 0.0);
        if (wl.kind == Workload::Kind::gemv) {
            auto res =
                pe::hfint_pe_forward(cfg, wcodes, R, K, xcodes, wl.act, preload, step_base);
            for (int r = 0; r < N; ++r) out[r] = adaptivfloat::decode(res.out[r], opar);
            detail::merge_trace(rep.trace, std::move(res.trace));
        } else {
            // Same cell structure as the integer pipeline: high-precision
            // gates on the dequantized accumulators, hidden state
            // requantized to codes before it feeds the next step.
            auto res = pe::hfint_pe_accumulate(cfg, wcodes, R, K, xcodes, preload, step_base);
            for (int j = 0; j < N; ++j) {
                const double gi = 1.0 / (1.0 + std::exp(-std::ldexp(static_cast<double>(res.acc[j]), q)));
                const double gf = 1.0 / (1.0 + std::exp(-std::ldexp(static_cast<double>(res.acc[N + j]), q)));
                const double gg = std::tanh(std::ldexp(static_cast<double>(res.acc[2 * N + j]), q));
                const double go = 1.0 / (1.0 + std::exp(-std::ldexp(static_cast<double>(res.acc[3 * N + j]), q)));
                c[j] = gf * c[j] + gi * gg;
                hcodes[j] = encode_act(go * std::tanh(c[j]), apar);
                h[j] = adaptivfloat::decode(hcodes[j], apar);
                out[j] = h[j];
                res.trace.rows[j].out_code = hcodes[j].bits;
            }
            detail::merge_trace(rep.trace, std::move(res.trace));
        }
        rep.step_mse.push_back(detail::mse(out, ref.outputs[t]));
    }
    rep.max_acc_bits = rep.trace.max_acc_bits();
    return rep;
}

} // namespace aqf::wl
