// aqf: a bit-exact number-format laboratory on simple tensor files.
//
//   quantize   encode a tensor manifest into quant containers
//   codebook   list every representable value of a format
//   analyze    per-layer RMSE sweeps, exponent search, calibration
//   simulate   run a GEMV/LSTM workload through the INT or HFINT PE
//   gen        write the built-in synthetic suites and workloads
//
// Exit codes: 0 success, 2 usage error, 3 data/format error,
// 4 simulation overflow.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "aqf/analyzer.hpp"
#include "aqf/io.hpp"
#include "aqf/synthetic.hpp"
#include "aqf/workload.hpp"

namespace {

namespace fs = std::filesystem;

std::string sanitize(std::string name) {
    for (char& c : name)
        if (c == '/' || c == '\\' || c == ' ') c = '_';
    return name;
}

std::vector<aqf::FormatKind> parse_formats(const std::vector<std::string>& names) {
    std::vector<aqf::FormatKind> kinds;
    for (const std::string& s : names) kinds.push_back(aqf::format_kind_from_string(s));
    return kinds;
}

aqf::FormatSpec make_spec(const std::string& format, int bits, int exp_bits) {
    aqf::FormatSpec spec;
    spec.kind = aqf::format_kind_from_string(format);
    spec.n = bits;
    spec.e = exp_bits >= 0 ? exp_bits : aqf::default_exp_bits(spec.kind, bits);
    spec.validate();
    return spec;
}

int cmd_quantize(const std::string& manifest, const std::string& format, int bits, int exp_bits,
                 const std::string& out_dir) {
    const aqf::FormatSpec spec = make_spec(format, bits, exp_bits);
    const auto tensors = aqf::io::load_manifest(manifest);
    fs::create_directories(out_dir);
    std::printf("tensor,format,n,e,bias_or_scale,rms,file\n");
    for (const aqf::io::ManifestTensor& mt : tensors) {
        const aqf::QuantizedTensor q = aqf::quantize_tensor(mt.tensor, spec);
        const fs::path out = fs::path(out_dir) / (sanitize(mt.tensor.name) + ".aqt");
        aqf::io::write_quant(out, q);
        std::printf("%s,%s,%d,%d,%.9g,%.9g,%s\n", mt.tensor.name.c_str(),
                    aqf::to_string(spec.kind), spec.n, spec.uses_exponent() ? spec.e : 0,
                    aqf::bias_or_scale_of(q), aqf::rms_error(mt.tensor, q), out.c_str());
    }
    return 0;
}

int cmd_codebook(const std::string& format, int bits, int exp_bits, int bias, double scale) {
    const aqf::FormatSpec spec = make_spec(format, bits, exp_bits);
    aqf::QuantParams params;
    params.spec = spec;
    params.exp_bias = bias;
    params.scale = scale;
    if (spec.kind == aqf::FormatKind::Uniform && scale <= 0.0)
        params.scale = 1.0;
    const aqf::Codebook cb = aqf::enumerate_codebook(params);
    std::printf("code,value\n");
    char bitsbuf[24];
    for (const aqf::CodebookEntry& e : cb.entries) {
        for (int b = 0; b < spec.n; ++b)
            bitsbuf[b] = (e.code.bits >> (spec.n - 1 - b)) & 1 ? '1' : '0';
        bitsbuf[spec.n] = 0;
        std::printf("%s,%.9g\n", bitsbuf, e.value);
    }
    if (spec.kind == aqf::FormatKind::Posit) {
        for (int b = 0; b < spec.n; ++b) bitsbuf[b] = b == 0 ? '1' : '0';
        bitsbuf[spec.n] = 0;
        std::printf("%s,NaR\n", bitsbuf);
    }
    std::fprintf(stderr, "%zu codes, %s\n", cb.entries.size(),
                 spec.kind == aqf::FormatKind::Posit ? "NaR annotated" : "all real");
    return 0;
}

int cmd_analyze(const std::string& manifest, const std::vector<std::string>& formats,
                const std::vector<int>& bits, const std::string& out_csv,
                const std::string& out_json, bool exp_search, bool calibrate, int exp_bits,
                int calib_batches) {
    const auto loaded = aqf::io::load_manifest(manifest);
    std::vector<aqf::TensorF32> layers;
    std::vector<aqf::TensorF32> activations;
    for (const auto& mt : loaded)
        (mt.role == "activation" ? activations : layers).push_back(mt.tensor);

    if (calibrate) {
        if (activations.empty())
            throw aqf::DataError("calibration needs tensors with role \"activation\"");
        std::size_t use = activations.size();
        if (calib_batches > 0)
            use = std::min<std::size_t>(use, static_cast<std::size_t>(calib_batches));
        const int e = exp_bits >= 0 ? exp_bits : 3;
        const auto rec =
            aqf::calibrate_activation_bias(std::span(activations.data(), use), e);
        std::printf("calibration,%s,batches=%zu,observed_max=%.9g,exp_bias=%d%s\n",
                    rec.name.c_str(), use, rec.observed_max, rec.exp_bias,
                    rec.degenerate ? ",degenerate" : "");
        return 0;
    }
    if (layers.empty())
        throw aqf::DataError("manifest has no weight tensors to analyze");

    if (exp_search) {
        for (const std::string& f : formats) {
            const aqf::FormatKind kind = aqf::format_kind_from_string(f);
            for (int n : bits)
                std::printf("exp_search,%s,%d,%d\n", f.c_str(), n,
                            aqf::exponent_search(layers, n, kind));
        }
        return 0;
    }

    const auto kinds = parse_formats(formats);
    const auto rows = aqf::layer_sweep(layers, kinds, bits);
    const std::string csv = aqf::sweep_csv(rows);
    if (!out_csv.empty())
        aqf::io::write_text_atomic(out_csv, csv);
    else
        std::fputs(csv.c_str(), stdout);

    // Per (format, n) distribution of layer RMSE.
    auto report = aqf::io::sweep_json(rows);
    report["summary"] = nlohmann::json::array();
    std::printf("format,n,rms_min,rms_q1,rms_median,rms_q3,rms_max,rms_mean\n");
    for (const aqf::FormatKind kind : kinds) {
        for (int n : bits) {
            std::vector<double> rms;
            for (const auto& r : rows)
                if (r.format == kind && r.n == n) rms.push_back(r.rms);
            const aqf::ErrorDistribution d = aqf::summarize(rms);
            std::printf("%s,%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", aqf::to_string(kind), n, d.min,
                        d.q1, d.median, d.q3, d.max, d.mean);
            auto jd = aqf::io::distribution_json(d);
            jd["format"] = aqf::to_string(kind);
            jd["n"] = n;
            report["summary"].push_back(jd);
        }
    }
    if (!out_json.empty())
        aqf::io::write_text_atomic(out_json, report.dump(2) + "\n");
    return 0;
}

int cmd_simulate(const std::string& workload_path, const std::string& pe_override,
                 const std::string& width_mode, const std::string& trace_path,
                 const std::string& report_path, bool probe_width) {
    aqf::io::WorkloadFile wf = aqf::io::load_workload(workload_path);
    if (!pe_override.empty()) wf.pe_type = pe_override;
    if (!width_mode.empty()) {
        if (width_mode != "paper" && width_mode != "checked")
            throw aqf::ConfigError("--acc-width-mode must be paper or checked");
        wf.hfint_cfg.width_mode = width_mode == "paper" ? aqf::pe::AccWidthMode::paper
                                                        : aqf::pe::AccWidthMode::checked;
    }

    if (probe_width) {
        if (wf.pe_type == "int") {
            const auto& c = wf.int_cfg;
            std::printf("pe=int n=%d H=%d declared_acc=%d scaled=%d minimal_acc=%d\n", c.n,
                        c.max_accum, c.acc_width(), c.scaled_width(), aqf::pe::int_min_acc_width(c));
        } else {
            const auto& c = wf.hfint_cfg;
            std::printf("pe=hfint n=%d e=%d H=%d paper=%d checked=%d minimal_acc=%d\n", c.n, c.e,
                        c.max_accum, c.paper_width(), c.checked_width(),
                        aqf::pe::hfint_min_acc_width(c));
        }
        return 0;
    }

    const aqf::wl::Reference ref = aqf::wl::reference_run(wf.workload);
    const aqf::wl::RunReport rep =
        wf.pe_type == "int"
            ? aqf::wl::run_workload_int(wf.workload, wf.int_cfg, &ref)
            : aqf::wl::run_workload_hfint(wf.workload, wf.hfint_cfg, &ref,
                                          wf.has_calibration ? &wf.calibration : nullptr);

    double mean = 0.0;
    for (double m : rep.step_mse) mean += m;
    mean /= static_cast<double>(rep.step_mse.size());
    std::printf("pe=%s steps=%zu mean_mse=%.9g max_acc_bits=%d declared_acc=%d\n",
                rep.pe_kind.c_str(), rep.step_mse.size(), mean, rep.max_acc_bits,
                rep.trace.declared_acc_width);
    for (std::size_t t = 0; t < rep.step_mse.size(); ++t)
        std::printf("step,%zu,%.9g\n", t, rep.step_mse[t]);

    if (!trace_path.empty())
        aqf::io::write_text_atomic(trace_path, aqf::io::trace_csv(rep.trace));
    if (!report_path.empty())
        aqf::io::write_text_atomic(report_path, aqf::io::run_report_json(rep).dump(2) + "\n");
    return 0;
}

int cmd_gen(const std::string& suite, const std::string& workload, const std::string& out_dir,
            unsigned seed) {
    if (suite.empty() == workload.empty())
        throw aqf::ConfigError("gen: pass exactly one of --suite or --workload");
    if (!suite.empty()) {
        const auto layers = aqf::synthetic::suite_by_name(suite, seed);
        std::vector<aqf::io::ManifestTensor> tensors;
        for (const aqf::TensorF32& layer : layers)
            tensors.push_back({layer, "weight", sanitize(layer.name) + ".f32"});
        aqf::io::write_manifest(out_dir, tensors);
        std::printf("wrote %zu layers to %s/manifest.json\n", layers.size(), out_dir.c_str());
        return 0;
    }
    aqf::wl::Workload w;
    if (workload == "lstm-wide")
        w = aqf::synthetic::lstm_wide_workload(32, 100, 32,
                                               seed ? seed : aqf::synthetic::kWorkloadSeed);
    else if (workload == "gemv-identity")
        w = aqf::synthetic::identity_gemv_workload(16, 8,
                                                   seed ? seed : aqf::synthetic::kWorkloadSeed + 1);
    else
        throw aqf::ConfigError("gen: unknown workload '" + workload +
                               "' (lstm-wide, gemv-identity)");
    aqf::io::write_workload(out_dir, w, workload == "lstm-wide" ? "hfint" : "int");
    std::printf("wrote workload to %s/workload.json\n", out_dir.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"bit-exact number-format laboratory"};
    app.require_subcommand(1);

    // quantize
    auto* q = app.add_subcommand("quantize", "quantize a tensor manifest into containers");
    std::string q_manifest, q_format = "adaptivfloat", q_out = ".";
    int q_bits = 8, q_exp = -1;
    q->add_option("--manifest", q_manifest, "tensor manifest JSON")->required();
    q->add_option("--format", q_format, "adaptivfloat|float|bfp|uniform|posit");
    q->add_option("--bits", q_bits, "total bits (3..16)");
    q->add_option("--exp-bits", q_exp, "exponent bits / posit es (default: per-format policy)");
    q->add_option("--out", q_out, "output directory")->required();

    // codebook
    auto* cb = app.add_subcommand("codebook", "list all representable values of a format");
    std::string cb_format = "adaptivfloat";
    int cb_bits = 8, cb_exp = -1, cb_bias = 0;
    double cb_scale = 0.0;
    cb->add_option("--format", cb_format, "adaptivfloat|float|bfp|uniform|posit");
    cb->add_option("--bits", cb_bits, "total bits (3..16)");
    cb->add_option("--exp-bits", cb_exp, "exponent bits / posit es");
    cb->add_option("--bias", cb_bias, "exponent bias (adaptivfloat / bfp)");
    cb->add_option("--scale", cb_scale, "step (uniform)");

    // analyze
    auto* an = app.add_subcommand("analyze", "per-layer RMSE sweep and quartile summary");
    std::string an_manifest, an_csv, an_json;
    std::vector<std::string> an_formats = {"adaptivfloat", "float", "bfp", "uniform", "posit"};
    std::vector<int> an_bits = {4, 6, 8};
    bool an_search = false, an_calibrate = false;
    int an_exp = -1, an_calib_batches = 0;
    an->add_option("--manifest", an_manifest, "tensor manifest JSON")->required();
    an->add_option("--formats", an_formats, "formats to sweep")->delimiter(',');
    an->add_option("--bits", an_bits, "bit widths to sweep")->delimiter(',');
    an->add_option("--out-csv", an_csv, "write the sweep table here");
    an->add_option("--out-json", an_json, "write the JSON report here");
    an->add_flag("--exp-search", an_search, "report the RMSE-minimizing exponent width");
    an->add_flag("--calibrate", an_calibrate, "derive activation exp_bias from role=activation tensors");
    an->add_option("--exp-bits", an_exp, "exponent bits for --calibrate");
    an->add_option("--calib-batches", an_calib_batches,
                   "use only the first N activation batches (0 = all)");

    // simulate
    auto* sim = app.add_subcommand("simulate", "run a workload through a PE pipeline");
    std::string sim_wl, sim_pe, sim_mode, sim_trace, sim_report;
    bool sim_probe = false;
    sim->add_option("--workload", sim_wl, "workload descriptor JSON")->required();
    sim->add_option("--pe", sim_pe, "int|hfint (overrides the descriptor)");
    sim->add_option("--acc-width-mode", sim_mode, "paper|checked (hfint)");
    sim->add_option("--trace", sim_trace, "write the step trace CSV here");
    sim->add_option("--report", sim_report, "write the run report JSON here");
    sim->add_flag("--probe-width", sim_probe, "print declared vs minimal accumulator widths");

    // gen
    auto* gen = app.add_subcommand("gen", "write built-in synthetic data");
    std::string gen_suite, gen_workload, gen_out = ".";
    unsigned gen_seed = 0;
    gen->add_option("--suite", gen_suite, "resnet|seq2seq|transformer");
    gen->add_option("--workload", gen_workload, "lstm-wide|gemv-identity");
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--seed", gen_seed, "override the recorded default seed");

    try {
        app.parse(argc, argv);
        if (*q) return cmd_quantize(q_manifest, q_format, q_bits, q_exp, q_out);
        if (*cb) return cmd_codebook(cb_format, cb_bits, cb_exp, cb_bias, cb_scale);
        if (*an)
            return cmd_analyze(an_manifest, an_formats, an_bits, an_csv, an_json, an_search,
                               an_calibrate, an_exp, an_calib_batches);
        if (*sim) return cmd_simulate(sim_wl, sim_pe, sim_mode, sim_trace, sim_report, sim_probe);
        if (*gen) return cmd_gen(gen_suite, gen_workload, gen_out, gen_seed);
        return 2;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const aqf::pe::OverflowError& e) {
        std::fprintf(stderr, "simulation overflow: %s\n", e.what());
        return 4;
    } catch (const aqf::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
