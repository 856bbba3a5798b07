#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "aqf/analyzer.hpp"
#include "aqf/quantize.hpp"
#include "aqf/workload.hpp"

static_assert(std::endian::native == std::endian::little,
              "file containers assume a little-endian host");

namespace aqf::io {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Atomic file writes: temp + rename.
// ---------------------------------------------------------------------------

inline void write_file_atomic(const fs::path& path, std::span<const std::uint8_t> bytes) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw DataError("cannot open '" + tmp.string() + "' for writing");
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
        if (!out)
            throw DataError("write failed on '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

inline void write_text_atomic(const fs::path& path, const std::string& text) {
    write_file_atomic(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

inline std::vector<std::uint8_t> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("cannot open '" + path.string() + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

// ---------------------------------------------------------------------------
// Tensor container: JSON manifest + raw little-endian row-major f32 files.
// ---------------------------------------------------------------------------

struct ManifestTensor {
    TensorF32 tensor;
    std::string role = "weight";  // "weight" | "activation"
    std::string file;
};

inline std::vector<ManifestTensor> load_manifest(const fs::path& manifest_path) {
    json doc;
    try {
        doc = json::parse(read_file(manifest_path));
    } catch (const json::exception& e) {
        throw DataError("manifest '" + manifest_path.string() + "': " + e.what());
    }
    if (!doc.contains("tensors") || !doc["tensors"].is_array())
        throw DataError("manifest '" + manifest_path.string() + "': missing tensors array");

    const fs::path dir = manifest_path.parent_path();
    std::vector<ManifestTensor> out;
    for (const json& jt : doc["tensors"]) {
        ManifestTensor mt;
        mt.tensor.name = jt.at("name").get<std::string>();
        if (jt.at("dtype").get<std::string>() != "f32")
            throw DataError("tensor '" + mt.tensor.name + "': only dtype f32 is supported");
        for (const json& d : jt.at("shape"))
            mt.tensor.shape.push_back(d.get<std::uint32_t>());
        mt.role = jt.value("role", "weight");
        if (mt.role != "weight" && mt.role != "activation")
            throw DataError("tensor '" + mt.tensor.name + "': role must be weight or activation");
        mt.file = jt.at("file").get<std::string>();

        const std::vector<std::uint8_t> raw = read_file(dir / mt.file);
        const std::size_t expect = mt.tensor.count() * 4;
        if (raw.size() != expect)
            throw DataError("tensor '" + mt.tensor.name + "': file holds " +
                                std::to_string(raw.size()) + " bytes, shape needs " +
                                std::to_string(expect),
                            raw.size());
        mt.tensor.data.resize(mt.tensor.count());
        std::memcpy(mt.tensor.data.data(), raw.data(), raw.size());
        mt.tensor.validate();
        out.push_back(std::move(mt));
    }
    return out;
}

inline void write_manifest(const fs::path& dir, std::span<const ManifestTensor> tensors,
                           const std::string& manifest_name = "manifest.json") {
    fs::create_directories(dir);
    json doc;
    doc["tensors"] = json::array();
    for (const ManifestTensor& mt : tensors) {
        json jt;
        jt["name"] = mt.tensor.name;
        jt["shape"] = mt.tensor.shape;
        jt["dtype"] = "f32";
        jt["file"] = mt.file;
        jt["role"] = mt.role;
        doc["tensors"].push_back(jt);
        std::vector<std::uint8_t> raw(mt.tensor.data.size() * 4);
        std::memcpy(raw.data(), mt.tensor.data.data(), raw.size());
        write_file_atomic(dir / mt.file, raw);
    }
    write_text_atomic(dir / manifest_name, doc.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Quantized tensor container.
//
//   magic   "AQF1"
//   u8      version (1)
//   u8      format code (FormatKind)
//   u8      n
//   u8      e / es (0 for uniform and block float)
//   i8      exp_bias (adaptivfloat / block float; 0 otherwise)
//   f32 LE  scale (uniform; 0 otherwise)
//   u8      rank
//   u32xLE  dims
//   bytes   packed code payload, ceil(count*n/8)
// ---------------------------------------------------------------------------

inline constexpr char kQuantMagic[4] = {'A', 'Q', 'F', '1'};
inline constexpr std::uint8_t kQuantVersion = 1;

inline std::vector<std::uint8_t> serialize_quant(const QuantizedTensor& q) {
    q.params.spec.validate();
    const FormatKind kind = q.params.spec.kind;
    const bool has_bias = kind == FormatKind::AdaptivFloat || kind == FormatKind::BlockFloat;
    if (has_bias && (q.params.exp_bias < -128 || q.params.exp_bias > 127))
        throw DataError("exp_bias " + std::to_string(q.params.exp_bias) +
                        " does not fit the container's signed 8-bit field");

    std::vector<std::uint8_t> out;
    out.insert(out.end(), kQuantMagic, kQuantMagic + 4);
    out.push_back(kQuantVersion);
    out.push_back(static_cast<std::uint8_t>(kind));
    out.push_back(static_cast<std::uint8_t>(q.params.spec.n));
    out.push_back(static_cast<std::uint8_t>(q.params.spec.uses_exponent() ? q.params.spec.e : 0));
    out.push_back(static_cast<std::uint8_t>(has_bias ? static_cast<std::int8_t>(q.params.exp_bias)
                                                     : 0));
    const float scale =
        kind == FormatKind::Uniform ? static_cast<float>(q.params.scale) : 0.0f;
    std::uint8_t sb[4];
    std::memcpy(sb, &scale, 4);
    out.insert(out.end(), sb, sb + 4);
    out.push_back(static_cast<std::uint8_t>(q.shape.size()));
    for (std::uint32_t d : q.shape) {
        std::uint8_t db[4];
        std::memcpy(db, &d, 4);
        out.insert(out.end(), db, db + 4);
    }
    const std::size_t payload = packed_size(q.params.spec.n, q.count);
    if (q.packed.size() != payload)
        throw DataError("packed payload length mismatch");
    out.insert(out.end(), q.packed.begin(), q.packed.end());
    return out;
}

inline QuantizedTensor parse_quant(std::span<const std::uint8_t> bytes) {
    std::size_t pos = 0;
    auto need = [&](std::size_t k, const char* what) {
        if (bytes.size() - pos < k)
            throw DataError(std::string("quant container truncated reading ") + what +
                                " at byte " + std::to_string(pos),
                            pos);
    };
    need(4, "magic");
    if (std::memcmp(bytes.data(), kQuantMagic, 4) != 0)
        throw DataError("not a quant container: bad magic", 0);
    pos = 4;
    need(1, "version");
    if (bytes[pos] != kQuantVersion)
        throw DataError("unsupported container version " + std::to_string(bytes[pos]), pos);
    ++pos;
    need(8, "header");
    const std::uint8_t format_code = bytes[pos++];
    if (format_code > 4)
        throw DataError("unknown format code " + std::to_string(format_code), pos - 1);
    QuantizedTensor q;
    q.params.spec.kind = static_cast<FormatKind>(format_code);
    q.params.spec.n = bytes[pos++];
    q.params.spec.e = bytes[pos++];
    q.params.exp_bias = static_cast<std::int8_t>(bytes[pos++]);
    float scale = 0.0f;
    std::memcpy(&scale, bytes.data() + pos, 4);
    pos += 4;
    q.params.scale = scale;
    need(1, "rank");
    const std::uint8_t rank = bytes[pos++];
    if (rank == 0)
        throw DataError("quant container with rank 0", pos - 1);
    need(4u * rank, "dims");
    std::uint64_t count = 1;
    for (int i = 0; i < rank; ++i) {
        std::uint32_t d = 0;
        std::memcpy(&d, bytes.data() + pos, 4);
        pos += 4;
        if (d == 0)
            throw DataError("quant container with zero-sized dimension", pos - 4);
        q.shape.push_back(d);
        count *= d;
    }
    q.params.spec.validate();
    q.count = count;
    const std::size_t payload = packed_size(q.params.spec.n, q.count);
    if (bytes.size() - pos != payload)
        throw DataError("quant container payload is " + std::to_string(bytes.size() - pos) +
                            " bytes, header implies " + std::to_string(payload),
                        pos);
    q.packed.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
    return q;
}

inline void write_quant(const fs::path& path, const QuantizedTensor& q) {
    write_file_atomic(path, serialize_quant(q));
}

inline QuantizedTensor read_quant(const fs::path& path) {
    try {
        return parse_quant(read_file(path));
    } catch (const DataError& e) {
        throw DataError("'" + path.string() + "': " + e.what(), e.offset);
    }
}

// ---------------------------------------------------------------------------
// Sweep report JSON (the CSV twin lives in analyzer.hpp).
// ---------------------------------------------------------------------------

inline json sweep_json(std::span<const LayerStats> rows) {
    json out;
    out["rows"] = json::array();
    for (const LayerStats& r : rows) {
        json jr;
        jr["layer"] = r.layer;
        jr["format"] = to_string(r.format);
        jr["n"] = r.n;
        jr["e"] = r.e;
        jr["bias_or_scale"] = r.bias_or_scale;
        jr["rms"] = r.rms;
        jr["min"] = r.min;
        jr["max"] = r.max;
        out["rows"].push_back(jr);
    }
    return out;
}

inline json distribution_json(const ErrorDistribution& d) {
    return json{{"count", d.count},  {"min", d.min}, {"q1", d.q1},    {"median", d.median},
                {"q3", d.q3},        {"max", d.max}, {"mean", d.mean}};
}

// ---------------------------------------------------------------------------
// Workload descriptor.
// ---------------------------------------------------------------------------

struct WorkloadFile {
    wl::Workload workload;
    pe::IntPEConfig int_cfg;
    pe::HfintPEConfig hfint_cfg;
    std::string pe_type = "int";  // "int" | "hfint"
    bool has_calibration = false;  // descriptor carries explicit records
    wl::HfintCalibration calibration;
};

inline const TensorF32& find_tensor(std::span<const ManifestTensor> tensors,
                                    const std::string& name) {
    for (const ManifestTensor& mt : tensors)
        if (mt.tensor.name == name) return mt.tensor;
    throw DataError("workload references tensor '" + name + "' missing from the manifest");
}

inline WorkloadFile load_workload(const fs::path& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw DataError("workload '" + path.string() + "': " + e.what());
    }
    WorkloadFile wf;
    const std::string kind = doc.at("kind").get<std::string>();
    if (kind == "gemv")
        wf.workload.kind = wl::Workload::Kind::gemv;
    else if (kind == "lstm")
        wf.workload.kind = wl::Workload::Kind::lstm;
    else
        throw DataError("workload kind must be gemv or lstm");
    wf.workload.timesteps = doc.at("timesteps").get<int>();
    wf.workload.input_size = doc.at("input_size").get<int>();
    wf.workload.hidden_size = doc.at("hidden_size").get<int>();
    wf.workload.act = pe::activation_from_string(doc.value("activation", "identity"));

    const fs::path dir = path.parent_path();
    const auto tensors = load_manifest(dir / doc.at("manifest").get<std::string>());
    wf.workload.weights = find_tensor(tensors, doc.at("weights").get<std::string>());
    wf.workload.bias = find_tensor(tensors, doc.at("bias").get<std::string>());
    wf.workload.inputs = find_tensor(tensors, doc.at("inputs").get<std::string>());
    wf.workload.validate();

    if (doc.contains("pe")) {
        const json& p = doc["pe"];
        wf.pe_type = p.value("type", "int");
        if (wf.pe_type != "int" && wf.pe_type != "hfint")
            throw DataError("pe type must be int or hfint");
        const int n = p.value("n", 8);
        const int lanes = p.value("lanes", 4);
        const int h = p.value("max_accum", 256);
        wf.int_cfg.n = n;
        wf.int_cfg.lanes = lanes;
        wf.int_cfg.max_accum = h;
        wf.int_cfg.scale_bits = p.value("scale_bits", 16);
        wf.int_cfg.scale_frac_bits = p.value("scale_frac_bits", 15);
        wf.hfint_cfg.n = n;
        wf.hfint_cfg.e = p.value("e", 3);
        wf.hfint_cfg.lanes = lanes;
        wf.hfint_cfg.max_accum = h;
        const std::string mode = p.value("acc_width_mode", "paper");
        if (mode != "paper" && mode != "checked")
            throw DataError("acc_width_mode must be paper or checked");
        wf.hfint_cfg.width_mode =
            mode == "paper" ? pe::AccWidthMode::paper : pe::AccWidthMode::checked;
        wf.hfint_cfg.acc_width_override = p.value("acc_width_override", 0);
    }
    if (doc.contains("calibration")) {
        const json& c = doc["calibration"];
        wf.has_calibration = true;
        wf.calibration.weight_bias = c.at("weight_bias").get<int>();
        wf.calibration.act_bias = c.at("act_bias").get<int>();
        wf.calibration.out_bias = c.at("out_bias").get<int>();
        wf.calibration.acc_shift = c.at("acc_shift").get<int>();
    }
    return wf;
}

inline void write_workload(const fs::path& dir, const wl::Workload& w,
                           const std::string& pe_type = "int", int n = 8, int e = 3,
                           const std::string& name = "workload.json") {
    w.validate();
    std::vector<ManifestTensor> tensors;
    tensors.push_back({w.weights, "weight", "weights.f32"});
    tensors.push_back({w.bias, "weight", "bias.f32"});
    tensors.push_back({w.inputs, "activation", "inputs.f32"});
    write_manifest(dir, tensors, "tensors.json");

    json doc;
    doc["kind"] = w.kind == wl::Workload::Kind::lstm ? "lstm" : "gemv";
    doc["timesteps"] = w.timesteps;
    doc["input_size"] = w.input_size;
    doc["hidden_size"] = w.hidden_size;
    doc["activation"] = pe::to_string(w.act);
    doc["manifest"] = "tensors.json";
    doc["weights"] = w.weights.name;
    doc["bias"] = w.bias.name;
    doc["inputs"] = w.inputs.name;
    doc["pe"] = {{"type", pe_type},       {"n", n},
                 {"e", e},                {"lanes", 4},
                 {"max_accum", 256},      {"scale_bits", 16},
                 {"scale_frac_bits", 15}, {"acc_width_mode", "paper"},
                 {"acc_width_override", 0}};
    write_text_atomic(dir / name, doc.dump(2) + "\n");
}

// Trace dump: one CSV row per output element.
inline std::string trace_csv(const pe::PETrace& trace) {
    std::string out = "step,acc_value,post_scale,output_code,overflow_flag\n";
    char buf[160];
    for (const pe::TraceRow& r : trace.rows) {
        std::snprintf(buf, sizeof buf, "%lld,%lld,%lld,%d,%d\n",
                      static_cast<long long>(r.step), static_cast<long long>(r.acc),
                      static_cast<long long>(r.post_scale), r.out_code, r.overflow ? 1 : 0);
        out += buf;
    }
    return out;
}

inline json run_report_json(const wl::RunReport& rep) {
    json out;
    out["pe"] = rep.pe_kind;
    out["max_acc_bits"] = rep.max_acc_bits;
    out["step_mse"] = rep.step_mse;
    if (rep.pe_kind == "hfint") {
        out["calibration"] = {{"activation_observed_max", rep.act_calibration.observed_max},
                              {"activation_exp_bias", rep.act_bias},
                              {"weight_exp_bias", rep.weight_bias},
                              {"output_exp_bias", rep.out_bias},
                              {"acc_shift", rep.acc_shift}};
    } else {
        out["calibration"] = {{"weight_scale", rep.weight_scale},
                              {"activation_scale", rep.act_scale},
                              {"output_scale", rep.out_scale},
                              {"multiplier", rep.multiplier}};
    }
    return out;
}

} // namespace aqf::io
