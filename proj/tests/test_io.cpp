#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <random>

#include "aqf/io.hpp"
#include "aqf/synthetic.hpp"

using namespace aqf;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("aqf_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

TensorF32 random_tensor(std::mt19937& gen, std::string name) {
    TensorF32 t;
    t.name = std::move(name);
    const std::uint32_t rows = 1 + gen() % 8, cols = 1 + gen() % 32;
    t.shape = {rows, cols};
    t.data.resize(static_cast<std::size_t>(rows) * cols);
    for (float& v : t.data)
        v = static_cast<float>((static_cast<double>(gen()) / 4294967296.0 - 0.5) * 25.0);
    return t;
}

} // namespace

TEST_CASE("quant container round trips byte-identically") {
    std::mt19937 gen(61);
    const FormatSpec specs[] = {
        {FormatKind::AdaptivFloat, 8, 3}, {FormatKind::AdaptivFloat, 5, 2},
        {FormatKind::IeeeLikeFloat, 8, 4}, {FormatKind::BlockFloat, 6, 0},
        {FormatKind::Uniform, 4, 0},       {FormatKind::Posit, 7, 1},
    };
    for (const FormatSpec& spec : specs) {
        for (int rep = 0; rep < 20; ++rep) {
            const TensorF32 t = random_tensor(gen, "w");
            const QuantizedTensor q = quantize_tensor(t, spec);
            const auto bytes = io::serialize_quant(q);
            const QuantizedTensor back = io::parse_quant(bytes);
            CHECK(io::serialize_quant(back) == bytes);
            CHECK(back.shape == q.shape);
            CHECK(back.packed == q.packed);
            CHECK(back.params.exp_bias == q.params.exp_bias);
            // The container narrows the uniform scale to f32.
            CHECK(back.params.scale ==
                  static_cast<double>(static_cast<float>(q.params.scale)));
            if (spec.kind != FormatKind::Uniform) CHECK(dequantize(back) == dequantize(q));
        }
    }
}

TEST_CASE("quant container header is self-describing") {
    std::mt19937 gen(67);
    const TensorF32 t = random_tensor(gen, "w");
    const QuantizedTensor q = adaptivfloat::quantize_tensor(t, 6, 3);
    const auto bytes = io::serialize_quant(q);
    CHECK(bytes[0] == 'A');
    CHECK(bytes[1] == 'Q');
    CHECK(bytes[2] == 'F');
    CHECK(bytes[3] == '1');
    CHECK(bytes[4] == 1);    // version
    CHECK(bytes[5] == 0);    // adaptivfloat format code
    CHECK(bytes[6] == 6);    // n
    CHECK(bytes[7] == 3);    // e
    CHECK(static_cast<std::int8_t>(bytes[8]) == q.params.exp_bias);
    CHECK(bytes[13] == 2);   // rank
    CHECK(bytes.size() == 14 + 8 + packed_size(6, q.count));
}

TEST_CASE("malformed containers are rejected with offsets") {
    std::mt19937 gen(71);
    const QuantizedTensor q = adaptivfloat::quantize_tensor(random_tensor(gen, "w"), 8, 3);
    auto bytes = io::serialize_quant(q);

    auto bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(io::parse_quant(bad), DataError);

    bad = bytes;
    bad[5] = 9;  // unknown format code
    CHECK_THROWS_AS(io::parse_quant(bad), DataError);

    bad = bytes;
    bad.pop_back();  // payload shorter than the header implies
    CHECK_THROWS_AS(io::parse_quant(bad), DataError);

    bad = bytes;
    bad.push_back(0);  // trailing garbage
    CHECK_THROWS_AS(io::parse_quant(bad), DataError);

    CHECK_THROWS_AS(io::parse_quant(std::vector<std::uint8_t>{'A', 'Q'}), DataError);
}

TEST_CASE("quant files round trip through the filesystem") {
    TempDir dir;
    std::mt19937 gen(89);
    const QuantizedTensor q = adaptivfloat::quantize_tensor(random_tensor(gen, "w"), 8, 3);
    io::write_quant(dir.path / "w.aqt", q);
    const QuantizedTensor back = io::read_quant(dir.path / "w.aqt");
    CHECK(io::serialize_quant(back) == io::serialize_quant(q));
    CHECK_THROWS_AS(io::read_quant(dir.path / "missing.aqt"), DataError);
}

TEST_CASE("tensor manifest round trips") {
    TempDir dir;
    std::mt19937 gen(73);
    std::vector<io::ManifestTensor> tensors;
    tensors.push_back({random_tensor(gen, "layer/a"), "weight", "a.f32"});
    tensors.push_back({random_tensor(gen, "act/b"), "activation", "b.f32"});
    io::write_manifest(dir.path, tensors);

    const auto back = io::load_manifest(dir.path / "manifest.json");
    REQUIRE(back.size() == 2);
    CHECK(back[0].tensor.name == "layer/a");
    CHECK(back[0].tensor.shape == tensors[0].tensor.shape);
    CHECK(back[0].tensor.data == tensors[0].tensor.data);
    CHECK(back[1].role == "activation");
}

TEST_CASE("manifest validation failures") {
    TempDir dir;
    std::mt19937 gen(79);
    // Size mismatch between file and declared shape.
    std::vector<io::ManifestTensor> tensors{{random_tensor(gen, "w"), "weight", "w.f32"}};
    io::write_manifest(dir.path, tensors);
    {
        auto doc = nlohmann::json::parse(io::read_file(dir.path / "manifest.json"));
        doc["tensors"][0]["shape"] = {3, 3, 3};
        io::write_text_atomic(dir.path / "manifest.json", doc.dump(2));
        CHECK_THROWS_AS(io::load_manifest(dir.path / "manifest.json"), DataError);
    }
    // Non-finite payload.
    {
        const float vals[2] = {1.0f, NAN};
        nlohmann::json doc;
        doc["tensors"] = {{{"name", "nan"}, {"shape", {2}}, {"dtype", "f32"},
                           {"file", "nan.f32"}, {"role", "weight"}}};
        io::write_text_atomic(dir.path / "m2.json", doc.dump(2));
        std::vector<std::uint8_t> raw(8);
        std::memcpy(raw.data(), vals, 8);
        io::write_file_atomic(dir.path / "nan.f32", raw);
        CHECK_THROWS_AS(io::load_manifest(dir.path / "m2.json"), DataError);
    }
    CHECK_THROWS_AS(io::load_manifest(dir.path / "missing.json"), DataError);
}

TEST_CASE("workload descriptor round trips") {
    TempDir dir;
    const wl::Workload w = synthetic::lstm_wide_workload(8, 6, 8);
    io::write_workload(dir.path, w, "hfint");
    const io::WorkloadFile wf = io::load_workload(dir.path / "workload.json");
    CHECK(wf.pe_type == "hfint");
    CHECK(wf.workload.kind == wl::Workload::Kind::lstm);
    CHECK(wf.workload.timesteps == 6);
    CHECK(wf.workload.hidden_size == 8);
    CHECK(wf.workload.weights.data == w.weights.data);
    CHECK(wf.workload.inputs.data == w.inputs.data);
    CHECK(wf.hfint_cfg.n == 8);
    CHECK(wf.hfint_cfg.e == 3);

    // The two pipelines run straight off the loaded file.
    const auto rep = wl::run_workload_hfint(wf.workload, wf.hfint_cfg);
    CHECK(rep.step_mse.size() == 6);
}

TEST_CASE("trace csv has the documented shape") {
    pe::PETrace trace;
    trace.rows.push_back({0, 123, 45, 7, false});
    trace.rows.push_back({1, -9, -2, 255, true});
    CHECK(io::trace_csv(trace) ==
          "step,acc_value,post_scale,output_code,overflow_flag\n"
          "0,123,45,7,0\n"
          "1,-9,-2,255,1\n");
}

TEST_CASE("oversized exp_bias cannot be serialized") {
    std::mt19937 gen(83);
    QuantizedTensor q = adaptivfloat::quantize_tensor(random_tensor(gen, "w"), 8, 3);
    q.params.exp_bias = 500;
    CHECK_THROWS_AS(io::serialize_quant(q), DataError);
}
