#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "statn/errors.hpp"
#include "statn/pipeline.hpp"
#include "statn/rng.hpp"
#include "statn/serialize.hpp"
#include "statn/tensor.hpp"

using namespace statn;
namespace fs = std::filesystem;

namespace {

struct TempFile {
  fs::path path;
  explicit TempFile(const std::string& name) { path = fs::temp_directory_path() / name; }
  ~TempFile() { fs::remove(path); }
  std::string str() const { return path.string(); }
};

StaTNModel probe_model(std::uint64_t seed) {
  ModelConfig c;
  c.image_rows = 10;
  c.image_cols = 10;
  c.grid_rows = 3;
  c.grid_cols = 3;
  c.sample_rows = 5;
  c.sample_cols = 5;
  c.shape_dim = 2;
  c.texture_dim = 3;
  c.class_count = 2;
  c.localiser_body = {LayerSpec::conv(3, 3, 2, 1), LayerSpec::relu(), LayerSpec::fc(8),
                      LayerSpec::relu()};
  c.classifier_body = {LayerSpec::fc(6), LayerSpec::relu()};
  Rng rng(seed);
  StaTNModel m = build_model(c, rng);
  // non-trivial head so the forward pass exercises the whole pipeline
  Rng rng2(seed + 1);
  for (Param& p : m.localiser.params)
    for (double& v : p.value.data) v = rng2.gaussian(0.0, 0.07);
  return m;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("save then load reproduces forward outputs bit-exactly") {
  TempFile f("statn_model_roundtrip.statn");
  const StaTNModel m = probe_model(269);
  save_model(m, f.str());
  const StaTNModel back = load_model(f.str());

  CHECK(back.config.grid_rows == 3);
  CHECK(back.config.class_count == 2);

  Rng rng(271);
  Tensor probe({10, 10, 1});
  for (double& v : probe.data) v = rng.uniform();

  const ForwardPass a = statn_forward(m, probe, true);
  const ForwardPass b = statn_forward(back, probe, true);
  CHECK(max_abs_diff(a.theta, b.theta) == 0.0);
  CHECK(max_abs_diff(a.V, b.V) == 0.0);
  CHECK(max_abs_diff(a.Z, b.Z) == 0.0);
  CHECK(max_abs_diff(a.logits, b.logits) == 0.0);
}

TEST_CASE("save load save produces identical files") {
  TempFile f1("statn_model_a.statn"), f2("statn_model_b.statn");
  const StaTNModel m = probe_model(277);
  save_model(m, f1.str());
  const StaTNModel back = load_model(f1.str());
  save_model(back, f2.str());
  CHECK(slurp(f1.str()) == slurp(f2.str()));
}

TEST_CASE("truncated files are rejected without producing a partial model") {
  TempFile f("statn_model_trunc.statn");
  const StaTNModel m = probe_model(281);
  save_model(m, f.str());
  const std::string full = slurp(f.str());

  for (double frac : {0.1, 0.5, 0.9, 0.99}) {
    std::ofstream(f.str(), std::ios::binary)
        << full.substr(0, static_cast<std::size_t>(full.size() * frac));
    CHECK_THROWS_AS(load_model(f.str()), format_error);
  }
}

TEST_CASE("a hand-edited dimension is caught and named") {
  TempFile f("statn_model_edit.statn");
  const StaTNModel m = probe_model(283);
  save_model(m, f.str());
  std::string text = slurp(f.str());

  // corrupt the texture-dim header so it no longer matches the stored arrays
  const std::string needle = "texture_dim 3";
  const auto at = text.find(needle);
  REQUIRE(at != std::string::npos);
  text.replace(at, needle.size(), "texture_dim 5");
  std::ofstream(f.str(), std::ios::binary) << text;

  bool named = false;
  try {
    load_model(f.str());
  } catch (const format_error& e) {
    named = std::string(e.what()).find("texture.basis") != std::string::npos;
  }
  CHECK(named);
}

TEST_CASE("a wrong tag is rejected") {
  TempFile f("statn_model_tag.statn");
  std::ofstream(f.str()) << "statn-v9\nimage 4 4 1\n";
  CHECK_THROWS_AS(load_model(f.str()), format_error);
  CHECK_THROWS_AS(load_model("/nonexistent/m.statn"), input_error);
}

TEST_CASE("models without appearance or classifier round-trip too") {
  TempFile f("statn_model_bare.statn");
  ModelConfig c;
  c.image_rows = 8;
  c.image_cols = 8;
  c.grid_rows = 3;
  c.grid_cols = 3;
  c.sample_rows = 4;
  c.sample_cols = 4;
  c.shape_dim = 2;
  c.texture_dim = 0;
  c.class_count = 0;
  c.localiser_body = {LayerSpec::fc(6), LayerSpec::relu()};
  Rng rng(293);
  const StaTNModel m = build_model(c, rng);
  save_model(m, f.str());
  const StaTNModel back = load_model(f.str());
  CHECK(!back.has_appearance());
  CHECK(!back.has_classifier());
  CHECK(max_abs_diff(back.shape_basis.value, m.shape_basis.value) == 0.0);
}
