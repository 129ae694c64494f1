#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "lrce/adam.hpp"
#include "lrce/model_file.hpp"
#include "lrce/mlp.hpp"
#include "oracles.hpp"

using namespace lrce;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "lrce_test_nets";
  fs::create_directories(dir);
  return dir / name;
}

std::vector<std::uint8_t> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& b) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

ModelParams sample_params() {
  ModelParams p;
  p.schema_fingerprint = "abc123";
  p.metadata = {{"note", "x"}, {"n", 3}};
  p.put("encoder", init_mlp(make_spec(6, {8, 8}, 2), 1));
  p.put("decoder", init_mlp(make_spec(3, {8}, 6, Activation::kSigmoid), 2));
  return p;
}

}  // namespace

TEST_CASE("spec validation") {
  CHECK_THROWS(make_spec(4, {}, 1).validate());
  CHECK_THROWS(MlpSpec{{4, 0, 1}}.validate());
  CHECK_NOTHROW(make_spec(4, {8}, 1).validate());
}

TEST_CASE("init is reproducible and shaped by the spec") {
  const auto spec = make_spec(4, {8}, 1);
  const Mlp a = init_mlp(spec, 42);
  CHECK(a == init_mlp(spec, 42));
  CHECK_FALSE(a == init_mlp(spec, 43));
  REQUIRE(a.weights.size() == 2);
  CHECK(a.weights[0].shape() == Shape{4, 8});
  CHECK(a.weights[1].shape() == Shape{8, 1});
  for (const auto& b : a.biases) {
    for (double v : b.values()) CHECK(v == 0.0);
  }
  for (const auto& w : a.weights) {
    const double bound = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (double v : w.values()) CHECK(std::abs(v) <= bound);
  }
  CHECK(a.parameter_count() == 4 * 8 + 8 + 8 + 1);
}

TEST_CASE("zero network gives zero output") {
  Mlp net = init_mlp(make_spec(3, {5, 5}, 2), 0);
  for (auto& w : net.weights) w = Tensor(w.shape());
  const Tensor out = net.apply(Tensor(4, 3, 1.7));
  CHECK(out == Tensor(4, 2));
}

TEST_CASE("sigmoid head stays inside (0,1)") {
  const Mlp net = init_mlp(make_spec(3, {16}, 4, Activation::kSigmoid), 5);
  std::mt19937_64 rng(5);
  const Tensor out = net.apply(oracle::uniform(50, 3, rng, -3, 3));
  for (double v : out.values()) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("forward matches the plain-loop oracle") {
  std::mt19937_64 rng(8);
  for (auto out_act : {Activation::kIdentity, Activation::kSigmoid}) {
    Mlp net = init_mlp(make_spec(5, {7, 6}, 3, out_act), 3);
    for (auto& b : net.biases) b = oracle::uniform(1, b.cols(), rng, -0.5, 0.5);
    const Tensor x = oracle::uniform(9, 5, rng);
    const Tensor expected = oracle::mlp_forward(net, x);
    const Tensor direct = net.apply(x);
    Graph g;
    const auto bound = bind_mlp(net, g, true);
    const Tensor graphed = g.value(mlp_forward(net, bound, g.constant(x), g));
    for (std::size_t i = 0; i < expected.size(); ++i) CHECK(direct[i] == doctest::Approx(expected[i]).epsilon(1e-12));
    CHECK(graphed == direct);
  }
}

TEST_CASE("forward rejects the wrong input width") {
  const Mlp net = init_mlp(make_spec(3, {4}, 1), 0);
  CHECK_THROWS_AS(net.apply(Tensor(2, 4)), ShapeError);
  Graph g;
  const auto bound = bind_mlp(net, g, false);
  CHECK_THROWS_AS(mlp_forward(net, bound, g.constant(Tensor(2, 2)), g), ShapeError);
}

TEST_CASE("forward is permutation-equivariant over rows") {
  std::mt19937_64 rng(11);
  const Mlp net = init_mlp(make_spec(4, {10, 10}, 2), 11);
  const Tensor x = oracle::uniform(12, 4, rng);
  std::vector<std::size_t> perm(12);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  const Tensor a = net.apply(x).select_rows(perm);
  const Tensor b = net.apply(x.select_rows(perm));
  CHECK(a == b);
}

TEST_CASE("first Adam step on a scalar moves by the learning rate") {
  AdamState state(std::vector<Shape>{{1, 1}}, AdamConfig{0.1});
  Tensor w = Tensor::scalar(1.0);
  const Tensor g = Tensor::scalar(1.0);
  Tensor* params[] = {&w};
  const Tensor* grads[] = {&g};
  state.step(params, grads);
  oracle::AdamScalar ref;
  CHECK(w.item() == doctest::Approx(ref.step(1.0, 1.0, 0.1)).epsilon(1e-15));
  CHECK(w.item() == doctest::Approx(0.9).epsilon(1e-7));
  CHECK(state.steps() == 1);
}

TEST_CASE("Adam trajectory matches the longhand oracle") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> gd(0.0, 1.0);
  AdamState state(std::vector<Shape>{{1, 3}}, AdamConfig{0.05});
  Tensor w = Tensor::matrix({{0.5, -1.0, 2.0}});
  oracle::AdamScalar ref[3];
  double expect[3] = {0.5, -1.0, 2.0};
  for (int t = 0; t < 25; ++t) {
    Tensor g(1, 3);
    for (std::size_t i = 0; i < 3; ++i) g[i] = gd(rng);
    for (std::size_t i = 0; i < 3; ++i) expect[i] = ref[i].step(expect[i], g[i], 0.05);
    Tensor* params[] = {&w};
    const Tensor* grads[] = {&g};
    state.step(params, grads);
  }
  for (std::size_t i = 0; i < 3; ++i) CHECK(w[i] == doctest::Approx(expect[i]).epsilon(1e-12));
}

TEST_CASE("zero gradient leaves parameters and decays moments") {
  AdamState state(std::vector<Shape>{{1, 1}}, AdamConfig{0.1});
  Tensor w = Tensor::scalar(1.0);
  const Tensor g = Tensor::scalar(1.0);
  Tensor* params[] = {&w};
  const Tensor* grads[] = {&g};
  state.step(params, grads);
  const double after_first = w.item();
  const double m1 = state.first_moments()[0].item();
  const double v1 = state.second_moments()[0].item();
  const Tensor zero = Tensor::scalar(0.0);
  const Tensor* zgrads[] = {&zero};
  state.step(params, zgrads);
  // With a zero gradient the bias-corrected moment is still nonzero, so the
  // weight keeps drifting; the literal guarantee is on a fresh state.
  CHECK(std::abs(state.first_moments()[0].item()) < std::abs(m1));
  CHECK(state.second_moments()[0].item() < v1);
  CHECK(after_first != 1.0);

  AdamState fresh(std::vector<Shape>{{1, 1}}, AdamConfig{0.1});
  Tensor w2 = Tensor::scalar(3.0);
  Tensor* p2[] = {&w2};
  const Tensor* none[] = {nullptr};
  fresh.step(p2, zgrads);
  fresh.step(p2, none);
  CHECK(w2.item() == 3.0);
  CHECK(fresh.steps() == 2);
}

TEST_CASE("learning rate zero is the identity") {
  std::mt19937_64 rng(6);
  Mlp net = init_mlp(make_spec(3, {4}, 1), 6);
  const Mlp before = net;
  AdamState state(net, AdamConfig{0.0});
  for (int t = 0; t < 5; ++t) {
    Graph g;
    const auto bound = bind_mlp(net, g, true);
    const auto out = mlp_forward(net, bound, g.constant(oracle::uniform(8, 3, rng)), g);
    const auto loss = g.mean_sq_err(out, g.constant(oracle::uniform(8, 1, rng)));
    adam_step(state, net, bound, backward(g, loss));
  }
  CHECK(net == before);
  CHECK(state.steps() == 5);
}

TEST_CASE("Adam rejects mismatched gradient shapes") {
  AdamState state(std::vector<Shape>{{2, 2}}, AdamConfig{});
  Tensor w(2, 2);
  const Tensor g(2, 3);
  Tensor* params[] = {&w};
  const Tensor* grads[] = {&g};
  CHECK_THROWS_AS(state.step(params, grads), ShapeError);
}

TEST_CASE("Adam runs are deterministic") {
  auto run = [] {
    std::mt19937_64 rng(10);
    Mlp net = init_mlp(make_spec(3, {6}, 1), 10);
    AdamState state(net, AdamConfig{0.01});
    for (int t = 0; t < 20; ++t) {
      Graph g;
      const auto bound = bind_mlp(net, g, true);
      const auto out = mlp_forward(net, bound, g.constant(oracle::uniform(8, 3, rng)), g);
      adam_step(state, net, bound, backward(g, g.mean_sq_err(out, g.constant(oracle::uniform(8, 1, rng)))));
    }
    return net;
  };
  CHECK(run() == run());
}

TEST_CASE("model file round trip is bit exact") {
  const auto p = sample_params();
  const auto path = temp_file("roundtrip.lrm");
  save_params(p, path);
  const auto q = load_params(path, std::string("abc123"));
  CHECK(q.schema_fingerprint == "abc123");
  CHECK(q.metadata == p.metadata);
  REQUIRE(q.sections.size() == 2);
  CHECK(q.sections[0].name == "encoder");
  CHECK(q.section("encoder") == p.section("encoder"));
  CHECK(q.section("decoder") == p.section("decoder"));
  CHECK(q.section("decoder").spec.output == Activation::kSigmoid);
  CHECK(serialize_params(q) == serialize_params(p));
}

TEST_CASE("model file negative controls") {
  using Kind = ModelFormatError::Kind;
  const auto bytes = serialize_params(sample_params());
  auto kind_of = [](const std::vector<std::uint8_t>& b) {
    try {
      deserialize_params(b);
    } catch (const ModelFormatError& e) {
      return e.kind();
    }
    FAIL("expected ModelFormatError");
    return Kind::kIo;
  };

  auto bumped = bytes;
  bumped[8] += 1;
  CHECK(kind_of(bumped) == Kind::kVersion);

  auto magic = bytes;
  magic[0] ^= 0xff;
  CHECK(kind_of(magic) == Kind::kBadMagic);

  CHECK(kind_of(std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 10)) == Kind::kTruncated);
  CHECK(kind_of(std::vector<std::uint8_t>(bytes.begin(), bytes.end() - 20)) == Kind::kTruncated);

  auto flipped = bytes;
  flipped[bytes.size() - 12] ^= 0x01;
  CHECK(kind_of(flipped) == Kind::kCorrupt);

  const auto path = temp_file("fp.lrm");
  write_bytes(path, bytes);
  try {
    load_params(path, std::string("other"));
    FAIL("expected fingerprint error");
  } catch (const ModelFormatError& e) {
    CHECK(e.kind() == Kind::kFingerprint);
  }
  CHECK_THROWS_AS(load_params(temp_file("missing.lrm")), ModelFormatError);
  CHECK(read_bytes(path) == bytes);
}

TEST_CASE("missing section is reported") {
  const auto p = sample_params();
  CHECK(p.has("encoder"));
  CHECK_FALSE(p.has("adversary"));
  try {
    p.section("adversary");
    FAIL("expected missing section");
  } catch (const ModelFormatError& e) {
    CHECK(e.kind() == ModelFormatError::Kind::kMissingSection);
  }
}
