#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ickd/error.hpp"
#include "ickd/net.hpp"
#include "ickd/numerics.hpp"
#include "ickd/rng.hpp"

using namespace ickd;

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void spit(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  REQUIRE(out);
  out.write(bytes.data(), std::streamsize(bytes.size()));
}

} // namespace

TEST_SUITE("net") {

TEST_CASE("parameter_count counts weights and biases per stage") {
  // [4,3,2]: 4*3+3 weights+biases into the hidden layer, 3*2+2 into logits.
  CHECK(parameter_count({{4, 3, 2}}) == 23);
  CHECK(parameter_count({{2, 5}}) == 15);
  CHECK(parameter_count({{8, 64, 10}}) == 8 * 64 + 64 + 64 * 10 + 10);
}

TEST_CASE("architecture validation") {
  CHECK_NOTHROW(MlpArchitecture{{2, 3}}.validate());
  CHECK_THROWS_AS((MlpArchitecture{{5}}.validate()), InvalidArgument);
  CHECK_THROWS_AS((MlpArchitecture{{0, 3}}.validate()), InvalidArgument);
  CHECK_THROWS_AS((MlpArchitecture{{3, 1}}.validate()), InvalidArgument);
}

TEST_CASE("init_model is deterministic, bounded, and zero-biased") {
  const MlpArchitecture arch{{6, 8, 3}};
  const MlpModel a = init_model(arch, 42);
  const MlpModel b = init_model(arch, 42);
  const MlpModel c = init_model(arch, 43);
  CHECK(a.parameters == b.parameters);
  CHECK(a.parameters != c.parameters);
  CHECK(a.parameters.size() == parameter_count(arch));
  CHECK(a.feature_layer_index == 1);

  // Layout: [W1 (8x6), b1 (8), W2 (3x8), b2 (3)].
  const double bound1 = 1.0 / std::sqrt(6.0);
  const double bound2 = 1.0 / std::sqrt(8.0);
  std::size_t off = 0;
  for (std::size_t i = 0; i < 48; ++i, ++off) {
    CHECK(std::abs(a.parameters[off]) <= bound1);
  }
  for (std::size_t i = 0; i < 8; ++i, ++off) CHECK(a.parameters[off] == 0.0);
  for (std::size_t i = 0; i < 24; ++i, ++off) {
    CHECK(std::abs(a.parameters[off]) <= bound2);
  }
  for (std::size_t i = 0; i < 3; ++i, ++off) CHECK(a.parameters[off] == 0.0);
  CHECK(off == a.parameters.size());
}

TEST_CASE("feature_layer_index is checked and overridable") {
  const MlpArchitecture arch{{4, 6, 5, 3}};
  CHECK(init_model(arch, 1).feature_layer_index == 2);
  CHECK(init_model(arch, 1, 1).feature_layer_index == 1);
  CHECK(init_model({{4, 2}}, 1).feature_layer_index == 0);
  CHECK_THROWS_AS(init_model(arch, 1, 3), InvalidArgument);
}

TEST_CASE("forward matches a hand-computed two-stage net") {
  MlpModel m;
  m.architecture = {{2, 2, 2}};
  // W1 = [[1, -1], [0.5, 2]], b1 = [0.1, -3], W2 = [[1, 1], [2, -1]],
  // b2 = [0, 0.25].
  m.parameters = {1.0, -1.0, 0.5, 2.0, 0.1, -3.0,
                  1.0, 1.0, 2.0, -1.0, 0.0, 0.25};
  m.feature_layer_index = 1;

  const Vec x = {2.0, 1.0};
  // Stage 1 pre-activation: [2*1 + 1*(-1) + 0.1, 2*0.5 + 1*2 - 3] =
  // [1.1, 0]; relu keeps [1.1, 0].
  // Logits: [1.1 + 0, 2.2 - 0 + 0.25] = [1.1, 2.45].
  const ForwardRecord rec = forward(m, x);
  REQUIRE(rec.logits.size() == 2);
  CHECK(rec.logits[0] == doctest::Approx(1.1).epsilon(1e-12));
  CHECK(rec.logits[1] == doctest::Approx(2.45).epsilon(1e-12));
  REQUIRE(rec.features.size() == 2);
  CHECK(rec.features[0] == doctest::Approx(1.1).epsilon(1e-12));
  CHECK(rec.features[1] == 0.0);
  REQUIRE(rec.activations.size() == 3);
  CHECK(rec.activations[0] == x);
  CHECK(rec.activations[2] == rec.logits);
}

TEST_CASE("forward rejects wrong input width") {
  const MlpModel m = init_model({{3, 4, 2}}, 7);
  CHECK_THROWS_AS(forward(m, Vec{1.0, 2.0}), InvalidArgument);
}

TEST_CASE("backward agrees with finite differences through all parameters") {
  SplitMix64 rng(0x4E455447);
  for (const auto& widths :
       {std::vector<std::size_t>{3, 2}, std::vector<std::size_t>{4, 5, 3},
        std::vector<std::size_t>{2, 4, 4, 2}}) {
    MlpModel model = init_model({widths}, rng.next_u64());
    // Nudge biases off zero so relu kinks sit away from the probe points.
    for (double& p : model.parameters) p += 0.05 * rng.next_signed();
    Vec input(widths.front());
    for (double& v : input) v = rng.next_gaussian();
    const std::size_t label = rng.next_below(widths.back());

    const auto loss_at = [&](std::span<const double> params) {
      MlpModel probe = model;
      probe.parameters.assign(params.begin(), params.end());
      const ForwardRecord rec = forward(probe, input);
      return cross_entropy(ProbVector::one_hot(widths.back(), label),
                           softmax_with_temperature(rec.logits, 1.0));
    };
    const auto grad_at = [&](std::span<const double> params) {
      MlpModel probe = model;
      probe.parameters.assign(params.begin(), params.end());
      const ForwardRecord rec = forward(probe, input);
      const ProbVector p = softmax_with_temperature(rec.logits, 1.0);
      Vec dlogits(p.size());
      for (std::size_t k = 0; k < p.size(); ++k) {
        dlogits[k] = p[k] - (k == label ? 1.0 : 0.0);
      }
      return backward(probe, rec, dlogits);
    };
    const GradCheckReport rep =
        grad_check(loss_at, grad_at, model.parameters);
    CHECK(rep.max_relative_error < 1e-6);
  }
}

TEST_CASE("backward rejects a stale forward record") {
  const MlpModel a = init_model({{3, 4, 2}}, 1);
  const MlpModel b = init_model({{3, 5, 2}}, 1);
  const ForwardRecord rec = forward(a, Vec{0.1, 0.2, 0.3});
  CHECK_THROWS_AS(backward(b, rec, Vec{1.0, -1.0}), InvalidArgument);
  CHECK_THROWS_AS(backward(a, rec, Vec{1.0}), InvalidArgument);
}

TEST_CASE("sgd_step applies momentum and weight decay as written") {
  MlpModel m;
  m.architecture = {{2, 2}};
  m.parameters = {1.0, -2.0, 0.5, 0.0, 0.0, 0.0};
  m.feature_layer_index = 0;
  Vec velocity;
  const Vec g1 = {0.1, 0.2, -0.3, 0.0, 0.4, -0.5};
  const SgdConfig cfg{0.1, 0.9, 0.01};

  // Step 1: v = g + wd*theta, theta -= lr*v.
  Vec v_ref(6), theta_ref = m.parameters;
  for (std::size_t i = 0; i < 6; ++i) {
    v_ref[i] = g1[i] + 0.01 * theta_ref[i];
    theta_ref[i] -= 0.1 * v_ref[i];
  }
  sgd_step(m, g1, cfg, velocity);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(m.parameters[i] == doctest::Approx(theta_ref[i]).epsilon(1e-15));
    CHECK(velocity[i] == doctest::Approx(v_ref[i]).epsilon(1e-15));
  }

  // Step 2 folds momentum in.
  const Vec g2 = {-0.2, 0.1, 0.0, 0.3, -0.1, 0.2};
  for (std::size_t i = 0; i < 6; ++i) {
    v_ref[i] = 0.9 * v_ref[i] + g2[i] + 0.01 * theta_ref[i];
    theta_ref[i] -= 0.1 * v_ref[i];
  }
  sgd_step(m, g2, cfg, velocity);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(m.parameters[i] == doctest::Approx(theta_ref[i]).epsilon(1e-15));
  }
}

TEST_CASE("sgd_step validates shapes") {
  MlpModel m = init_model({{2, 2}}, 3);
  Vec velocity;
  CHECK_THROWS_AS(sgd_step(m, Vec{1.0}, SgdConfig{0.1, 0.0, 0.0}, velocity),
                  InvalidArgument);
}

TEST_CASE("checkpoint round-trips bit for bit") {
  const std::string path = temp_path("ickd_net_roundtrip.ckpt");
  const MlpModel m = init_model({{5, 7, 4}}, 99, 1);
  save_checkpoint(m, path);
  const MlpModel r = load_checkpoint(path);
  CHECK(r.architecture.layer_widths == m.architecture.layer_widths);
  CHECK(r.feature_layer_index == m.feature_layer_index);
  CHECK(r.parameters == m.parameters);

  // Saving the reload reproduces the same bytes.
  const std::string path2 = temp_path("ickd_net_roundtrip2.ckpt");
  save_checkpoint(r, path2);
  CHECK(slurp(path) == slurp(path2));
  std::remove(path.c_str());
  std::remove(path2.c_str());
}

TEST_CASE("checkpoint loader reports malformed files with byte offsets") {
  const std::string path = temp_path("ickd_net_bad.ckpt");
  const MlpModel m = init_model({{3, 4, 2}}, 5);
  save_checkpoint(m, path);
  const std::string good = slurp(path);

  SUBCASE("bad magic") {
    std::string bytes = good;
    bytes[0] = 'X';
    spit(path, bytes);
    try {
      load_checkpoint(path);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.byte_offset() == 0);
    }
  }
  SUBCASE("truncated parameters") {
    spit(path, good.substr(0, good.size() - 3));
    CHECK_THROWS_AS(load_checkpoint(path), FormatError);
  }
  SUBCASE("trailing junk") {
    spit(path, good + "zz");
    try {
      load_checkpoint(path);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.byte_offset() == good.size());
    }
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_checkpoint(temp_path("ickd_net_missing.ckpt")),
                    Error);
  }
  std::remove(path.c_str());
}

} // TEST_SUITE
