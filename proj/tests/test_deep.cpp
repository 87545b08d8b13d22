#include <cmath>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <doctest.h>

#include "msc/deep.hpp"
#include "msc/errors.hpp"
#include "msc/matrix.hpp"
#include "msc/rng.hpp"
#include "msc/solvers.hpp"
#include "msc/sparse_code.hpp"

namespace {

msc::Matrix random_columns(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  msc::Rng rng(seed);
  msc::Matrix m(rows, cols);
  for (auto& v : m.data()) v = rng.normal();
  return m;
}

msc::LayerConfig small_layer(std::size_t atoms, double lambda, std::size_t pool_factor,
                             std::uint64_t seed) {
  msc::LayerConfig layer;
  layer.train.num_atoms = atoms;
  layer.train.solver = {msc::Regularizer::l1(lambda), 20000, 1e-7};
  layer.train.epochs = 3;
  layer.train.seed = seed;
  layer.pooling.factor = pool_factor;
  return layer;
}

// Two modalities, four frames per example, a modest two-layer-plus-joint
// topology. Small enough to train in well under a second.
struct StackFixture {
  msc::Matrix xsa = random_columns(6, 40, 1000);
  msc::Matrix xsb = random_columns(4, 40, 1001);
  std::vector<std::size_t> groups = std::vector<std::size_t>(10, 4);
  msc::StackConfig cfg;

  StackFixture() {
    cfg.per_modality_layers = {{"a", {small_layer(10, 0.2, 2, 1)}},
                               {"b", {small_layer(8, 0.2, 2, 2)}}};
    cfg.joint_layers = {small_layer(12, 0.2, 2, 3)};
  }
};

}  // namespace

TEST_CASE("pooling reduces windows element-wise") {
  const std::vector<msc::Vector> seq{{1.0, -3.0}, {2.0, 1.0}};

  SUBCASE("factor one is the identity") {
    msc::PoolingConfig cfg;
    cfg.factor = 1;
    CHECK(msc::pool(seq, cfg) == seq);
  }
  SUBCASE("max pooling keeps the signed absolute winner") {
    msc::PoolingConfig cfg;
    cfg.kind = msc::PoolingConfig::Kind::Max;
    cfg.factor = 2;
    const auto out = msc::pool(seq, cfg);
    REQUIRE(out.size() == 1);
    CHECK(out[0] == msc::Vector{2.0, -3.0});
  }
  SUBCASE("average pooling takes the arithmetic mean") {
    msc::PoolingConfig cfg;
    cfg.kind = msc::PoolingConfig::Kind::Average;
    cfg.factor = 2;
    const auto out = msc::pool(seq, cfg);
    REQUIRE(out.size() == 1);
    CHECK(out[0][0] == doctest::Approx(1.5));
    CHECK(out[0][1] == doctest::Approx(-1.0));
  }
  SUBCASE("identical vectors are a fixed point of both kinds") {
    const std::vector<msc::Vector> constant(5, msc::Vector{0.5, -2.0, 0.0});
    for (const auto kind : {msc::PoolingConfig::Kind::Max, msc::PoolingConfig::Kind::Average}) {
      msc::PoolingConfig cfg;
      cfg.kind = kind;
      cfg.factor = 3;
      for (const auto& v : msc::pool(constant, cfg)) CHECK(v == constant.front());
    }
  }
}

TEST_CASE("pooling output length is the window count") {
  msc::Rng rng(1100);
  std::vector<msc::Vector> seq(11, msc::Vector(3));
  for (auto& v : seq) {
    for (auto& x : v) x = rng.normal();
  }
  for (std::size_t factor : {1u, 2u, 3u, 4u, 11u, 15u}) {
    msc::PoolingConfig cfg;
    cfg.factor = factor;
    CHECK(msc::pool(seq, cfg).size() == (seq.size() + factor - 1) / factor);
  }
}

TEST_CASE("max pooling output magnitude matches the window maximum per coordinate") {
  msc::Rng rng(1200);
  std::vector<msc::Vector> seq(9, msc::Vector(5));
  for (auto& v : seq) {
    for (auto& x : v) x = rng.normal();
  }
  msc::PoolingConfig cfg;
  cfg.kind = msc::PoolingConfig::Kind::Max;
  cfg.factor = 3;
  const auto out = msc::pool(seq, cfg);
  REQUIRE(out.size() == 3);
  for (std::size_t w = 0; w < 3; ++w) {
    for (std::size_t i = 0; i < 5; ++i) {
      double peak = 0.0;
      for (std::size_t t = 3 * w; t < 3 * w + 3; ++t) peak = std::max(peak, std::abs(seq[t][i]));
      CHECK(std::abs(out[w][i]) == doctest::Approx(peak).epsilon(1e-15));
    }
  }
}

TEST_CASE("average pooling composes across aligned factors") {
  msc::Rng rng(1300);
  std::vector<msc::Vector> seq(12, msc::Vector(4));
  for (auto& v : seq) {
    for (auto& x : v) x = rng.normal();
  }
  msc::PoolingConfig two, three, six;
  two.kind = three.kind = six.kind = msc::PoolingConfig::Kind::Average;
  two.factor = 2;
  three.factor = 3;
  six.factor = 6;
  const auto composed = msc::pool(msc::pool(seq, two), three);
  const auto direct = msc::pool(seq, six);
  REQUIRE(composed.size() == direct.size());
  for (std::size_t w = 0; w < direct.size(); ++w) {
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(composed[w][i] == doctest::Approx(direct[w][i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("pooling rejects malformed sequences") {
  msc::PoolingConfig cfg;
  cfg.factor = 2;
  CHECK_THROWS_AS(msc::pool(std::vector<msc::Vector>{}, cfg), msc::argument_error);
  CHECK_THROWS_AS(msc::pool({msc::Vector{1.0}, msc::Vector{1.0, 2.0}}, cfg), msc::argument_error);
  cfg.factor = 0;
  CHECK_THROWS_AS(msc::pool({msc::Vector{1.0}}, cfg), msc::argument_error);
}

TEST_CASE("sparse code sequences pool through their dense forms") {
  const msc::SparseCode c1(4, {{0, 2.0}}, msc::Regularizer::l1(0.1));
  const msc::SparseCode c2(4, {{0, -3.0}, {2, 1.0}}, msc::Regularizer::l1(0.1));
  msc::PoolingConfig cfg;
  cfg.kind = msc::PoolingConfig::Kind::Max;
  cfg.factor = 2;
  const auto out = msc::pool(std::vector<msc::SparseCode>{c1, c2}, cfg);
  REQUIRE(out.size() == 1);
  CHECK(out[0] == msc::Vector{-3.0, 0.0, 1.0, 0.0});
}

TEST_CASE("stack training validates its configuration") {
  StackFixture fx;

  SUBCASE("a healthy config trains") {
    const msc::DeepModel model = msc::train_stack(fx.xsa, fx.xsb, fx.cfg, fx.groups);
    CHECK(model.modality_layers.size() == 2);
    CHECK(model.joint_layers.size() == 1);
    model.joint_layers[0].dictionary.validate();
  }
  SUBCASE("unpaired frame counts") {
    const msc::Matrix short_b = random_columns(4, 39, 1400);
    CHECK_THROWS_AS(msc::train_stack(fx.xsa, short_b, fx.cfg, fx.groups), msc::argument_error);
  }
  SUBCASE("missing joint layer") {
    fx.cfg.joint_layers.clear();
    CHECK_THROWS_AS(msc::train_stack(fx.xsa, fx.xsb, fx.cfg, fx.groups), msc::argument_error);
  }
  SUBCASE("wrong modality stack count") {
    fx.cfg.per_modality_layers.pop_back();
    CHECK_THROWS_AS(msc::train_stack(fx.xsa, fx.xsb, fx.cfg, fx.groups), msc::argument_error);
  }
  SUBCASE("group sizes must sum to the frame count") {
    fx.groups.back() = 3;
    CHECK_THROWS_AS(msc::train_stack(fx.xsa, fx.xsb, fx.cfg, fx.groups), msc::argument_error);
  }
  SUBCASE("pooling factor beyond every example is a configuration error") {
    fx.cfg.joint_layers[0].pooling.factor = 3;  // after factor-2 pooling only 2 frames remain
    CHECK_THROWS_AS(msc::train_stack(fx.xsa, fx.xsb, fx.cfg, fx.groups), msc::argument_error);
  }
}

TEST_CASE("forward pass is deterministic and order-independent across examples") {
  StackFixture fx;
  const msc::DeepModel model = msc::train_stack(fx.xsa, fx.xsb, fx.cfg, fx.groups);

  auto example = [&](std::size_t g) {
    std::vector<msc::Vector> xa, xb;
    for (std::size_t t = 0; t < 4; ++t) {
      xa.push_back(fx.xsa.col_vector(4 * g + t));
      xb.push_back(fx.xsb.col_vector(4 * g + t));
    }
    return std::make_pair(xa, xb);
  };

  const auto [xa0, xb0] = example(0);
  const auto [xa1, xb1] = example(1);
  const msc::Vector f0 = msc::forward(xa0, xb0, model);
  CHECK(f0.size() == 12);  // the joint layer's atom count
  CHECK(f0 == msc::forward(xa0, xb0, model));

  // Features are per-example; evaluating 1 then 0 must reproduce 0's vector.
  const msc::Vector f1 = msc::forward(xa1, xb1, model);
  CHECK(msc::forward(xa0, xb0, model) == f0);
  CHECK(msc::forward(xa1, xb1, model) == f1);

  SUBCASE("zero input maps to the zero feature") {
    const std::vector<msc::Vector> za(4, msc::Vector(6, 0.0));
    const std::vector<msc::Vector> zb(4, msc::Vector(4, 0.0));
    for (double v : msc::forward(za, zb, model)) CHECK(v == 0.0);
  }
  SUBCASE("forward of training frames reproduces the training-time codes") {
    // The first unimodal layer's codes are recomputable with the stored
    // dictionary and solver; training used exactly this path.
    const auto& layer = model.modality_layers[0].second[0];
    const msc::SparseCode again = msc::lasso_encode(xa0[0], layer.dictionary, layer.solver);
    const msc::SparseCode once = msc::lasso_encode(xa0[0], layer.dictionary, layer.solver);
    CHECK(again == once);
  }
}

TEST_CASE("a second joint layer deepens the pathway") {
  StackFixture fx;
  fx.cfg.joint_layers = {small_layer(12, 0.2, 1, 3), small_layer(6, 0.3, 2, 4)};
  const msc::DeepModel model = msc::train_stack(fx.xsa, fx.xsb, fx.cfg, fx.groups);
  REQUIRE(model.joint_layers.size() == 2);

  std::vector<msc::Vector> xa, xb;
  for (std::size_t t = 0; t < 4; ++t) {
    xa.push_back(fx.xsa.col_vector(t));
    xb.push_back(fx.xsb.col_vector(t));
  }
  CHECK(msc::forward(xa, xb, model).size() == 6);  // top layer's atom count
}

TEST_CASE("deep models survive the file round trip") {
  StackFixture fx;
  const msc::DeepModel model = msc::train_stack(fx.xsa, fx.xsb, fx.cfg, fx.groups);
  const auto stem = (std::filesystem::temp_directory_path() / "msc_stack_rt").string();
  msc::save_stack(model, stem);
  const msc::DeepModel back = msc::load_stack(stem);

  REQUIRE(back.modality_layers.size() == 2);
  CHECK(back.modality_layers[0].first == "a");
  CHECK(back.modality_layers[0].second[0].dictionary.atoms() ==
        model.modality_layers[0].second[0].dictionary.atoms());
  CHECK(back.joint_layers[0].pooling.factor == 2);

  std::vector<msc::Vector> xa, xb;
  for (std::size_t t = 0; t < 4; ++t) {
    xa.push_back(fx.xsa.col_vector(t));
    xb.push_back(fx.xsb.col_vector(t));
  }
  CHECK(msc::forward(xa, xb, back) == msc::forward(xa, xb, model));

  for (const auto& entry : std::filesystem::directory_iterator(std::filesystem::temp_directory_path())) {
    const auto name = entry.path().filename().string();
    if (name.rfind("msc_stack_rt", 0) == 0) std::filesystem::remove(entry.path());
  }
}
