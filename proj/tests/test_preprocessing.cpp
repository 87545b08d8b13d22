#include <cmath>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <doctest.h>

#include "msc/errors.hpp"
#include "msc/evaluation.hpp"
#include "msc/matrix.hpp"
#include "msc/preprocessing.hpp"
#include "msc/rng.hpp"

namespace {

msc::Image random_image(std::size_t w, std::size_t h, std::size_t c, std::uint64_t seed) {
  msc::Rng rng(seed);
  msc::Image img{w, h, c, msc::Vector(w * h * c)};
  for (auto& v : img.pixels) v = rng.uniform();
  return img;
}

// Sample covariance with the same n-1 normalization the fit uses.
msc::Matrix sample_covariance(const msc::Matrix& xs) {
  const std::size_t n = xs.cols();
  msc::Vector mean(xs.rows(), 0.0);
  for (std::size_t j = 0; j < n; ++j) msc::axpy(1.0, xs.col(j), mean.data(), mean.size());
  msc::scale(1.0 / static_cast<double>(n), mean.data(), mean.size());
  msc::Matrix centered = xs;
  for (std::size_t j = 0; j < n; ++j) msc::axpy(-1.0, mean.data(), centered.col(j), mean.size());
  msc::Matrix cov = msc::matmul(centered, msc::transpose(centered));
  msc::scale(1.0 / static_cast<double>(n - 1), cov.data().data(), cov.data().size());
  return cov;
}

}  // namespace

TEST_CASE("patch extraction tiles images into columns") {
  SUBCASE("an 8x8 image in 4x4 tiles gives four patches") {
    const msc::Image img = random_image(8, 8, 1, 10);
    const msc::Matrix patches = msc::extract_patches(img, {4, 4, 1, 0, 0});
    CHECK(patches.rows() == 16);
    CHECK(patches.cols() == 4);
    // Patch 0 is the top-left tile, row-major inside the patch.
    CHECK(patches(0, 0) == img.at(0, 0, 0));
    CHECK(patches(5, 0) == img.at(1, 1, 0));
    // Patch 1 starts at x=4, patch 2 at (0,4): left-to-right then downward.
    CHECK(patches(0, 1) == img.at(4, 0, 0));
    CHECK(patches(0, 2) == img.at(0, 4, 0));
  }
  SUBCASE("a full-size three-channel patch is one column, channel fastest") {
    const msc::Image img = random_image(4, 4, 3, 11);
    const msc::Matrix patches = msc::extract_patches(img, {4, 4, 3, 0, 0});
    CHECK(patches.rows() == 48);
    CHECK(patches.cols() == 1);
    CHECK(patches(0, 0) == img.at(0, 0, 0));
    CHECK(patches(1, 0) == img.at(0, 0, 1));
    CHECK(patches(3, 0) == img.at(1, 0, 0));
  }
  SUBCASE("trailing remainders are discarded") {
    const msc::Image img = random_image(9, 9, 1, 12);
    const msc::Matrix patches = msc::extract_patches(img, {4, 4, 1, 0, 0});
    CHECK(patches.cols() == 4);
  }
  SUBCASE("patches larger than the input are refused") {
    const msc::Image img = random_image(3, 3, 1, 13);
    CHECK_THROWS_AS(msc::extract_patches(img, {4, 4, 1, 0, 0}), msc::argument_error);
  }
}

TEST_CASE("vector patch extraction splits runs") {
  msc::Rng rng(14);
  msc::Vector x(84);
  for (auto& v : x) v = rng.normal();
  msc::PatchConfig cfg;
  cfg.patch_len = 42;
  const msc::Matrix patches = msc::extract_patches(x, cfg);
  CHECK(patches.rows() == 42);
  CHECK(patches.cols() == 2);
  CHECK(patches(0, 1) == x[42]);

  cfg.patch_len = 100;
  CHECK_THROWS_AS(msc::extract_patches(x, cfg), msc::argument_error);
}

TEST_CASE("non-overlapping extraction and assembly invert each other") {
  const msc::Image img = random_image(12, 8, 2, 15);
  const msc::PatchConfig cfg{4, 4, 2, 0, 0};
  const msc::Matrix patches = msc::extract_patches(img, cfg);
  const msc::Image back = msc::assemble_patches(patches, cfg, 12, 8);
  CHECK(back.pixels == img.pixels);

  SUBCASE("non-tiling targets are refused") {
    CHECK_THROWS_AS(msc::assemble_patches(patches, cfg, 13, 8), msc::argument_error);
  }
}

TEST_CASE("whitening makes full-rank gaussian data isotropic") {
  // Correlated data: x = A z with a random square mixing matrix.
  const std::size_t dim = 6, n = 900;
  msc::Rng rng(20);
  msc::Matrix mixing(dim, dim);
  for (auto& v : mixing.data()) v = rng.normal();
  msc::Matrix xs(dim, n);
  for (std::size_t j = 0; j < n; ++j) {
    msc::Vector z(dim);
    for (auto& v : z) v = rng.normal();
    xs.set_col(j, msc::matvec(mixing, z));
  }

  const msc::WhiteningTransform t = msc::fit_whitening(xs, dim, 0.0);

  SUBCASE("eigenvalues are sorted and non-negative") {
    for (std::size_t i = 1; i < dim; ++i) CHECK(t.eigenvalues[i - 1] >= t.eigenvalues[i]);
    CHECK(t.eigenvalues[dim - 1] >= 0.0);
  }
  SUBCASE("whitened covariance is the identity") {
    const msc::Matrix cov = sample_covariance(msc::apply_whitening(t, xs));
    for (std::size_t i = 0; i < dim; ++i) {
      for (std::size_t j = 0; j < dim; ++j) {
        CHECK(cov(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-8).scale(1.0));
      }
    }
  }
  SUBCASE("covariance trace stays within one percent of the kept dimension") {
    const msc::Matrix cov = sample_covariance(msc::apply_whitening(t, xs));
    double trace = 0.0;
    for (std::size_t i = 0; i < dim; ++i) trace += cov(i, i);
    CHECK(trace == doctest::Approx(static_cast<double>(dim)).epsilon(0.01));
  }
  SUBCASE("the mean vector whitens to zero") {
    msc::Vector mean(dim, 0.0);
    for (std::size_t j = 0; j < n; ++j) msc::axpy(1.0, xs.col(j), mean.data(), dim);
    msc::scale(1.0 / static_cast<double>(n), mean.data(), dim);
    for (double v : msc::apply_whitening(t, mean)) CHECK(v == doctest::Approx(0.0).scale(1.0));
  }
  SUBCASE("refitting is deterministic") {
    const msc::WhiteningTransform again = msc::fit_whitening(xs, dim, 0.0);
    CHECK(again.projection == t.projection);
    CHECK(again.mean == t.mean);
  }
}

TEST_CASE("whitening reduces dimension when asked") {
  msc::Rng rng(21);
  msc::Matrix xs(48, 400);
  for (auto& v : xs.data()) v = rng.normal();
  const msc::WhiteningTransform t = msc::fit_whitening(xs, 12);
  CHECK(t.projection.rows() == 12);
  CHECK(t.projection.cols() == 48);
  CHECK(t.eigenvalues.size() == 12);
  CHECK(msc::apply_whitening(t, xs).rows() == 12);

  SUBCASE("already-white data has near-unit eigenvalues") {
    // 400 samples of N(0, I) in 48 dims: the sample spectrum spreads to
    // roughly (1 +- sqrt(48/400))^2, so bound it loosely around 1.
    for (double v : t.eigenvalues) {
      CHECK(v > 0.3);
      CHECK(v < 2.2);
    }
  }
}

TEST_CASE("degenerate whitening inputs raise the right errors") {
  msc::Matrix constant(3, 10);
  for (auto& v : constant.data()) v = 2.5;
  CHECK_THROWS_AS(msc::fit_whitening(constant, 3, 0.0), msc::numeric_error);
  CHECK_NOTHROW(msc::fit_whitening(constant, 3, 1e-5));

  msc::Matrix tiny(3, 1);
  CHECK_THROWS_AS(msc::fit_whitening(tiny, 3), msc::argument_error);
  msc::Matrix ok(3, 5, std::vector<double>(15, 1.0));
  CHECK_THROWS_AS(msc::fit_whitening(ok, 4), msc::argument_error);
  const msc::WhiteningTransform t = msc::fit_whitening(msc::Matrix(3, 5, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15}), 2);
  CHECK_THROWS_AS(msc::apply_whitening(t, msc::Vector(4, 0.0)), msc::argument_error);
}

TEST_CASE("gaussian noise injection is seeded and calibrated") {
  msc::Rng rng(30);
  msc::Matrix xs(32, 500);
  for (auto& v : xs.data()) v = rng.uniform();

  SUBCASE("zero sigma is the identity") {
    CHECK(msc::add_gaussian_noise(xs, 0.0, 7) == xs);
  }
  SUBCASE("the same seed reproduces the same noise") {
    CHECK(msc::add_gaussian_noise(xs, 0.01, 7) == msc::add_gaussian_noise(xs, 0.01, 7));
    CHECK_FALSE(msc::add_gaussian_noise(xs, 0.01, 7) == msc::add_gaussian_noise(xs, 0.01, 8));
  }
  SUBCASE("sigma acts as the noise variance in the psnr calibration") {
    const msc::Matrix noisy = msc::add_gaussian_noise(xs, 0.01, 9);
    const msc::Psnr p = msc::psnr(xs, noisy, 1.0);
    REQUIRE_FALSE(p.exact);
    CHECK(p.db == doctest::Approx(20.0).epsilon(0.025));  // 10*log10(1/0.01) within half a dB
  }
  SUBCASE("noise is zero-mean at the statistical tolerance") {
    msc::Matrix zeros(1000, 1000);
    const msc::Matrix noise = msc::add_gaussian_noise(zeros, 0.04, 10);
    double mean = 0.0;
    for (double v : noise.data()) mean += v;
    mean /= static_cast<double>(noise.data().size());
    CHECK(std::abs(mean) < 4.0 * 0.2 / 1000.0);  // 4 sigma of the mean of 1e6 draws
  }
  SUBCASE("values are not clipped") {
    msc::Matrix edge(1, 2000);
    for (std::size_t j = 0; j < 2000; ++j) edge(0, j) = j % 2 == 0 ? 0.0 : 1.0;
    const msc::Matrix noisy = msc::add_gaussian_noise(edge, 0.1, 11);
    double lo = 1.0, hi = 0.0;
    for (double v : noisy.data()) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    CHECK(lo < 0.0);
    CHECK(hi > 1.0);
  }
}

TEST_CASE("whitening transforms round-trip through their files") {
  msc::Rng rng(40);
  msc::Matrix xs(10, 200);
  for (auto& v : xs.data()) v = rng.normal();
  const msc::WhiteningTransform t = msc::fit_whitening(xs, 4, 1e-5);

  const auto stem = (std::filesystem::temp_directory_path() / "msc_whiten_rt").string();
  msc::save_whitening(t, stem);
  const msc::WhiteningTransform back = msc::load_whitening(stem);
  CHECK(back.mean == t.mean);
  CHECK(back.projection == t.projection);
  CHECK(back.epsilon == t.epsilon);

  const msc::Vector x = xs.col_vector(0);
  CHECK(msc::apply_whitening(back, x) == msc::apply_whitening(t, x));
  std::filesystem::remove(stem + "_mean.msc");
  std::filesystem::remove(stem + "_proj.msc");
  std::filesystem::remove(stem + ".json");
}
