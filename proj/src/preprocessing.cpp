#include "msc/preprocessing.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "msc/errors.hpp"
#include "msc/rng.hpp"

namespace msc {

Matrix extract_patches(const Image& img, const PatchConfig& cfg) {
  if (cfg.width == 0 || cfg.height == 0 || cfg.channels == 0) {
    throw argument_error("extract_patches: patch dimensions must be positive");
  }
  if (img.channels != cfg.channels) throw argument_error("extract_patches: channel count mismatch");
  if (img.pixels.size() != img.width * img.height * img.channels) {
    throw argument_error("extract_patches: pixel buffer does not match image shape");
  }
  if (cfg.width > img.width || cfg.height > img.height) {
    throw argument_error("extract_patches: patch larger than image");
  }

  const std::size_t stride = cfg.stride == 0 ? cfg.width : cfg.stride;
  const std::size_t stride_y = cfg.stride == 0 ? cfg.height : cfg.stride;
  std::vector<std::pair<std::size_t, std::size_t>> origins;
  for (std::size_t y = 0; y + cfg.height <= img.height; y += stride_y) {
    for (std::size_t x = 0; x + cfg.width <= img.width; x += stride) origins.emplace_back(x, y);
  }

  const std::size_t dim = cfg.width * cfg.height * cfg.channels;
  Matrix out(dim, origins.size());
  for (std::size_t p = 0; p < origins.size(); ++p) {
    const auto [ox, oy] = origins[p];
    std::size_t at = 0;
    for (std::size_t dy = 0; dy < cfg.height; ++dy) {
      for (std::size_t dx = 0; dx < cfg.width; ++dx) {
        for (std::size_t c = 0; c < cfg.channels; ++c) out(at++, p) = img.at(ox + dx, oy + dy, c);
      }
    }
  }
  return out;
}

Matrix extract_patches(const Vector& x, const PatchConfig& cfg) {
  if (cfg.patch_len == 0) throw argument_error("extract_patches: patch_len must be positive");
  if (cfg.patch_len > x.size()) throw argument_error("extract_patches: patch larger than vector");
  const std::size_t stride = cfg.stride == 0 ? cfg.patch_len : cfg.stride;

  std::vector<std::size_t> origins;
  for (std::size_t o = 0; o + cfg.patch_len <= x.size(); o += stride) origins.push_back(o);

  Matrix out(cfg.patch_len, origins.size());
  for (std::size_t p = 0; p < origins.size(); ++p) {
    for (std::size_t i = 0; i < cfg.patch_len; ++i) out(i, p) = x[origins[p] + i];
  }
  return out;
}

Image assemble_patches(const Matrix& patches, const PatchConfig& cfg, std::size_t width,
                       std::size_t height) {
  if (cfg.width == 0 || cfg.height == 0 || cfg.channels == 0) {
    throw argument_error("assemble_patches: patch dimensions must be positive");
  }
  if (cfg.stride != 0 && (cfg.stride != cfg.width || cfg.stride != cfg.height)) {
    throw argument_error("assemble_patches: only non-overlapping tilings are invertible");
  }
  if (width % cfg.width != 0 || height % cfg.height != 0) {
    throw argument_error("assemble_patches: patches do not tile the image exactly");
  }
  const std::size_t nx = width / cfg.width;
  const std::size_t ny = height / cfg.height;
  if (patches.cols() != nx * ny || patches.rows() != cfg.width * cfg.height * cfg.channels) {
    throw argument_error("assemble_patches: patch matrix does not match the target shape");
  }

  Image img{width, height, cfg.channels, Vector(width * height * cfg.channels, 0.0)};
  for (std::size_t p = 0; p < patches.cols(); ++p) {
    const std::size_t ox = (p % nx) * cfg.width;
    const std::size_t oy = (p / nx) * cfg.height;
    std::size_t at = 0;
    for (std::size_t dy = 0; dy < cfg.height; ++dy) {
      for (std::size_t dx = 0; dx < cfg.width; ++dx) {
        for (std::size_t c = 0; c < cfg.channels; ++c) img.at(ox + dx, oy + dy, c) = patches(at++, p);
      }
    }
  }
  return img;
}

WhiteningTransform fit_whitening(const Matrix& xs, std::size_t keep_d, double epsilon) {
  if (xs.cols() < 2) throw argument_error("fit_whitening: at least two examples required");
  if (keep_d == 0 || keep_d > xs.rows()) throw argument_error("fit_whitening: keep_d out of range");
  if (epsilon < 0.0) throw argument_error("fit_whitening: epsilon must be non-negative");

  const std::size_t n = xs.cols();
  const std::size_t dim = xs.rows();

  Vector mean(dim, 0.0);
  for (std::size_t j = 0; j < n; ++j) axpy(1.0, xs.col(j), mean.data(), dim);
  scale(1.0 / static_cast<double>(n), mean.data(), dim);

  Matrix centered = xs;
  for (std::size_t j = 0; j < n; ++j) axpy(-1.0, mean.data(), centered.col(j), dim);

  Matrix cov = matmul(centered, transpose(centered));
  scale(1.0 / static_cast<double>(n - 1), cov.data().data(), cov.data().size());

  EigenDecomposition eig = eigh(cov);

  WhiteningTransform t;
  t.mean = std::move(mean);
  t.epsilon = epsilon;
  t.eigenvalues.resize(keep_d);
  t.projection = Matrix(keep_d, dim);
  for (std::size_t i = 0; i < keep_d; ++i) {
    const double lambda = std::max(eig.values[i], 0.0);
    t.eigenvalues[i] = lambda;
    const double denom = lambda + epsilon;
    if (denom <= 0.0) throw numeric_error("fit_whitening: zero-variance component with epsilon 0");
    const double s = 1.0 / std::sqrt(denom);
    for (std::size_t r = 0; r < dim; ++r) t.projection(i, r) = s * eig.vectors(r, i);
  }
  return t;
}

Vector apply_whitening(const WhiteningTransform& t, const Vector& x) {
  if (x.size() != t.mean.size()) throw argument_error("apply_whitening: dimension mismatch");
  Vector centered = x;
  axpy(-1.0, t.mean.data(), centered.data(), centered.size());
  return matvec(t.projection, centered);
}

Matrix apply_whitening(const WhiteningTransform& t, const Matrix& xs) {
  if (xs.rows() != t.mean.size()) throw argument_error("apply_whitening: dimension mismatch");
  Matrix out(t.projection.rows(), xs.cols());
  for (std::size_t j = 0; j < xs.cols(); ++j) {
    out.set_col(j, apply_whitening(t, xs.col_vector(j)));
  }
  return out;
}

Matrix add_gaussian_noise(const Matrix& xs, double sigma, std::uint64_t seed) {
  if (sigma < 0.0) throw argument_error("add_gaussian_noise: sigma must be non-negative");
  Matrix out = xs;
  if (sigma == 0.0) return out;
  const double dev = std::sqrt(sigma);
  Rng rng(seed);
  for (double& v : out.data()) v += dev * rng.normal();
  return out;
}

void save_whitening(const WhiteningTransform& t, const std::string& stem) {
  Matrix mean(t.mean.size(), 1, t.mean);
  save_matrix(mean, stem + "_mean.msc");
  save_matrix(t.projection, stem + "_proj.msc");

  nlohmann::ordered_json j;
  j["epsilon"] = t.epsilon;
  j["keep_d"] = t.projection.rows();
  std::ofstream os(stem + ".json", std::ios::trunc);
  if (!os) throw format_error("save_whitening: cannot open '" + stem + ".json'");
  os << j.dump(2) << '\n';
}

WhiteningTransform load_whitening(const std::string& stem) {
  Matrix mean = load_matrix(stem + "_mean.msc");
  Matrix proj = load_matrix(stem + "_proj.msc");
  if (mean.cols() != 1 || mean.rows() != proj.cols()) {
    throw format_error("load_whitening: mean and projection shapes disagree");
  }

  std::ifstream is(stem + ".json");
  if (!is) throw format_error("load_whitening: cannot open '" + stem + ".json'");
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw format_error(std::string("load_whitening: bad sidecar: ") + e.what());
  }
  if (j.at("keep_d").get<std::size_t>() != proj.rows()) {
    throw format_error("load_whitening: keep_d does not match the projection");
  }

  WhiteningTransform t;
  t.mean = mean.col_vector(0);
  t.projection = std::move(proj);
  t.epsilon = j.at("epsilon").get<double>();
  return t;
}

}  // namespace msc
