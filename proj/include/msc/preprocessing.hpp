#pragma once

#include <cstdint>
#include <string>

#include "msc/matrix.hpp"

namespace msc {

// Row-major pixels, channel index fastest: pixels[(y*width + x)*channels + c].
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 1;
  Vector pixels;

  double& at(std::size_t x, std::size_t y, std::size_t c) {
    return pixels[(y * width + x) * channels + c];
  }
  double at(std::size_t x, std::size_t y, std::size_t c) const {
    return pixels[(y * width + x) * channels + c];
  }
};

// Image patches are width×height×channels blocks; vector patches are
// patch_len runs. stride 0 means the patch size (non-overlapping tiling).
struct PatchConfig {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 1;
  std::size_t stride = 0;
  std::size_t patch_len = 0;
};

// One column per patch, row-major within the patch with the channel index
// fastest. Patch origins scan left-to-right, top-to-bottom; trailing partial
// patches are discarded.
Matrix extract_patches(const Image& img, const PatchConfig& cfg);
Matrix extract_patches(const Vector& x, const PatchConfig& cfg);

// Inverse of non-overlapping extraction when the patches tile the image
// exactly (stride equal to the patch size, no remainder).
Image assemble_patches(const Matrix& patches, const PatchConfig& cfg, std::size_t width,
                       std::size_t height);

// Centering plus projection onto the top keep_d principal components,
// rescaled by (eigenvalue + epsilon)^(-1/2).
struct WhiteningTransform {
  Vector mean;
  Matrix projection;  // keep_d × N
  Vector eigenvalues;
  double epsilon = 0.0;
};

WhiteningTransform fit_whitening(const Matrix& xs, std::size_t keep_d, double epsilon = 1e-5);
Matrix apply_whitening(const WhiteningTransform& t, const Matrix& xs);
Vector apply_whitening(const WhiteningTransform& t, const Vector& x);

// Adds i.i.d. zero-mean Gaussian noise. The sigma argument acts as a
// variance (the deviation is its square root): with that reading a noisy
// unit-peak image scores 10*log10(1/sigma) dB, which is how the reference
// noise levels pair with their reported PSNRs. Values are not clipped.
Matrix add_gaussian_noise(const Matrix& xs, double sigma, std::uint64_t seed);

// Writes <stem>_mean.msc, <stem>_proj.msc and <stem>.json. The eigenvalue
// spectrum is an audit field and is not persisted.
void save_whitening(const WhiteningTransform& t, const std::string& stem);
WhiteningTransform load_whitening(const std::string& stem);

}  // namespace msc
