#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "msc/matrix.hpp"
#include "msc/preprocessing.hpp"

namespace msc {

// Seeded stand-in corpus for a small natural-image set: each image mixes a
// few random 2-D sinusoids, rescaled to [0, 1].
struct TextureCorpusConfig {
  std::size_t num_images = 2500;
  std::size_t width = 8;
  std::size_t height = 8;
  // Each image sums num_waves oriented gratings whose frequencies come from
  // a finite pool shared by the whole corpus, so patches stay sparse in a
  // fixed quadrature basis and a learned dictionary can model them with
  // little approximation error. The default single-grating corpus keeps
  // per-patch contrast high enough that denoising has room to work at the
  // benchmark noise levels.
  std::size_t num_waves = 1;
  std::size_t num_frequencies = 8;
  std::uint64_t seed = 0;
};
std::vector<Image> make_texture_corpus(const TextureCorpusConfig& cfg);

// Cross-modal denoising protocol: pair clean patches with noisy ones, train
// a joint dictionary per noise level, reconstruct the clean modality from
// noisy test patches, and average PSNR over the repeats.
struct DenoiseConfig {
  std::size_t train_images = 2000;
  std::size_t test_images = 500;
  std::size_t image_width = 8;
  std::size_t image_height = 8;
  std::size_t patch = 4;
  std::size_t num_atoms = 300;
  double lambda = 0.08;  // joint-space L1 weight
  int epochs = 8;
  std::size_t batch_size = 256;
  std::vector<double> sigmas = {0.001, 0.005, 0.01, 0.1};
  std::size_t repeats = 5;
  std::uint64_t seed = 0;
};

struct DenoiseRow {
  double sigma = 0.0;
  bool exact = false;  // sigma zero: both PSNRs are exact matches
  double noisy_psnr = 0.0;
  double denoised_psnr = 0.0;
};

struct DenoiseReport {
  DenoiseConfig config;
  std::vector<DenoiseRow> rows;
};

DenoiseReport run_denoise(const DenoiseConfig& cfg);

// Synthetic paired-modality classification benchmark. The linear variant
// draws class-dependent sparse latents rendered into both modalities, then
// adds white noise plus structured class-irrelevant clutter (heavier on
// modality a); the nonlinear variant makes the label depend on which latent
// pair co-activates (not linearly decodable from the codes) and renders
// modality b from squared latents.
struct ClassifyConfig {
  bool nonlinear = false;
  std::size_t train_examples = 250;
  std::size_t test_examples = 600;
  std::size_t dim_a = 48;  // wide noisy modality; dim_b is narrow and clean
  std::size_t dim_b = 12;
  double signal_a = 2.0;  // render amplitude of the shared latents per modality
  double signal_b = 1.0;
  double noise_a = 0.40;  // white noise deviation per entry, modality a
  double noise_b = 0.20;
  double clutter_a = 1.3;  // amplitude of structured single-modality clutter
  double clutter_b = 0.25;
  std::size_t num_atoms = 32;  // per shallow trained dictionary
  double lambda = 0.2;         // unimodal L1 weight
  // The joint dictionary trains on concatenated inputs whose per-modality
  // blocks shrink in norm; this factor scales the joint L1 weight on top of
  // the sqrt-coupling correction so joint codes stay as sparse as unimodal
  // ones. The cross-modal weight is derived from the scaled value.
  double lambda_joint_scale = 2.0;
  int dict_epochs = 12;
  std::size_t frames = 1;          // per example; deep schemes need >= 2
  // Deep schemes: the first layer is overcomplete so the per-modality codes
  // recover the latents cleanly; the top dictionary is deliberately tiny so
  // it has to merge correlated code slots into group-level detectors.
  std::size_t deep_atoms_l1 = 32;
  std::size_t deep_atoms_l2 = 3;
  double deep_lambda_l1 = 0.5;
  double deep_lambda_l2 = 1.0;
  std::vector<double> svm_c_grid = {0.3, 1.0, 3.0, 10.0};
  int svm_epochs = 20;
  std::vector<std::string> schemes;  // empty selects the variant's defaults
  std::size_t repeats = 5;  // reported seeds; accuracy rows average the draws
  std::size_t draws = 2;    // independent experiment instances per seed
  std::uint64_t seed = 0;
};

struct SchemeStat {
  std::string scheme;
  double mean_accuracy = 0.0;
  double std_error = 0.0;
  std::vector<double> accuracies;  // one per repeat, for paired comparisons
};

struct ClassifyReport {
  ClassifyConfig config;
  std::vector<SchemeStat> schemes;
};

ClassifyReport run_synth_classify(const ClassifyConfig& cfg);

std::vector<std::string> default_schemes(bool nonlinear);
bool is_known_scheme(const std::string& name);

// Machine-readable and human-readable renderings. Timing is deliberately
// absent so a rerun with the same seed reproduces the bytes.
nlohmann::ordered_json to_json(const DenoiseReport& report);
nlohmann::ordered_json to_json(const ClassifyReport& report);
std::string to_table(const DenoiseReport& report);
std::string to_table(const ClassifyReport& report);

}  // namespace msc
