#include "msc/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <utility>

#include "msc/deep.hpp"
#include "msc/dictionary.hpp"
#include "msc/errors.hpp"
#include "msc/evaluation.hpp"
#include "msc/multimodal.hpp"
#include "msc/rng.hpp"
#include "msc/solvers.hpp"

namespace msc {

namespace {

// splitmix64 finalizer; decorrelates the per-repeat seed streams.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

constexpr double kPi = 3.14159265358979323846;

}  // namespace

std::vector<Image> make_texture_corpus(const TextureCorpusConfig& cfg) {
  if (cfg.num_images == 0 || cfg.width == 0 || cfg.height == 0 || cfg.num_waves == 0) {
    throw argument_error("make_texture_corpus: sizes must be positive");
  }
  if (cfg.num_frequencies == 0) {
    throw argument_error("make_texture_corpus: frequency pool must be non-empty");
  }
  Rng rng(cfg.seed);
  // Frequencies start high enough that every patch-sized window sees real
  // oscillation; very low frequencies render near-flat low-contrast patches.
  std::vector<std::pair<double, double>> pool(cfg.num_frequencies);
  for (auto& [fx, fy] : pool) {
    fx = 1.0 + 2.2 * rng.uniform();
    fy = 1.0 + 2.2 * rng.uniform();
  }
  std::vector<Image> out;
  out.reserve(cfg.num_images);
  for (std::size_t n = 0; n < cfg.num_images; ++n) {
    Image img{cfg.width, cfg.height, 1, Vector(cfg.width * cfg.height, 0.0)};
    for (std::size_t w = 0; w < cfg.num_waves; ++w) {
      const double amp = 0.5 + 0.5 * rng.uniform();
      const auto [fx, fy] = pool[rng.index(pool.size())];
      const double phase = 2.0 * kPi * rng.uniform();
      for (std::size_t y = 0; y < cfg.height; ++y) {
        for (std::size_t x = 0; x < cfg.width; ++x) {
          const double arg = 2.0 * kPi * (fx * static_cast<double>(x) / static_cast<double>(cfg.width) +
                                          fy * static_cast<double>(y) / static_cast<double>(cfg.height)) +
                             phase;
          img.at(x, y, 0) += amp * std::sin(arg);
        }
      }
    }
    const auto [lo, hi] = std::minmax_element(img.pixels.begin(), img.pixels.end());
    const double span = *hi - *lo;
    for (double& v : img.pixels) v = span > 0.0 ? (v - *lo) / span : 0.5;
    out.push_back(std::move(img));
  }
  return out;
}

namespace {

// All non-overlapping patches of a contiguous image range as one matrix.
Matrix patches_of(const std::vector<Image>& images, std::size_t begin, std::size_t count,
                  std::size_t patch) {
  const PatchConfig pc{patch, patch, 1, 0, 0};
  const std::size_t per = (images[begin].width / patch) * (images[begin].height / patch);
  Matrix out(patch * patch, per * count);
  std::size_t at = 0;
  for (std::size_t i = begin; i < begin + count; ++i) {
    const Matrix p = extract_patches(images[i], pc);
    for (std::size_t j = 0; j < p.cols(); ++j) out.set_col(at++, p.col_vector(j));
  }
  return out;
}

// Column means removed in place; the means come back for reassembly.
Vector remove_patch_means(Matrix& patches) {
  Vector means(patches.cols());
  for (std::size_t j = 0; j < patches.cols(); ++j) {
    double m = 0.0;
    for (std::size_t i = 0; i < patches.rows(); ++i) m += patches(i, j);
    m /= static_cast<double>(patches.rows());
    means[j] = m;
    for (std::size_t i = 0; i < patches.rows(); ++i) patches(i, j) -= m;
  }
  return means;
}

}  // namespace

DenoiseReport run_denoise(const DenoiseConfig& cfg) {
  if (cfg.train_images == 0 || cfg.test_images == 0) throw argument_error("run_denoise: empty split");
  if (cfg.patch == 0 || cfg.image_width % cfg.patch != 0 || cfg.image_height % cfg.patch != 0) {
    throw argument_error("run_denoise: patch must tile the images exactly");
  }
  if (cfg.sigmas.empty()) throw argument_error("run_denoise: no noise levels requested");
  if (cfg.repeats == 0) throw argument_error("run_denoise: repeats must be positive");
  for (double s : cfg.sigmas) {
    if (s < 0.0) throw argument_error("run_denoise: negative sigma");
  }

  TextureCorpusConfig tex;
  tex.num_images = cfg.train_images + cfg.test_images;
  tex.width = cfg.image_width;
  tex.height = cfg.image_height;
  tex.seed = mix_seed(cfg.seed, 1);
  const std::vector<Image> corpus = make_texture_corpus(tex);

  const Matrix clean_train = patches_of(corpus, 0, cfg.train_images, cfg.patch);
  const Matrix clean_test = patches_of(corpus, cfg.train_images, cfg.test_images, cfg.patch);

  Matrix clean_train_centered = clean_train;
  remove_patch_means(clean_train_centered);

  DenoiseReport report;
  report.config = cfg;

  for (std::size_t si = 0; si < cfg.sigmas.size(); ++si) {
    const double sigma = cfg.sigmas[si];
    DenoiseRow row;
    row.sigma = sigma;
    if (sigma == 0.0) {
      row.exact = true;
      report.rows.push_back(row);
      continue;
    }

    double noisy_sum = 0.0;
    double denoised_sum = 0.0;
    for (std::size_t r = 0; r < cfg.repeats; ++r) {
      const std::uint64_t run_salt = 100 + si * cfg.repeats + r;
      const Matrix noisy_train = add_gaussian_noise(clean_train, sigma, mix_seed(cfg.seed, run_salt));
      const Matrix noisy_test =
          add_gaussian_noise(clean_test, sigma, mix_seed(cfg.seed, run_salt + 5000));

      Matrix noisy_train_centered = noisy_train;
      remove_patch_means(noisy_train_centered);

      TrainConfig train;
      train.num_atoms = cfg.num_atoms;
      train.solver = SolverConfig{Regularizer::l1(cfg.lambda), 20000, 1e-7};
      train.epochs = cfg.epochs;
      train.batch_size = cfg.batch_size;
      train.seed = mix_seed(cfg.seed, run_salt + 10000);
      train.method = TrainMethod::Online;
      const JointModel model =
          train_joint({{"clean", &clean_train_centered}, {"noisy", &noisy_train_centered}}, train);

      // Shared-Gram cross encode of every test patch, noisy block to clean.
      const Matrix sub_noisy = model.sub_dictionary("noisy");
      const Matrix sub_clean = model.sub_dictionary("clean");
      const Matrix g = gram(sub_noisy);
      SolverConfig cross = model.solver;
      cross.reg = Regularizer::l1(model.lambda_cross);

      Matrix noisy_centered = noisy_test;
      const Vector means = remove_patch_means(noisy_centered);

      Matrix estimate(clean_test.rows(), clean_test.cols());
      for (std::size_t j = 0; j < noisy_centered.cols(); ++j) {
        const Vector b = matvec_transposed(sub_noisy, noisy_centered.col_vector(j));
        const SparseCode code = detail::lasso_encode_gram(b, g, cross, model.dictionary.num_atoms());
        Vector rec(clean_test.rows(), means[j]);
        for (const auto& [idx, val] : code.entries()) axpy(val, sub_clean.col(idx), rec.data(), rec.size());
        estimate.set_col(j, rec);
      }

      noisy_sum += psnr(clean_test, noisy_test, 1.0).db;
      denoised_sum += psnr(clean_test, estimate, 1.0).db;
    }
    row.noisy_psnr = noisy_sum / static_cast<double>(cfg.repeats);
    row.denoised_psnr = denoised_sum / static_cast<double>(cfg.repeats);
    report.rows.push_back(row);
  }
  return report;
}

std::vector<std::string> default_schemes(bool nonlinear) {
  if (nonlinear) return {"joint", "deep-3a", "deep-3b"};
  return {"uni-a", "uni-b", "uni-union", "joint", "cross-a", "cross-b", "multi-union"};
}

bool is_known_scheme(const std::string& name) {
  static const std::set<std::string> known = {"uni-a",   "uni-b",       "uni-union",
                                              "joint",   "cross-a",     "cross-b",
                                              "multi-union", "deep-3a", "deep-3b"};
  return known.count(name) > 0;
}

namespace {

struct PairedSet {
  Matrix xa;  // dim_a × (examples · frames)
  Matrix xb;
  std::vector<int> labels;  // per example
};

Matrix random_render(Rng& rng, std::size_t rows, std::size_t latents) {
  Matrix m(rows, latents);
  for (double& v : m.data()) v = rng.normal();
  for (std::size_t j = 0; j < latents; ++j) {
    const double nrm = norm2(m.col(j), rows);
    scale(1.0 / nrm, m.col(j), rows);
  }
  return m;
}

// Linear variant: each class owns a group of latent atoms; an example
// activates two of its class's atoms with positive weights in every frame.
// Modality a is rendered with substantially more noise than b.
// Class-irrelevant structure rendered into one modality only. Unimodal
// training spends atoms on these directions; joint training largely skips
// them because the other modality never co-activates, which is what gives the
// cross-modal schemes their edge.
constexpr std::size_t kClutterA = 24;
constexpr std::size_t kClutterActiveA = 3;
constexpr std::size_t kClutterB = 8;
constexpr std::size_t kClutterActiveB = 1;

PairedSet generate_linear(const ClassifyConfig& cfg, std::size_t examples, Rng& rng, const Matrix& a,
                          const Matrix& b, const Matrix& clutter_a, const Matrix& clutter_b,
                          std::size_t latents, std::size_t classes) {
  const std::size_t group = latents / classes;
  PairedSet set;
  set.xa = Matrix(cfg.dim_a, examples * cfg.frames);
  set.xb = Matrix(cfg.dim_b, examples * cfg.frames);
  set.labels.resize(examples);

  Vector z(latents);
  auto add_clutter = [&rng](Vector& v, const Matrix& render, std::size_t active, double level) {
    for (std::size_t t = 0; t < active; ++t) {
      const std::size_t j = rng.index(render.cols());
      const double amp = level * (0.5 + rng.uniform());
      axpy(amp, render.col(j), v.data(), v.size());
    }
  };
  for (std::size_t e = 0; e < examples; ++e) {
    const std::size_t cls = e % classes;
    set.labels[e] = static_cast<int>(cls);
    const std::size_t concept_idx = cls * group + rng.index(group);

    for (std::size_t f = 0; f < cfg.frames; ++f) {
      std::fill(z.begin(), z.end(), 0.0);
      z[concept_idx] = 0.5 + rng.uniform();
      Vector va = matvec(a, z);
      Vector vb = matvec(b, z);
      scale(cfg.signal_a, va.data(), va.size());
      scale(cfg.signal_b, vb.data(), vb.size());
      add_clutter(va, clutter_a, kClutterActiveA, cfg.clutter_a);
      add_clutter(vb, clutter_b, kClutterActiveB, cfg.clutter_b);
      for (double& v : va) v += cfg.noise_a * rng.normal();
      for (double& v : vb) v += cfg.noise_b * rng.normal();
      set.xa.set_col(e * cfg.frames + f, va);
      set.xb.set_col(e * cfg.frames + f, vb);
    }
  }
  return set;
}

// Nonlinear variant: every frame renders a fresh pair of active latents, and
// the label says whether the whole sequence stays inside one latent group.
// Telling a one-group sequence from a mixed one requires comparing pooled
// group masses, which no per-slot linear readout of flat codes can express;
// composed layers can, because pooling makes group co-activation an explicit
// sparse component. Modality b additionally squares the latents before
// rendering.
PairedSet generate_nonlinear(const ClassifyConfig& cfg, std::size_t examples, Rng& rng, const Matrix& a,
                             const Matrix& b, std::size_t latents) {
  const std::size_t half = latents / 2;
  std::vector<std::pair<std::size_t, std::size_t>> same_lo, same_hi, cross;
  for (std::size_t i = 0; i < latents; ++i) {
    for (std::size_t j = i + 1; j < latents; ++j) {
      const bool gi = i < half;
      const bool gj = j < half;
      if (gi != gj) cross.emplace_back(i, j);
      else (gi ? same_lo : same_hi).emplace_back(i, j);
    }
  }

  PairedSet set;
  set.xa = Matrix(cfg.dim_a, examples * cfg.frames);
  set.xb = Matrix(cfg.dim_b, examples * cfg.frames);
  set.labels.resize(examples);

  Vector z(latents), zsq(latents);
  for (std::size_t e = 0; e < examples; ++e) {
    const int cls = static_cast<int>(e % 2);
    set.labels[e] = cls;
    const auto& pool = cls == 0 ? (rng.index(2) == 0 ? same_lo : same_hi) : cross;

    for (std::size_t f = 0; f < cfg.frames; ++f) {
      const auto [i1, i2] = pool[rng.index(pool.size())];
      std::fill(z.begin(), z.end(), 0.0);
      // Tight amplitude band keeps pooled group masses comparable across
      // examples, so group-level atoms can threshold cleanly.
      z[i1] = 0.75 + 0.5 * rng.uniform();
      z[i2] = 0.75 + 0.5 * rng.uniform();
      for (std::size_t i = 0; i < latents; ++i) zsq[i] = z[i] * z[i];
      Vector va = matvec(a, z);
      Vector vb = matvec(b, zsq);
      scale(cfg.signal_a, va.data(), va.size());
      scale(cfg.signal_b, vb.data(), vb.size());
      for (double& v : va) v += cfg.noise_a * rng.normal();
      for (double& v : vb) v += cfg.noise_b * rng.normal();
      set.xa.set_col(e * cfg.frames + f, va);
      set.xb.set_col(e * cfg.frames + f, vb);
    }
  }
  return set;
}

Matrix dense_codes(const Matrix& xs, const Dictionary& d, const SolverConfig& cfg) {
  const auto codes = batch_encode(xs, d, cfg);
  Matrix out(d.num_atoms(), xs.cols());
  for (std::size_t j = 0; j < codes.size(); ++j) {
    for (const auto& [idx, val] : codes[j].entries()) out(idx, j) = val;
  }
  return out;
}

// Sign-preserving absolute max over each example's frame columns.
Matrix pool_per_example(const Matrix& codes, std::size_t examples, std::size_t frames) {
  Matrix out(codes.rows(), examples);
  for (std::size_t e = 0; e < examples; ++e) {
    for (std::size_t f = 0; f < frames; ++f) {
      const double* c = codes.col(e * frames + f);
      for (std::size_t i = 0; i < codes.rows(); ++i) {
        if (std::abs(c[i]) > std::abs(out(i, e))) out(i, e) = c[i];
      }
    }
  }
  return out;
}

Matrix vstack(const Matrix& top, const Matrix& bottom) {
  Matrix out(top.rows() + bottom.rows(), top.cols());
  for (std::size_t j = 0; j < top.cols(); ++j) {
    for (std::size_t i = 0; i < top.rows(); ++i) out(i, j) = top(i, j);
    for (std::size_t i = 0; i < bottom.rows(); ++i) out(top.rows() + i, j) = bottom(i, j);
  }
  return out;
}

Matrix select_columns(const Matrix& m, const std::vector<std::size_t>& idx) {
  Matrix out(m.rows(), idx.size());
  for (std::size_t j = 0; j < idx.size(); ++j) out.set_col(j, m.col_vector(idx[j]));
  return out;
}

double cv_select_and_test(const Matrix& train_feats, const std::vector<int>& train_labels,
                          const Matrix& test_feats, const std::vector<int>& test_labels,
                          const ClassifyConfig& cfg, std::uint64_t seed) {
  const Matrix tr = l2_normalize_columns(train_feats);
  const Matrix te = l2_normalize_columns(test_feats);
  const std::size_t n = tr.cols();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng fold_rng(mix_seed(seed, 71));
  fold_rng.shuffle(order);

  const std::size_t folds = 5;
  double best_c = cfg.svm_c_grid.front();
  double best_score = -1.0;
  for (double c : cfg.svm_c_grid) {
    double score = 0.0;
    for (std::size_t f = 0; f < folds; ++f) {
      const std::size_t lo = f * n / folds;
      const std::size_t hi = (f + 1) * n / folds;
      std::vector<std::size_t> fit_idx, val_idx;
      for (std::size_t t = 0; t < n; ++t) (t >= lo && t < hi ? val_idx : fit_idx).push_back(order[t]);
      std::vector<int> fit_labels, val_labels;
      for (std::size_t t : fit_idx) fit_labels.push_back(train_labels[t]);
      for (std::size_t t : val_idx) val_labels.push_back(train_labels[t]);
      const LinearModel m = train_svm_ova(select_columns(tr, fit_idx), fit_labels, c, cfg.svm_epochs,
                                          mix_seed(seed, 80 + f));
      score += accuracy(m, select_columns(tr, val_idx), val_labels);
    }
    if (score > best_score + 1e-12) {
      best_score = score;
      best_c = c;
    }
  }

  const LinearModel final_model =
      train_svm_ova(tr, train_labels, best_c, cfg.svm_epochs, mix_seed(seed, 99));
  return accuracy(final_model, te, test_labels);
}

TrainConfig shallow_train_config(const ClassifyConfig& cfg, double lambda, std::size_t atoms,
                                 std::uint64_t seed) {
  TrainConfig t;
  t.num_atoms = atoms;
  t.solver = SolverConfig{Regularizer::l1(lambda), 20000, 1e-7};
  t.epochs = cfg.dict_epochs;
  t.batch_size = 64;
  t.seed = seed;
  t.method = TrainMethod::Online;
  return t;
}

LayerConfig make_layer(const ClassifyConfig& cfg, std::size_t atoms, double lambda,
                       std::size_t pool_factor, std::uint64_t seed) {
  LayerConfig layer;
  layer.train = shallow_train_config(cfg, lambda, atoms, seed);
  layer.pooling = PoolingConfig{PoolingConfig::Kind::Max, pool_factor, 0};
  return layer;
}

Matrix deep_features(const DeepModel& model, const Matrix& xa, const Matrix& xb, std::size_t examples,
                     std::size_t frames) {
  Matrix out;
  for (std::size_t e = 0; e < examples; ++e) {
    std::vector<Vector> sa, sb;
    for (std::size_t f = 0; f < frames; ++f) {
      sa.push_back(xa.col_vector(e * frames + f));
      sb.push_back(xb.col_vector(e * frames + f));
    }
    const Vector feat = forward(sa, sb, model);
    if (out.empty()) out = Matrix(feat.size(), examples);
    out.set_col(e, feat);
  }
  return out;
}

}  // namespace

ClassifyReport run_synth_classify(const ClassifyConfig& cfg) {
  ClassifyConfig resolved = cfg;
  if (resolved.schemes.empty()) resolved.schemes = default_schemes(resolved.nonlinear);
  for (const auto& s : resolved.schemes) {
    if (!is_known_scheme(s)) throw argument_error("run_synth_classify: unknown scheme '" + s + "'");
  }
  {
    std::set<std::string> unique(resolved.schemes.begin(), resolved.schemes.end());
    if (unique.size() != resolved.schemes.size()) {
      throw argument_error("run_synth_classify: duplicate scheme requested");
    }
  }
  if (resolved.train_examples < 10 || resolved.test_examples < 10) {
    throw argument_error("run_synth_classify: too few examples");
  }
  if (resolved.frames == 0) throw argument_error("run_synth_classify: frames must be positive");
  if (resolved.repeats == 0) throw argument_error("run_synth_classify: repeats must be positive");
  if (resolved.draws == 0) throw argument_error("run_synth_classify: draws must be positive");
  if (resolved.lambda_joint_scale <= 0.0) {
    throw argument_error("run_synth_classify: lambda_joint_scale must be positive");
  }

  bool wants_deep = false;
  for (const auto& s : resolved.schemes) wants_deep = wants_deep || s == "deep-3a" || s == "deep-3b";
  if (wants_deep && resolved.frames < 2) {
    throw argument_error("run_synth_classify: deep schemes need at least 2 frames per example");
  }

  // The nonlinear variant has more latent pairs than any one shallow
  // dictionary can dedicate atoms to, which is what the extra layers exploit.
  const std::size_t latents = resolved.nonlinear ? 16 : 24;
  const std::size_t classes = resolved.nonlinear ? 2 : 4;

  std::vector<std::vector<double>> acc(resolved.schemes.size());

  for (std::size_t r = 0; r < resolved.repeats; ++r) {
    std::vector<double> draw_sum(resolved.schemes.size(), 0.0);
    for (std::size_t d = 0; d < resolved.draws; ++d) {
      const std::size_t inst = r * resolved.draws + d;
      Rng gen(mix_seed(resolved.seed, 1000 + inst));
      const Matrix a = random_render(gen, resolved.dim_a, latents);
      const Matrix b = random_render(gen, resolved.dim_b, latents);
      const Matrix clutter_a = random_render(gen, resolved.dim_a, kClutterA);
      const Matrix clutter_b = random_render(gen, resolved.dim_b, kClutterB);

      const PairedSet train =
          resolved.nonlinear
              ? generate_nonlinear(resolved, resolved.train_examples, gen, a, b, latents)
              : generate_linear(resolved, resolved.train_examples, gen, a, b, clutter_a, clutter_b,
                                latents, classes);
      const PairedSet test =
          resolved.nonlinear
              ? generate_nonlinear(resolved, resolved.test_examples, gen, a, b, latents)
              : generate_linear(resolved, resolved.test_examples, gen, a, b, clutter_a, clutter_b,
                                latents, classes);

      // Stride leaves room for the per-dictionary offsets used below.
      const std::uint64_t dict_seed = mix_seed(resolved.seed, 2000 + inst * 32);
      const std::uint64_t svm_seed = mix_seed(resolved.seed, 3000 + inst * 32);
      const SolverConfig encode_cfg{Regularizer::l1(resolved.lambda), 20000, 1e-7};

      bool need_a = false, need_b = false, need_joint = false, need_fj = false;
      bool need_cross_a = false, need_cross_b = false;
      for (const auto& s : resolved.schemes) {
        need_a = need_a || s == "uni-a" || s == "uni-union";
        need_b = need_b || s == "uni-b" || s == "uni-union";
        need_fj = need_fj || s == "joint";
        need_cross_a = need_cross_a || s == "cross-a" || s == "multi-union";
        need_cross_b = need_cross_b || s == "cross-b" || s == "multi-union";
      }
      need_joint = need_fj || need_cross_a || need_cross_b;

      // Pooled per-example code features, keyed by the base scheme name.
      Matrix fa_train, fa_test, fb_train, fb_test, fj_train, fj_test;
      Matrix fca_train, fca_test, fcb_train, fcb_test;

      if (need_a) {
        const Dictionary d = train_online(train.xa, shallow_train_config(resolved, resolved.lambda,
                                                                         resolved.num_atoms, dict_seed))
                                 .dictionary;
        fa_train = pool_per_example(dense_codes(train.xa, d, encode_cfg), resolved.train_examples,
                                    resolved.frames);
        fa_test = pool_per_example(dense_codes(test.xa, d, encode_cfg), resolved.test_examples,
                                   resolved.frames);
      }
      if (need_b) {
        const Dictionary d = train_online(train.xb, shallow_train_config(resolved, resolved.lambda,
                                                                         resolved.num_atoms,
                                                                         dict_seed + 1))
                                 .dictionary;
        fb_train = pool_per_example(dense_codes(train.xb, d, encode_cfg), resolved.train_examples,
                                    resolved.frames);
        fb_test = pool_per_example(dense_codes(test.xb, d, encode_cfg), resolved.test_examples,
                                   resolved.frames);
      }

      JointModel joint;
      if (need_joint) {
        // The configured lambda is the native-space weight. Concatenated inputs
        // shrink by sqrt of the coupling factor in norm, and the unscaled
        // sub-dictionary atoms grow by the same factor, so scaling the joint
        // weight by sqrt(coupling) keeps the training sparsity and the derived
        // cross-modal penalty comparable with the unimodal runs;
        // lambda_joint_scale then sharpens the joint codes on top of that.
        const double coupling = 1.0 / static_cast<double>(resolved.dim_a) +
                                1.0 / static_cast<double>(resolved.dim_b);
        const double joint_lambda =
            resolved.lambda * resolved.lambda_joint_scale * std::sqrt(coupling);
        joint = train_joint({{"a", &train.xa}, {"b", &train.xb}},
                            shallow_train_config(resolved, joint_lambda, resolved.num_atoms,
                                                 dict_seed + 2));
      }
      auto joint_features = [&](const PairedSet& set, std::size_t examples) {
        const std::vector<ModalitySpec> specs = {ModalitySpec::make("a", resolved.dim_a),
                                                 ModalitySpec::make("b", resolved.dim_b)};
        Matrix concat(resolved.dim_a + resolved.dim_b, set.xa.cols());
        for (std::size_t j = 0; j < set.xa.cols(); ++j) {
          concat.set_col(j, concat_input(set.xa.col_vector(j), set.xb.col_vector(j), specs[0], specs[1]));
        }
        return pool_per_example(dense_codes(concat, Dictionary(joint.dictionary.atoms()), joint.solver),
                                examples, resolved.frames);
      };
      auto cross_features = [&](const Matrix& xs, const std::string& name, std::size_t examples) {
        SolverConfig cc = joint.solver;
        cc.reg = Regularizer::l1(joint.lambda_cross);
        return pool_per_example(dense_codes(xs, Dictionary(joint.sub_dictionary(name)), cc), examples,
                                resolved.frames);
      };
      if (need_fj) {
        fj_train = joint_features(train, resolved.train_examples);
        fj_test = joint_features(test, resolved.test_examples);
      }
      if (need_cross_a) {
        fca_train = cross_features(train.xa, "a", resolved.train_examples);
        fca_test = cross_features(test.xa, "a", resolved.test_examples);
      }
      if (need_cross_b) {
        fcb_train = cross_features(train.xb, "b", resolved.train_examples);
        fcb_test = cross_features(test.xb, "b", resolved.test_examples);
      }

      for (std::size_t s = 0; s < resolved.schemes.size(); ++s) {
        const std::string& scheme = resolved.schemes[s];
        Matrix ftr, fte;
        if (scheme == "uni-a") {
          ftr = fa_train;
          fte = fa_test;
        } else if (scheme == "uni-b") {
          ftr = fb_train;
          fte = fb_test;
        } else if (scheme == "uni-union") {
          ftr = vstack(fa_train, fb_train);
          fte = vstack(fa_test, fb_test);
        } else if (scheme == "joint") {
          ftr = fj_train;
          fte = fj_test;
        } else if (scheme == "cross-a") {
          ftr = fca_train;
          fte = fca_test;
        } else if (scheme == "cross-b") {
          ftr = fcb_train;
          fte = fcb_test;
        } else if (scheme == "multi-union") {
          ftr = vstack(fca_train, fcb_train);
          fte = vstack(fca_test, fcb_test);
        } else {
          // deep-3a / deep-3b
          const std::size_t half = (resolved.frames + 1) / 2;
          StackConfig stack;
          if (scheme == "deep-3a") {
            stack.per_modality_layers = {
                {"a", {make_layer(resolved, resolved.deep_atoms_l1, resolved.deep_lambda_l1, half,
                                  dict_seed + 10)}},
                {"b", {make_layer(resolved, resolved.deep_atoms_l1, resolved.deep_lambda_l1, half,
                                  dict_seed + 11)}}};
            stack.joint_layers = {make_layer(resolved, resolved.deep_atoms_l2, resolved.deep_lambda_l2, 2,
                                             dict_seed + 12)};
          } else {
            stack.per_modality_layers = {
                {"a", {make_layer(resolved, resolved.deep_atoms_l1, resolved.deep_lambda_l1, 1,
                                  dict_seed + 20)}},
                {"b", {make_layer(resolved, resolved.deep_atoms_l1, resolved.deep_lambda_l1, 1,
                                  dict_seed + 21)}}};
            stack.joint_layers = {make_layer(resolved, resolved.deep_atoms_l2, resolved.deep_lambda_l2,
                                             half, dict_seed + 22),
                                  make_layer(resolved, resolved.deep_atoms_l2, resolved.deep_lambda_l2, 2,
                                             dict_seed + 23)};
          }
          const std::vector<std::size_t> groups(resolved.train_examples, resolved.frames);
          const DeepModel model = train_stack(train.xa, train.xb, stack, groups);
          ftr = deep_features(model, train.xa, train.xb, resolved.train_examples, resolved.frames);
          fte = deep_features(model, test.xa, test.xb, resolved.test_examples, resolved.frames);
        }
        draw_sum[s] +=
            cv_select_and_test(ftr, train.labels, fte, test.labels, resolved, svm_seed);
      }
    }
    for (std::size_t s = 0; s < resolved.schemes.size(); ++s) {
      acc[s].push_back(draw_sum[s] / static_cast<double>(resolved.draws));
    }
  }

  ClassifyReport report;
  report.config = resolved;
  for (std::size_t s = 0; s < resolved.schemes.size(); ++s) {
    SchemeStat stat;
    stat.scheme = resolved.schemes[s];
    double mean = 0.0;
    for (double v : acc[s]) mean += v;
    mean /= static_cast<double>(acc[s].size());
    stat.mean_accuracy = mean;
    if (acc[s].size() > 1) {
      double var = 0.0;
      for (double v : acc[s]) var += (v - mean) * (v - mean);
      var /= static_cast<double>(acc[s].size() - 1);
      stat.std_error = std::sqrt(var / static_cast<double>(acc[s].size()));
    }
    stat.accuracies = acc[s];
    report.schemes.push_back(stat);
  }
  return report;
}

namespace {

nlohmann::ordered_json denoise_config_json(const DenoiseConfig& cfg) {
  return {{"train_images", cfg.train_images},
          {"test_images", cfg.test_images},
          {"image_width", cfg.image_width},
          {"image_height", cfg.image_height},
          {"patch", cfg.patch},
          {"num_atoms", cfg.num_atoms},
          {"lambda", cfg.lambda},
          {"epochs", cfg.epochs},
          {"batch_size", cfg.batch_size},
          {"sigmas", cfg.sigmas},
          {"repeats", cfg.repeats},
          {"seed", cfg.seed}};
}

nlohmann::ordered_json classify_config_json(const ClassifyConfig& cfg) {
  return {{"nonlinear", cfg.nonlinear},
          {"train_examples", cfg.train_examples},
          {"test_examples", cfg.test_examples},
          {"dim_a", cfg.dim_a},
          {"dim_b", cfg.dim_b},
          {"signal_a", cfg.signal_a},
          {"signal_b", cfg.signal_b},
          {"noise_a", cfg.noise_a},
          {"noise_b", cfg.noise_b},
          {"clutter_a", cfg.clutter_a},
          {"clutter_b", cfg.clutter_b},
          {"num_atoms", cfg.num_atoms},
          {"lambda", cfg.lambda},
          {"lambda_joint_scale", cfg.lambda_joint_scale},
          {"dict_epochs", cfg.dict_epochs},
          {"frames", cfg.frames},
          {"deep_atoms_l1", cfg.deep_atoms_l1},
          {"deep_atoms_l2", cfg.deep_atoms_l2},
          {"deep_lambda_l1", cfg.deep_lambda_l1},
          {"deep_lambda_l2", cfg.deep_lambda_l2},
          {"svm_c_grid", cfg.svm_c_grid},
          {"svm_epochs", cfg.svm_epochs},
          {"schemes", cfg.schemes},
          {"repeats", cfg.repeats},
          {"draws", cfg.draws},
          {"seed", cfg.seed}};
}

}  // namespace

nlohmann::ordered_json to_json(const DenoiseReport& report) {
  nlohmann::ordered_json j;
  j["experiment"] = "denoise";
  j["config"] = denoise_config_json(report.config);
  auto rows = nlohmann::ordered_json::array();
  for (const auto& r : report.rows) {
    nlohmann::ordered_json row;
    row["sigma"] = r.sigma;
    if (r.exact) {
      row["exact"] = true;
    } else {
      row["noisy_psnr"] = r.noisy_psnr;
      row["denoised_psnr"] = r.denoised_psnr;
    }
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
  return j;
}

nlohmann::ordered_json to_json(const ClassifyReport& report) {
  nlohmann::ordered_json j;
  j["experiment"] = report.config.nonlinear ? "synth-classify-nonlinear" : "synth-classify";
  j["config"] = classify_config_json(report.config);
  auto rows = nlohmann::ordered_json::array();
  for (const auto& s : report.schemes) {
    rows.push_back({{"scheme", s.scheme},
                    {"mean_accuracy", s.mean_accuracy},
                    {"std_error", s.std_error},
                    {"accuracies", s.accuracies}});
  }
  j["schemes"] = std::move(rows);
  return j;
}

std::string to_table(const DenoiseReport& report) {
  std::string out = "sigma      noisy dB   denoised dB   gain dB\n";
  char line[128];
  for (const auto& r : report.rows) {
    if (r.exact) {
      std::snprintf(line, sizeof line, "%-10.4g %-10s %-13s %s\n", r.sigma, "exact", "exact", "-");
    } else {
      std::snprintf(line, sizeof line, "%-10.4g %-10.2f %-13.2f %+.2f\n", r.sigma, r.noisy_psnr,
                    r.denoised_psnr, r.denoised_psnr - r.noisy_psnr);
    }
    out += line;
  }
  return out;
}

std::string to_table(const ClassifyReport& report) {
  std::string out = "scheme        accuracy   std error\n";
  char line[128];
  for (const auto& s : report.schemes) {
    std::snprintf(line, sizeof line, "%-13s %-10.4f %.4f\n", s.scheme.c_str(), s.mean_accuracy,
                  s.std_error);
    out += line;
  }
  return out;
}

}  // namespace msc
