#include "msc/multimodal.hpp"

#include <cmath>
#include <utility>

#include "msc/errors.hpp"
#include "msc/solvers.hpp"

namespace msc {

ModalitySpec ModalitySpec::make(std::string name, std::size_t dim) {
  if (dim == 0) throw argument_error("modality '" + name + "': dimension must be positive");
  return {std::move(name), dim, 1.0 / std::sqrt(static_cast<double>(dim))};
}

Matrix JointModel::sub_dictionary(const std::string& modality) const {
  const ModalityBlock& b = dictionary.block(modality);
  const double root = std::sqrt(static_cast<double>(b.dim()));
  Matrix sub(b.dim(), dictionary.num_atoms());
  for (std::size_t k = 0; k < dictionary.num_atoms(); ++k) {
    for (std::size_t i = 0; i < b.dim(); ++i) sub(i, k) = dictionary.atoms()(b.row_start + i, k) * root;
  }
  return sub;
}

Vector concat_inputs(const std::vector<Vector>& xs, const std::vector<ModalitySpec>& specs) {
  if (xs.empty() || xs.size() != specs.size()) {
    throw argument_error("concat_inputs: one input vector per modality required");
  }
  std::size_t total = 0;
  for (std::size_t m = 0; m < xs.size(); ++m) {
    if (xs[m].size() != specs[m].dim) {
      throw argument_error("concat_inputs: dimension mismatch for modality '" + specs[m].name + "'");
    }
    total += specs[m].dim;
  }
  Vector out(total);
  std::size_t at = 0;
  for (std::size_t m = 0; m < xs.size(); ++m) {
    for (double v : xs[m]) out[at++] = v * specs[m].weight;
  }
  return out;
}

Vector concat_input(const Vector& xa, const Vector& xb, const ModalitySpec& a, const ModalitySpec& b) {
  return concat_inputs({xa, xb}, {a, b});
}

JointModel train_joint(const std::vector<NamedData>& modalities, const TrainConfig& cfg) {
  if (modalities.size() < 2) throw argument_error("train_joint: at least two modalities required");
  if (cfg.method != TrainMethod::Online || cfg.solver.reg.kind != Regularizer::Kind::L1) {
    throw argument_error("train_joint: online L1 training required");
  }

  const std::size_t n = modalities.front().data->cols();
  std::vector<ModalitySpec> specs;
  std::vector<ModalityBlock> blocks;
  std::size_t total = 0;
  double inv_dim_sum = 0.0;
  for (const auto& m : modalities) {
    if (m.data == nullptr || m.data->empty()) throw argument_error("train_joint: empty modality '" + m.name + "'");
    if (m.data->cols() != n) throw argument_error("train_joint: modalities must pair the same example count");
    const auto spec = ModalitySpec::make(m.name, m.data->rows());
    blocks.push_back({spec.name, total, total + spec.dim, spec.weight});
    total += spec.dim;
    inv_dim_sum += 1.0 / static_cast<double>(spec.dim);
    specs.push_back(spec);
  }

  Matrix joint(total, n);
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t at = 0;
    for (std::size_t m = 0; m < modalities.size(); ++m) {
      const double* src = modalities[m].data->col(j);
      for (std::size_t i = 0; i < specs[m].dim; ++i) joint(at++, j) = src[i] * specs[m].weight;
    }
  }

  OnlineResult trained = train_online(joint, cfg);

  JointModel model;
  model.dictionary = Dictionary(std::move(trained.dictionary.atoms()), std::move(blocks));
  model.lambda_joint = cfg.solver.reg.lambda;
  model.lambda_cross = model.lambda_joint / inv_dim_sum;
  model.solver = cfg.solver;
  return model;
}

JointModel train_joint(const Matrix& xsa, const Matrix& xsb, const TrainConfig& cfg) {
  return train_joint({{"a", &xsa}, {"b", &xsb}}, cfg);
}

SparseCode cross_encode(const Vector& x, const JointModel& model, const std::string& modality) {
  const ModalityBlock& b = model.dictionary.block(modality);
  if (x.size() != b.dim()) {
    throw argument_error("cross_encode: input dimension does not match modality '" + modality + "'");
  }
  SolverConfig cfg = model.solver;
  cfg.reg = Regularizer::l1(model.lambda_cross);
  return lasso_encode(x, Dictionary(model.sub_dictionary(modality)), cfg);
}

Vector cross_reconstruct(const Vector& x, const JointModel& model, const std::string& from,
                         const std::string& to) {
  const SparseCode code = cross_encode(x, model, from);
  const Matrix sub = model.sub_dictionary(to);
  Vector out(sub.rows(), 0.0);
  for (const auto& [idx, val] : code.entries()) axpy(val, sub.col(idx), out.data(), sub.rows());
  return out;
}

Vector feature_union(const std::vector<SparseCode>& codes) {
  if (codes.empty()) throw argument_error("feature_union: at least one code required");
  std::size_t total = 0;
  for (const auto& c : codes) total += c.dict_size();
  Vector out(total, 0.0);
  std::size_t at = 0;
  for (const auto& c : codes) {
    for (const auto& [idx, val] : c.entries()) out[at + idx] = val;
    at += c.dict_size();
  }
  return out;
}

void save_joint(const JointModel& model, const std::string& stem) {
  DictionaryMeta meta;
  meta.solver = model.solver;
  meta.lambda_joint = model.lambda_joint;
  meta.lambda_cross = model.lambda_cross;
  save_dictionary(model.dictionary, meta, stem);
}

JointModel load_joint(const std::string& stem) {
  auto [dict, meta] = load_dictionary(stem);
  if (!dict.has_blocks()) throw format_error("load_joint: dictionary has no modality blocks");
  if (!meta.lambda_joint || !meta.lambda_cross) {
    throw format_error("load_joint: sidecar is missing the lambda pair");
  }
  JointModel model;
  model.dictionary = std::move(dict);
  model.lambda_joint = *meta.lambda_joint;
  model.lambda_cross = *meta.lambda_cross;
  model.solver = meta.solver;
  model.solver.reg = Regularizer::l1(*meta.lambda_joint);
  return model;
}

}  // namespace msc
