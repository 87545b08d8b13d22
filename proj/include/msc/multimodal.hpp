#pragma once

#include <string>
#include <vector>

#include "msc/dictionary.hpp"
#include "msc/matrix.hpp"
#include "msc/sparse_code.hpp"

namespace msc {

// One input stream: its name, dimension, and the 1/sqrt(dim) weight its
// block carries inside a concatenated joint vector.
struct ModalitySpec {
  std::string name;
  std::size_t dim = 0;
  double weight = 1.0;

  static ModalitySpec make(std::string name, std::size_t dim);
};

// Dictionary trained on scaled concatenations, plus the lambda pair tying
// the joint problem to the per-modality ones.
struct JointModel {
  Dictionary dictionary;  // modality blocks populated
  double lambda_joint = 0.0;
  double lambda_cross = 0.0;
  SolverConfig solver;  // tolerance and iteration budget reused by cross encodes

  // Unscaled per-modality sub-dictionary: block rows multiplied back by
  // sqrt(dim). Its atoms may individually exceed unit norm.
  Matrix sub_dictionary(const std::string& modality) const;
};

// Stacks per-modality blocks, each scaled by its 1/sqrt(dim) weight.
Vector concat_input(const Vector& xa, const Vector& xb, const ModalitySpec& a, const ModalitySpec& b);
Vector concat_inputs(const std::vector<Vector>& xs, const std::vector<ModalitySpec>& specs);

// Column-paired matrices, one per modality.
struct NamedData {
  std::string name;
  const Matrix* data = nullptr;
};

// Trains one dictionary over scaled concatenations of the paired columns.
// The solver lambda is the joint-space weight; the cross-modal weight
// follows from dividing by the summed 1/dim factors.
JointModel train_joint(const std::vector<NamedData>& modalities, const TrainConfig& cfg);
JointModel train_joint(const Matrix& xsa, const Matrix& xsb, const TrainConfig& cfg);

// L1 encode of a single-modality input against its unscaled sub-dictionary,
// using the cross-modal lambda. The code indexes the shared atoms.
SparseCode cross_encode(const Vector& x, const JointModel& model, const std::string& modality);

// Estimate of the `to` modality from an observed `from` input.
Vector cross_reconstruct(const Vector& x, const JointModel& model, const std::string& from,
                         const std::string& to);

// Dense concatenation of the codes in argument order.
Vector feature_union(const std::vector<SparseCode>& codes);

// Joint models reuse the dictionary files; the sidecar carries both lambdas.
void save_joint(const JointModel& model, const std::string& stem);
JointModel load_joint(const std::string& stem);

}  // namespace msc
