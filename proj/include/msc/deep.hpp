#pragma once

#include <string>
#include <vector>

#include "msc/dictionary.hpp"
#include "msc/matrix.hpp"
#include "msc/sparse_code.hpp"

namespace msc {

// Non-overlapping by default (stride 0 means stride = factor). Max pooling
// keeps the sign of the absolutely largest entry per coordinate; codes are
// signed, so a plain max would drop strong negative activations.
struct PoolingConfig {
  enum class Kind { Max, Average };
  Kind kind = Kind::Max;
  std::size_t factor = 1;
  std::size_t stride = 0;

  std::size_t effective_stride() const { return stride == 0 ? factor : stride; }
};

// One sparse-coding layer: how its dictionary is trained and how its codes
// are pooled before feeding the next layer.
struct LayerConfig {
  TrainConfig train;
  PoolingConfig pooling;
};

// One or more unimodal layer stacks feeding one or more joint layers. A
// single joint layer gives the shallow-joint-on-deep-features topology;
// two or more deepen the joint pathway as well.
struct StackConfig {
  std::vector<std::pair<std::string, std::vector<LayerConfig>>> per_modality_layers;
  std::vector<LayerConfig> joint_layers;
};

// Element-wise window reduction over an ordered code sequence. Windows of
// `factor` vectors, advancing by the stride; a trailing short window is
// reduced as-is.
std::vector<Vector> pool(const std::vector<Vector>& seq, const PoolingConfig& cfg);
std::vector<Vector> pool(const std::vector<SparseCode>& seq, const PoolingConfig& cfg);

struct DeepModel {
  struct Layer {
    Dictionary dictionary;
    SolverConfig solver;
    PoolingConfig pooling;
  };
  std::vector<std::pair<std::string, std::vector<Layer>>> modality_layers;
  std::vector<Layer> joint_layers;
};

// Greedy layer-wise training. Columns of each modality matrix are frames;
// group_sizes splits them into source examples so pooling windows never
// straddle two examples. Labels are never consulted.
DeepModel train_stack(const Matrix& xsa, const Matrix& xsb, const StackConfig& cfg,
                      const std::vector<std::size_t>& group_sizes);

// Feed-forward of one example (a frame sequence per modality) to the top
// representation, final-pooled to a single vector.
Vector forward(const std::vector<Vector>& xa_seq, const std::vector<Vector>& xb_seq,
               const DeepModel& model);

// Writes one dictionary pair per layer plus <stem>.json describing the
// topology, pooling, and per-layer solvers.
void save_stack(const DeepModel& model, const std::string& stem);
DeepModel load_stack(const std::string& stem);

}  // namespace msc
