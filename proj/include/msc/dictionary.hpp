#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "msc/matrix.hpp"
#include "msc/sparse_code.hpp"

namespace msc {

// Row range [row_start, row_end) of a joint dictionary belonging to one
// modality, with its 1/sqrt(dim) concatenation weight.
struct ModalityBlock {
  std::string name;
  std::size_t row_start = 0;
  std::size_t row_end = 0;
  double weight = 1.0;

  std::size_t dim() const { return row_end - row_start; }
};

// K atoms of dimension N, stored as the columns of an N×K matrix. Trained
// dictionaries keep every atom inside the unit L2 ball; sub-dictionaries
// extracted from joint models may exceed it.
class Dictionary {
 public:
  Dictionary() = default;
  explicit Dictionary(Matrix atoms, std::vector<ModalityBlock> blocks = {});

  std::size_t atom_dim() const { return atoms_.rows(); }
  std::size_t num_atoms() const { return atoms_.cols(); }
  const Matrix& atoms() const { return atoms_; }
  Matrix& atoms() { return atoms_; }
  const double* atom(std::size_t k) const { return atoms_.col(k); }

  const std::vector<ModalityBlock>& blocks() const { return blocks_; }
  bool has_blocks() const { return !blocks_.empty(); }
  const ModalityBlock& block(const std::string& name) const;

  // Checks the trained-dictionary invariants: atom norms in [1e-8, 1+1e-12],
  // blocks (when present) partition the rows.
  void validate() const;

 private:
  Matrix atoms_;
  std::vector<ModalityBlock> blocks_;
};

enum class TrainMethod { KSVD, Online };

struct TrainConfig {
  std::size_t num_atoms = 0;
  SolverConfig solver;
  int epochs = 50;
  std::size_t batch_size = 256;
  std::uint64_t seed = 0;
  TrainMethod method = TrainMethod::Online;
  int dead_atom_threshold = 0;  // usage <= threshold marks an atom dead
};

// K atoms drawn as distinct training columns (with replacement plus jitter
// when the data is smaller than K), each normalized to unit norm.
Dictionary init_dictionary(const Matrix& xs, const TrainConfig& cfg);

struct KsvdResult {
  Dictionary dictionary;
  std::vector<SparseCode> codes;
  std::vector<double> loss_trace;  // ‖X−DY‖²_F after each epoch's encode step
};
KsvdResult train_ksvd(const Matrix& xs, const TrainConfig& cfg);

struct OnlineResult {
  Dictionary dictionary;
  std::vector<double> loss_trace;  // Σᵢ ‖xᵢ−Dyᵢ‖² + λ‖yᵢ‖₁ accumulated per epoch
};
OnlineResult train_online(const Matrix& xs, const TrainConfig& cfg);

// Atoms used at most `threshold` times are replaced by the training columns
// the dictionary reconstructs worst, normalized. Residual norms are given
// per column.
Dictionary replace_dead_atoms(const Dictionary& d, const std::vector<int>& usage, const Matrix& xs,
                              const Vector& residual_norms, int threshold, std::uint64_t seed);

// Convenience overload that derives residuals by encoding xs with `solver`.
Dictionary replace_dead_atoms(const Dictionary& d, const std::vector<int>& usage, const Matrix& xs,
                              const SolverConfig& solver, int threshold, std::uint64_t seed);

// Sidecar metadata stored next to the atom matrix.
struct DictionaryMeta {
  SolverConfig solver;
  std::uint64_t seed = 0;
  std::optional<double> lambda_joint;
  std::optional<double> lambda_cross;
};

// Writes <stem>.msc (atoms, binary matrix format) and <stem>.json (metadata).
void save_dictionary(const Dictionary& d, const DictionaryMeta& meta, const std::string& stem);
std::pair<Dictionary, DictionaryMeta> load_dictionary(const std::string& stem);

}  // namespace msc
