#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "msc/errors.hpp"
#include "msc/matrix.hpp"

namespace msc {

// Sparsity penalty: an L0 budget of S atoms or an L1 weight lambda.
struct Regularizer {
  enum class Kind { L0, L1 };
  Kind kind = Kind::L1;
  std::size_t sparsity = 0;  // L0 budget S
  double lambda = 0.0;       // L1 weight

  static Regularizer l0(std::size_t s) { return {Kind::L0, s, 0.0}; }
  static Regularizer l1(double lambda) { return {Kind::L1, 0, lambda}; }
};

struct SolverConfig {
  Regularizer reg;
  int max_iter = 1000;
  double tol = 1e-7;
};

// Sparse representation over a dictionary of K atoms: (index, coefficient)
// pairs with strictly increasing indices and no stored zeros.
class SparseCode {
 public:
  SparseCode() = default;
  SparseCode(std::size_t dict_size, std::vector<std::pair<std::size_t, double>> entries, Regularizer reg)
      : dict_size_(dict_size), entries_(std::move(entries)), reg_(reg) {
    std::size_t prev = 0;
    bool first = true;
    for (const auto& [idx, val] : entries_) {
      if (idx >= dict_size_) throw argument_error("sparse code: atom index out of range");
      if (!first && idx <= prev) throw argument_error("sparse code: indices must be strictly increasing");
      if (val == 0.0) throw argument_error("sparse code: zero coefficient stored");
      prev = idx;
      first = false;
    }
    if (reg_.kind == Regularizer::Kind::L0 && entries_.size() > reg_.sparsity) {
      throw argument_error("sparse code: more entries than the L0 budget");
    }
  }

  std::size_t dict_size() const { return dict_size_; }
  std::size_t nnz() const { return entries_.size(); }
  const std::vector<std::pair<std::size_t, double>>& entries() const { return entries_; }
  const Regularizer& regularizer() const { return reg_; }

  Vector dense() const {
    Vector v(dict_size_, 0.0);
    for (const auto& [idx, val] : entries_) v[idx] = val;
    return v;
  }

  double l1_norm() const {
    double s = 0.0;
    for (const auto& [idx, val] : entries_) s += val < 0.0 ? -val : val;
    return s;
  }

  friend bool operator==(const SparseCode& a, const SparseCode& b) {
    return a.dict_size_ == b.dict_size_ && a.entries_ == b.entries_;
  }

 private:
  std::size_t dict_size_ = 0;
  std::vector<std::pair<std::size_t, double>> entries_;
  Regularizer reg_;
};

}  // namespace msc
