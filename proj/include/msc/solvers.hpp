#pragma once

#include <vector>

#include "msc/dictionary.hpp"
#include "msc/matrix.hpp"
#include "msc/sparse_code.hpp"

namespace msc {

// Greedy L0 pursuit: picks the atom most correlated with the residual,
// refits least squares over the selected support each iteration, stops at
// the budget S or once the residual norm falls below cfg.tol.
SparseCode omp_encode(const Vector& x, const Dictionary& d, const SolverConfig& cfg);

// L1 solve of min ‖x−Dy‖² + λ‖y‖₁ by cyclic coordinate descent with
// covariance (Gram) updates. Returns once the largest coordinate move and
// the KKT residual are both below cfg.tol.
SparseCode lasso_encode(const Vector& x, const Dictionary& d, const SolverConfig& cfg);

// Column-wise application of the configured encoder, order preserving.
std::vector<SparseCode> batch_encode(const Matrix& xs, const Dictionary& d, const SolverConfig& cfg);

// Max KKT violation of the L1 objective at y: for active i,
// |2dᵢᵀ(Dy−x) + λ·sign(yᵢ)|; for inactive i, max(0, |2dᵢᵀ(Dy−x)| − λ).
double lasso_kkt_violation(const Vector& x, const Matrix& atoms, const Vector& y, double lambda);

// ‖x−Dy‖² + λ‖y‖₁ evaluated directly.
double lasso_objective(const Vector& x, const Matrix& atoms, const Vector& y, double lambda);

namespace detail {
// Shared-Gram L1 encoder used by batch_encode and the online trainer; b is
// Dᵀx and g is DᵀD for the same atoms.
SparseCode lasso_encode_gram(const Vector& b, const Matrix& g, const SolverConfig& cfg, std::size_t dict_size);
}  // namespace detail

}  // namespace msc
