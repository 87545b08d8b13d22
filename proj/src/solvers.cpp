#include "msc/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "msc/errors.hpp"

namespace msc {

namespace {

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

SparseCode code_from_dense(const Vector& y, const Regularizer& reg) {
  std::vector<std::pair<std::size_t, double>> entries;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 0.0) entries.emplace_back(i, y[i]);
  }
  return SparseCode(y.size(), std::move(entries), reg);
}

}  // namespace

SparseCode omp_encode(const Vector& x, const Dictionary& d, const SolverConfig& cfg) {
  if (cfg.reg.kind != Regularizer::Kind::L0) throw argument_error("omp_encode: L0 regularizer required");
  const std::size_t n = d.atom_dim();
  const std::size_t k = d.num_atoms();
  if (x.size() != n) throw argument_error("omp_encode: signal dimension mismatch");
  const std::size_t budget = cfg.reg.sparsity;
  if (budget > k) throw argument_error("omp_encode: sparsity budget exceeds dictionary size");
  for (std::size_t j = 0; j < k; ++j) {
    if (norm2(d.atom(j), n) == 0.0) throw argument_error("omp_encode: zero atom in dictionary");
  }

  Vector residual = x;
  std::vector<std::size_t> support;
  std::vector<char> in_support(k, 0);
  Matrix chol;          // growing lower Cholesky factor of the support Gram
  Vector support_btx;   // Dₛᵀx
  Vector coeffs;

  for (std::size_t iter = 0; iter < budget; ++iter) {
    if (norm2(residual) <= cfg.tol) break;

    std::size_t best = k;
    double best_corr = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (in_support[j]) continue;
      const double c = std::abs(dot(d.atom(j), residual.data(), n));
      if (c > best_corr) {
        best_corr = c;
        best = j;  // ties keep the lowest index
      }
    }
    if (best == k || best_corr == 0.0) break;

    const std::size_t s = support.size();
    Vector cross(s);
    for (std::size_t i = 0; i < s; ++i) cross[i] = dot(d.atom(support[i]), d.atom(best), n);
    const double self = dot(d.atom(best), d.atom(best), n);

    // Append one row to the Cholesky factor.
    Vector w(s, 0.0);
    for (std::size_t i = 0; i < s; ++i) {
      double v = cross[i];
      for (std::size_t t = 0; t < i; ++t) v -= chol(i, t) * w[t];
      w[i] = v / chol(i, i);
    }
    double diag_sq = self;
    for (std::size_t i = 0; i < s; ++i) diag_sq -= w[i] * w[i];
    if (diag_sq <= 1e-12 * self) {
      throw numeric_error("omp_encode: singular support system at iteration " + std::to_string(iter + 1));
    }
    Matrix grown(s + 1, s + 1);
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t t = 0; t <= i; ++t) grown(i, t) = chol(i, t);
    for (std::size_t t = 0; t < s; ++t) grown(s, t) = w[t];
    grown(s, s) = std::sqrt(diag_sq);
    chol = std::move(grown);

    support.push_back(best);
    in_support[best] = 1;
    support_btx.push_back(dot(d.atom(best), x.data(), n));

    coeffs = cholesky_solve(chol, support_btx);
    residual = x;
    for (std::size_t i = 0; i < support.size(); ++i) {
      axpy(-coeffs[i], d.atom(support[i]), residual.data(), n);
    }
  }

  std::vector<std::pair<std::size_t, double>> entries;
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (coeffs[i] != 0.0) entries.emplace_back(support[i], coeffs[i]);
  }
  std::sort(entries.begin(), entries.end());
  return SparseCode(k, std::move(entries), cfg.reg);
}

namespace detail {

namespace {

// Jump toward the minimizer over the current sign pattern by solving
// G_SS y_S = b_S − (λ/2)s. Correlated active atoms make plain sweeps slide
// between coordinates with a contraction factor near one; the jump closes that
// gap in one step. Near-duplicate atoms leave G_SS semidefinite, so a
// vanishing ridge keeps the factorization alive and an exact line search along
// the jump direction, clamped at the first zero crossing, guarantees the
// objective still decreases. The caller's normal convergence test decides
// termination either way.
bool refine_on_support(const Vector& b, const Matrix& g, double lambda, Vector& y, Vector& q) {
  std::vector<std::size_t> support;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 0.0) support.push_back(i);
  }
  if (support.empty()) return false;
  const std::size_t s = support.size();

  Matrix gss(s, s);
  Vector rhs(s);
  double diag_mean = 0.0;
  for (std::size_t r = 0; r < s; ++r) {
    for (std::size_t c = 0; c < s; ++c) gss(r, c) = g(support[r], support[c]);
    rhs[r] = b[support[r]] - 0.5 * lambda * (y[support[r]] > 0.0 ? 1.0 : -1.0);
    diag_mean += gss(r, r);
  }
  diag_mean /= static_cast<double>(s);
  for (std::size_t r = 0; r < s; ++r) gss(r, r) += 1e-10 * diag_mean;
  if (!cholesky(gss, 0.0)) return false;
  const Vector ys = cholesky_solve(gss, rhs);

  // Slope and curvature of the smooth objective along d = ys − y_S; signs are
  // frozen on the segment, so the L1 term contributes linearly via λs.
  Vector d(s);
  double alpha = 0.0;
  for (std::size_t r = 0; r < s; ++r) {
    const std::size_t i = support[r];
    d[r] = ys[r] - y[i];
    alpha += d[r] * (2.0 * (q[i] - b[i]) + (y[i] > 0.0 ? lambda : -lambda));
  }
  if (!(alpha < 0.0)) return false;
  double beta = 0.0;
  for (std::size_t r = 0; r < s; ++r) {
    for (std::size_t c = 0; c < s; ++c) beta += d[r] * g(support[r], support[c]) * d[c];
  }
  double t = beta > 0.0 ? -alpha / (2.0 * beta) : std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < s; ++r) {
    const double yr = y[support[r]];
    if (ys[r] == yr) continue;
    const double cross = yr / (yr - ys[r]);
    if (cross > 0.0) t = std::min(t, cross);
  }
  if (!std::isfinite(t) || t <= 0.0) return false;

  std::vector<double> stepped(s);
  for (std::size_t r = 0; r < s; ++r) {
    const double yr = y[support[r]];
    double v = yr + t * (ys[r] - yr);
    if (v == 0.0 || (v > 0.0) != (yr > 0.0)) v = 0.0;  // crossing coordinate leaves the support
    stepped[r] = v;
  }

  std::fill(y.begin(), y.end(), 0.0);
  std::fill(q.begin(), q.end(), 0.0);
  for (std::size_t r = 0; r < s; ++r) {
    if (stepped[r] == 0.0) continue;
    y[support[r]] = stepped[r];
    axpy(stepped[r], g.col(support[r]), q.data(), q.size());
  }
  return true;
}

}  // namespace

SparseCode lasso_encode_gram(const Vector& b, const Matrix& g, const SolverConfig& cfg, std::size_t dict_size) {
  const double lambda = cfg.reg.lambda;
  const std::size_t k = dict_size;
  Vector y(k, 0.0);
  Vector q(k, 0.0);  // G·y, maintained incrementally
  std::vector<signed char> sign_prev(k, 0);

  double kkt = 0.0;
  for (int sweep = 0; sweep < cfg.max_iter; ++sweep) {
    double max_delta = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double gii = g(i, i);
      if (gii <= 0.0) continue;
      const double rho = b[i] - q[i] + gii * y[i];
      const double ynew = soft_threshold(rho, lambda * 0.5) / gii;
      const double delta = ynew - y[i];
      if (delta != 0.0) {
        axpy(delta, g.col(i), q.data(), k);
        y[i] = ynew;
        max_delta = std::max(max_delta, std::abs(delta));
      }
    }
    if (max_delta < cfg.tol) {
      kkt = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        const double grad = 2.0 * (q[i] - b[i]);
        if (y[i] != 0.0) {
          kkt = std::max(kkt, std::abs(grad + (y[i] > 0.0 ? lambda : -lambda)));
        } else {
          kkt = std::max(kkt, std::abs(grad) - lambda);
        }
      }
      if (kkt < cfg.tol) return code_from_dense(y, cfg.reg);
    }
    bool stable = true;
    for (std::size_t i = 0; i < k; ++i) {
      const signed char sgn = y[i] == 0.0 ? 0 : (y[i] > 0.0 ? 1 : -1);
      stable = stable && sgn == sign_prev[i];
      sign_prev[i] = sgn;
    }
    if (stable) refine_on_support(b, g, lambda, y, q);
  }
  throw numeric_error("lasso_encode: no convergence within max_iter sweeps (KKT violation " +
                      std::to_string(kkt) + ")");
}

}  // namespace detail

SparseCode lasso_encode(const Vector& x, const Dictionary& d, const SolverConfig& cfg) {
  if (cfg.reg.kind != Regularizer::Kind::L1) throw argument_error("lasso_encode: L1 regularizer required");
  if (!(cfg.reg.lambda > 0.0) || !std::isfinite(cfg.reg.lambda)) {
    throw argument_error("lasso_encode: lambda must be positive and finite");
  }
  if (x.size() != d.atom_dim()) throw argument_error("lasso_encode: signal dimension mismatch");
  const Vector b = matvec_transposed(d.atoms(), x);
  const Matrix g = gram(d.atoms());
  return detail::lasso_encode_gram(b, g, cfg, d.num_atoms());
}

std::vector<SparseCode> batch_encode(const Matrix& xs, const Dictionary& d, const SolverConfig& cfg) {
  if (xs.cols() == 0) throw argument_error("batch_encode: at least one column required");
  if (xs.rows() != d.atom_dim()) throw argument_error("batch_encode: data dimension mismatch");

  std::vector<SparseCode> codes;
  codes.reserve(xs.cols());

  const bool use_gram = cfg.reg.kind == Regularizer::Kind::L1;
  Matrix g;
  if (use_gram) g = gram(d.atoms());

  for (std::size_t j = 0; j < xs.cols(); ++j) {
    try {
      const Vector x = xs.col_vector(j);
      if (use_gram) {
        const Vector b = matvec_transposed(d.atoms(), x);
        codes.push_back(detail::lasso_encode_gram(b, g, cfg, d.num_atoms()));
      } else {
        codes.push_back(omp_encode(x, d, cfg));
      }
    } catch (const numeric_error& e) {
      throw numeric_error("batch_encode: column " + std::to_string(j) + ": " + e.what());
    } catch (const argument_error& e) {
      throw argument_error("batch_encode: column " + std::to_string(j) + ": " + e.what());
    }
  }
  return codes;
}

double lasso_kkt_violation(const Vector& x, const Matrix& atoms, const Vector& y, double lambda) {
  if (y.size() != atoms.cols() || x.size() != atoms.rows()) {
    throw argument_error("lasso_kkt_violation: dimension mismatch");
  }
  Vector r = matvec(atoms, y);  // Dy − x
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= x[i];
  double worst = 0.0;
  for (std::size_t i = 0; i < atoms.cols(); ++i) {
    const double grad = 2.0 * dot(atoms.col(i), r.data(), atoms.rows());
    if (y[i] != 0.0) {
      worst = std::max(worst, std::abs(grad + (y[i] > 0.0 ? lambda : -lambda)));
    } else {
      worst = std::max(worst, std::max(0.0, std::abs(grad) - lambda));
    }
  }
  return worst;
}

double lasso_objective(const Vector& x, const Matrix& atoms, const Vector& y, double lambda) {
  Vector r = matvec(atoms, y);
  double fit = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double diff = x[i] - r[i];
    fit += diff * diff;
  }
  double l1 = 0.0;
  for (double v : y) l1 += std::abs(v);
  return fit + lambda * l1;
}

}  // namespace msc
