#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <doctest.h>

#include "msc/dictionary.hpp"
#include "msc/errors.hpp"
#include "msc/matrix.hpp"
#include "msc/rng.hpp"
#include "msc/solvers.hpp"

namespace {

msc::Dictionary random_dictionary(std::size_t n, std::size_t k, std::uint64_t seed) {
  msc::Rng rng(seed);
  msc::Matrix atoms(n, k);
  for (std::size_t j = 0; j < k; ++j) {
    double* col = atoms.col(j);
    for (std::size_t i = 0; i < n; ++i) col[i] = rng.normal();
    msc::scale(1.0 / msc::norm2(col, n), col, n);
  }
  return msc::Dictionary(std::move(atoms));
}

// Orthonormal atoms from the eigenvectors of a random symmetric matrix.
msc::Dictionary orthonormal_dictionary(std::size_t n, std::uint64_t seed) {
  msc::Rng rng(seed);
  msc::Matrix sym(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = rng.normal();
      sym(i, j) = v;
      sym(j, i) = v;
    }
  }
  return msc::Dictionary(msc::eigh(sym).vectors);
}

msc::Vector residual(const msc::Vector& x, const msc::Dictionary& d, const msc::SparseCode& code) {
  msc::Vector r = x;
  for (const auto& [idx, val] : code.entries()) msc::axpy(-val, d.atom(idx), r.data(), r.size());
  return r;
}

// Exhaustive L1 reference: tries every support up to max_support and every
// sign pattern on it. For fixed support and signs the stationarity condition
// 2·G_S·y = 2·b_S − λ·s is linear; candidates whose solution contradicts the
// assumed signs are discarded. The empty support (y = 0) is always a candidate.
double brute_force_lasso_objective(const msc::Vector& x, const msc::Matrix& atoms, double lambda,
                                   std::size_t max_support) {
  const std::size_t k = atoms.cols();
  const msc::Vector b = msc::matvec_transposed(atoms, x);
  const msc::Matrix g = msc::gram(atoms);
  double best = msc::dot(x, x);

  std::vector<std::size_t> support;
  auto evaluate_support = [&]() {
    const std::size_t s = support.size();
    for (std::uint64_t signs = 0; signs < (1ull << s); ++signs) {
      msc::Matrix gs(s, s);
      msc::Vector rhs(s);
      for (std::size_t p = 0; p < s; ++p) {
        const double sign = (signs >> p) & 1 ? -1.0 : 1.0;
        rhs[p] = b[support[p]] - 0.5 * lambda * sign;
        for (std::size_t q = 0; q < s; ++q) gs(p, q) = g(support[p], support[q]);
      }
      if (!msc::cholesky(gs, 1e-12)) continue;
      const msc::Vector y = msc::cholesky_solve(gs, rhs);
      bool consistent = true;
      for (std::size_t p = 0; p < s; ++p) {
        const double sign = (signs >> p) & 1 ? -1.0 : 1.0;
        if (y[p] * sign < 0.0) consistent = false;
      }
      if (!consistent) continue;
      msc::Vector full(k, 0.0);
      for (std::size_t p = 0; p < s; ++p) full[support[p]] = y[p];
      best = std::min(best, msc::lasso_objective(x, atoms, full, lambda));
    }
  };

  // Depth-first enumeration of supports in increasing index order.
  auto recurse = [&](auto&& self, std::size_t next) -> void {
    if (!support.empty()) evaluate_support();
    if (support.size() == max_support) return;
    for (std::size_t j = next; j < k; ++j) {
      support.push_back(j);
      self(self, j + 1);
      support.pop_back();
    }
  };
  recurse(recurse, 0);
  return best;
}

}  // namespace

TEST_CASE("omp recovers a single scaled atom exactly") {
  const msc::Dictionary d = orthonormal_dictionary(10, 101);
  msc::Vector x(10);
  for (std::size_t i = 0; i < 10; ++i) x[i] = 3.0 * d.atom(7)[i];
  const msc::SparseCode code =
      msc::omp_encode(x, d, {msc::Regularizer::l0(1), 1000, 1e-7});
  REQUIRE(code.nnz() == 1);
  CHECK(code.entries()[0].first == 7);
  CHECK(code.entries()[0].second == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("omp on the zero vector selects nothing") {
  const msc::Dictionary d = random_dictionary(12, 20, 102);
  const msc::SparseCode code =
      msc::omp_encode(msc::Vector(12, 0.0), d, {msc::Regularizer::l0(5), 1000, 1e-7});
  CHECK(code.nnz() == 0);
}

TEST_CASE("omp recovers a 5-sparse signal in a 64x128 gaussian dictionary") {
  const msc::Dictionary d = random_dictionary(64, 128, 103);
  msc::Rng rng(104);
  const auto support = rng.sample_without_replacement(128, 5);
  msc::Vector truth(128, 0.0);
  for (std::size_t idx : support) {
    truth[idx] = (rng.uniform() < 0.5 ? -1.0 : 1.0) * (1.0 + rng.uniform());
  }
  msc::Vector x(64, 0.0);
  for (std::size_t idx : support) msc::axpy(truth[idx], d.atom(idx), x.data(), 64);

  const msc::SparseCode code = msc::omp_encode(x, d, {msc::Regularizer::l0(5), 1000, 1e-10});
  auto expected = support;
  std::sort(expected.begin(), expected.end());
  REQUIRE(code.nnz() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(code.entries()[i].first == expected[i]);
    CHECK(code.entries()[i].second == doctest::Approx(truth[expected[i]]).epsilon(1e-8));
  }
}

TEST_CASE("omp residual norm never grows with the budget") {
  const msc::Dictionary d = random_dictionary(16, 40, 105);
  msc::Rng rng(106);
  msc::Vector x(16);
  for (auto& v : x) v = rng.normal();

  double prev = msc::norm2(x);
  std::vector<std::size_t> prev_support;
  for (std::size_t s = 1; s <= 8; ++s) {
    const msc::SparseCode code = msc::omp_encode(x, d, {msc::Regularizer::l0(s), 1000, 1e-12});
    CHECK(code.nnz() <= s);
    const double r = msc::norm2(residual(x, d, code));
    CHECK(r <= prev + 1e-12);
    prev = r;

    // Greedy selection never revisits an atom, so supports nest as S grows.
    std::vector<std::size_t> current;
    for (const auto& [idx, val] : code.entries()) current.push_back(idx);
    for (std::size_t idx : prev_support) {
      CHECK(std::find(current.begin(), current.end(), idx) != current.end());
    }
    prev_support = current;
  }
}

TEST_CASE("omp breaks correlation ties toward the lowest atom index") {
  msc::Matrix atoms(4, 6);
  msc::Rng rng(107);
  for (std::size_t j = 0; j < 6; ++j) {
    double* col = atoms.col(j);
    for (std::size_t i = 0; i < 4; ++i) col[i] = rng.normal();
    msc::scale(1.0 / msc::norm2(col, 4), col, 4);
  }
  atoms.set_col(5, atoms.col_vector(2));  // exact duplicate of atom 2
  const msc::Dictionary d(std::move(atoms));
  const msc::Vector x = d.atoms().col_vector(2);
  const msc::SparseCode code = msc::omp_encode(x, d, {msc::Regularizer::l0(1), 1000, 1e-7});
  REQUIRE(code.nnz() == 1);
  CHECK(code.entries()[0].first == 2);
}

TEST_CASE("omp requires an L0 regularizer and a feasible budget") {
  const msc::Dictionary d = random_dictionary(8, 12, 108);
  const msc::Vector x(8, 1.0);
  CHECK_THROWS_AS(msc::omp_encode(x, d, {msc::Regularizer::l1(0.1), 1000, 1e-7}),
                  msc::argument_error);
  CHECK_THROWS_AS(msc::omp_encode(x, d, {msc::Regularizer::l0(13), 1000, 1e-7}),
                  msc::argument_error);
}

TEST_CASE("lasso returns the zero code once lambda dominates the correlations") {
  const msc::Dictionary d = random_dictionary(10, 15, 201);
  msc::Rng rng(202);
  msc::Vector x(10);
  for (auto& v : x) v = rng.normal();
  const msc::Vector b = msc::matvec_transposed(d.atoms(), x);
  double peak = 0.0;
  for (double v : b) peak = std::max(peak, std::abs(v));

  const msc::SparseCode at = msc::lasso_encode(x, d, {msc::Regularizer::l1(2.0 * peak), 1000, 1e-9});
  CHECK(at.nnz() == 0);
  const msc::SparseCode above =
      msc::lasso_encode(x, d, {msc::Regularizer::l1(2.0 * peak * 1.01), 1000, 1e-9});
  CHECK(above.nnz() == 0);
  // Just below the threshold an atom must activate.
  const msc::SparseCode below =
      msc::lasso_encode(x, d, {msc::Regularizer::l1(2.0 * peak * 0.98), 1000, 1e-9});
  CHECK(below.nnz() > 0);
}

TEST_CASE("lasso on an orthonormal dictionary is coordinatewise soft thresholding") {
  const msc::Dictionary d = orthonormal_dictionary(8, 203);
  msc::Rng rng(204);
  msc::Vector x(8);
  for (auto& v : x) v = rng.normal();
  const double lambda = 0.7;
  const msc::SparseCode code = msc::lasso_encode(x, d, {msc::Regularizer::l1(lambda), 1000, 1e-12});
  const msc::Vector y = code.dense();
  const msc::Vector b = msc::matvec_transposed(d.atoms(), x);
  for (std::size_t i = 0; i < 8; ++i) {
    const double mag = std::abs(b[i]) - 0.5 * lambda;
    const double want = mag > 0.0 ? (b[i] > 0.0 ? mag : -mag) : 0.0;
    CHECK(y[i] == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("lasso matches the exhaustive support-enumeration reference") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const msc::Dictionary d = random_dictionary(8, 12, 300 + seed);
    msc::Rng rng(310 + seed);
    // Two planted atoms plus noise keeps the optimum well inside four atoms
    // at this regularization strength.
    msc::Vector x(8);
    for (auto& v : x) v = 0.05 * rng.normal();
    msc::axpy(1.5, d.atom(rng.index(12)), x.data(), 8);
    msc::axpy(-1.0, d.atom(rng.index(12)), x.data(), 8);

    const msc::Vector b = msc::matvec_transposed(d.atoms(), x);
    double peak = 0.0;
    for (double v : b) peak = std::max(peak, std::abs(v));
    const double lambda = 0.8 * peak;

    const msc::SparseCode code =
        msc::lasso_encode(x, d, {msc::Regularizer::l1(lambda), 20000, 1e-10});
    REQUIRE(code.nnz() <= 4);  // otherwise the bounded enumeration is no reference
    const double got = msc::lasso_objective(x, d.atoms(), code.dense(), lambda);
    const double want = brute_force_lasso_objective(x, d.atoms(), lambda, 4);
    CHECK(got == doctest::Approx(want).epsilon(1e-6));
    CHECK(got >= want - 1e-9);  // the reference is a true lower bound here
  }
}

TEST_CASE("lasso solutions satisfy the stationarity conditions") {
  msc::Rng meta(401);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 8 + meta.index(24);
    const std::size_t k = n + meta.index(n);
    const msc::Dictionary d = random_dictionary(n, k, 500 + trial);
    msc::Rng rng(600 + trial);
    msc::Vector x(n);
    for (auto& v : x) v = rng.normal();
    const double lambda = 0.1 + rng.uniform();

    const msc::SparseCode code = msc::lasso_encode(x, d, {msc::Regularizer::l1(lambda), 20000, 1e-8});
    CHECK(msc::lasso_kkt_violation(x, d.atoms(), code.dense(), lambda) <= 1e-8 * 1.01);
    // Any feasible point must beat the zero code or the solver failed.
    CHECK(msc::lasso_objective(x, d.atoms(), code.dense(), lambda) <= msc::dot(x, x) + 1e-12);
  }
}

TEST_CASE("lasso is deterministic") {
  const msc::Dictionary d = random_dictionary(16, 32, 701);
  msc::Rng rng(702);
  msc::Vector x(16);
  for (auto& v : x) v = rng.normal();
  const msc::SolverConfig cfg{msc::Regularizer::l1(0.3), 20000, 1e-9};
  CHECK(msc::lasso_encode(x, d, cfg) == msc::lasso_encode(x, d, cfg));
}

TEST_CASE("batch encoding matches the single-vector path column by column") {
  const msc::Dictionary d = random_dictionary(12, 24, 801);
  msc::Rng rng(802);
  msc::Matrix xs(12, 7);
  for (auto& v : xs.data()) v = rng.normal();
  xs.set_col(3, xs.col_vector(1));  // duplicated example
  const msc::SolverConfig cfg{msc::Regularizer::l1(0.25), 20000, 1e-9};

  const auto codes = msc::batch_encode(xs, d, cfg);
  REQUIRE(codes.size() == 7);
  for (std::size_t j = 0; j < 7; ++j) {
    CHECK(codes[j] == msc::lasso_encode(xs.col_vector(j), d, cfg));
  }
  CHECK(codes[1] == codes[3]);

  SUBCASE("singleton batch") {
    const msc::Matrix one(12, 1, xs.col_vector(0));
    const auto single = msc::batch_encode(one, d, cfg);
    REQUIRE(single.size() == 1);
    CHECK(single[0] == codes[0]);
  }
  SUBCASE("l0 batches dispatch to the greedy encoder") {
    const msc::SolverConfig l0{msc::Regularizer::l0(3), 1000, 1e-9};
    const auto greedy = msc::batch_encode(xs, d, l0);
    for (std::size_t j = 0; j < 7; ++j) {
      CHECK(greedy[j] == msc::omp_encode(xs.col_vector(j), d, l0));
    }
  }
}

TEST_CASE("a hundred-column batch keeps every stationarity residual in tolerance") {
  const msc::Dictionary d = random_dictionary(24, 48, 901);
  msc::Rng rng(902);
  msc::Matrix xs(24, 100);
  for (auto& v : xs.data()) v = rng.normal();
  const msc::SolverConfig cfg{msc::Regularizer::l1(0.5), 20000, 1e-7};
  const auto codes = msc::batch_encode(xs, d, cfg);
  REQUIRE(codes.size() == 100);
  for (std::size_t j = 0; j < 100; ++j) {
    CHECK(msc::lasso_kkt_violation(xs.col_vector(j), d.atoms(), codes[j].dense(), 0.5) <= 1e-7 * 1.01);
  }
}
