#include "msc/dictionary.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include <json.hpp>

#include "msc/errors.hpp"
#include "msc/rng.hpp"
#include "msc/solvers.hpp"

namespace msc {

Dictionary::Dictionary(Matrix atoms, std::vector<ModalityBlock> blocks)
    : atoms_(std::move(atoms)), blocks_(std::move(blocks)) {
  if (atoms_.empty()) throw argument_error("dictionary: atoms matrix is empty");
  if (!blocks_.empty()) {
    std::size_t cursor = 0;
    for (const auto& b : blocks_) {
      if (b.row_start != cursor || b.row_end <= b.row_start) {
        throw argument_error("dictionary: modality blocks must partition the rows");
      }
      cursor = b.row_end;
    }
    if (cursor != atoms_.rows()) throw argument_error("dictionary: modality blocks must partition the rows");
  }
}

const ModalityBlock& Dictionary::block(const std::string& name) const {
  for (const auto& b : blocks_) {
    if (b.name == name) return b;
  }
  throw argument_error("dictionary: unknown modality '" + name + "'");
}

void Dictionary::validate() const {
  for (std::size_t k = 0; k < num_atoms(); ++k) {
    const double nrm = norm2(atom(k), atom_dim());
    if (nrm > 1.0 + 1e-12) throw numeric_error("dictionary: atom norm exceeds unit bound");
    if (nrm < 1e-8) throw numeric_error("dictionary: dead zero atom");
  }
}

namespace {

void normalize_column(Matrix& m, std::size_t j) {
  const double nrm = norm2(m.col(j), m.rows());
  if (nrm > 0.0) scale(1.0 / nrm, m.col(j), m.rows());
}

double column_norm(const Matrix& m, std::size_t j) { return norm2(m.col(j), m.rows()); }

}  // namespace

Dictionary init_dictionary(const Matrix& xs, const TrainConfig& cfg) {
  if (xs.empty()) throw argument_error("init_dictionary: empty training data");
  if (cfg.num_atoms == 0) throw argument_error("init_dictionary: num_atoms must be positive");
  const std::size_t n = xs.cols();
  const std::size_t dim = xs.rows();
  const std::size_t k = cfg.num_atoms;

  bool any_nonzero = false;
  for (std::size_t j = 0; j < n && !any_nonzero; ++j) any_nonzero = column_norm(xs, j) > 0.0;
  if (!any_nonzero) throw argument_error("init_dictionary: all training columns are zero");

  Rng rng(cfg.seed);
  Matrix atoms(dim, k);

  if (n >= k) {
    // Distinct random training columns; zero columns are skipped.
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    rng.shuffle(idx);
    std::size_t taken = 0;
    for (std::size_t pos = 0; pos < n && taken < k; ++pos) {
      if (column_norm(xs, idx[pos]) == 0.0) continue;
      atoms.set_col(taken, xs.col_vector(idx[pos]));
      ++taken;
    }
    while (taken < k) {
      // Ran out of distinct nonzero columns: reuse with jitter.
      const std::size_t j = rng.index(n);
      Vector v = xs.col_vector(j);
      const double s = std::max(norm2(v), 1.0) * 1e-2 / std::sqrt(static_cast<double>(dim));
      for (double& e : v) e += s * rng.normal();
      atoms.set_col(taken, v);
      ++taken;
    }
  } else {
    for (std::size_t t = 0; t < k; ++t) {
      std::size_t j = rng.index(n);
      while (column_norm(xs, j) == 0.0) j = rng.index(n);
      Vector v = xs.col_vector(j);
      const double s = norm2(v) * 1e-2 / std::sqrt(static_cast<double>(dim));
      for (double& e : v) e += s * rng.normal();
      atoms.set_col(t, v);
    }
  }

  for (std::size_t t = 0; t < k; ++t) normalize_column(atoms, t);
  return Dictionary(std::move(atoms));
}

namespace {

// Rank-1 SVD of a tall residual block by power iteration on EᵀE.
// Returns false when E is numerically zero.
bool rank1_svd(const Matrix& e, Vector& v, Vector& u, double& sigma, double tol = 1e-10, int max_iter = 500) {
  const std::size_t m = e.cols();
  const std::size_t n = e.rows();
  double vn = norm2(v);
  if (vn == 0.0) {
    std::fill(v.begin(), v.end(), 1.0 / std::sqrt(static_cast<double>(m)));
  } else {
    scale(1.0 / vn, v.data(), m);
  }
  Vector w(n), z(m);
  for (int it = 0; it < max_iter; ++it) {
    w = matvec(e, v);
    z = matvec_transposed(e, w);
    const double zn = norm2(z);
    if (zn == 0.0) return false;
    scale(1.0 / zn, z.data(), m);
    double diff = 0.0;
    for (std::size_t i = 0; i < m; ++i) diff = std::max(diff, std::abs(z[i] - v[i]));
    v = z;
    if (diff < tol) break;
  }
  w = matvec(e, v);
  sigma = norm2(w);
  if (sigma == 0.0) return false;
  u = w;
  scale(1.0 / sigma, u.data(), n);
  return true;
}

Dictionary replace_dead_atoms_impl(const Dictionary& d, const std::vector<int>& usage, const Matrix& xs,
                                   const Vector& residual_norms, int threshold, std::uint64_t seed) {
  if (usage.size() != d.num_atoms()) throw argument_error("replace_dead_atoms: usage length mismatch");
  if (residual_norms.size() != xs.cols()) throw argument_error("replace_dead_atoms: residual count mismatch");

  std::vector<std::size_t> dead;
  for (std::size_t k = 0; k < usage.size(); ++k) {
    if (usage[k] <= threshold) dead.push_back(k);
  }
  if (dead.empty()) return d;

  std::vector<std::size_t> order(xs.cols());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return residual_norms[a] > residual_norms[b]; });

  Matrix atoms = d.atoms();
  Rng rng(seed);
  std::size_t next = 0;
  for (std::size_t k : dead) {
    while (next < order.size() && column_norm(xs, order[next]) <= 1e-12) ++next;
    Vector v;
    if (next < order.size()) {
      v = xs.col_vector(order[next]);
      ++next;
    } else {
      // More dead atoms than usable columns: jitter the worst column.
      v = xs.col_vector(order[0]);
      const double s = std::max(norm2(v), 1.0) * 1e-2 / std::sqrt(static_cast<double>(xs.rows()));
      for (double& e : v) e += s * rng.normal();
    }
    const double nrm = norm2(v);
    if (nrm > 0.0) {
      scale(1.0 / nrm, v.data(), v.size());
      atoms.set_col(k, v);
    }
  }
  return Dictionary(std::move(atoms), d.blocks());
}

}  // namespace

Dictionary replace_dead_atoms(const Dictionary& d, const std::vector<int>& usage, const Matrix& xs,
                              const Vector& residual_norms, int threshold, std::uint64_t seed) {
  return replace_dead_atoms_impl(d, usage, xs, residual_norms, threshold, seed);
}

Dictionary replace_dead_atoms(const Dictionary& d, const std::vector<int>& usage, const Matrix& xs,
                              const SolverConfig& solver, int threshold, std::uint64_t seed) {
  const auto codes = batch_encode(xs, d, solver);
  Vector residual_norms(xs.cols());
  for (std::size_t j = 0; j < xs.cols(); ++j) {
    Vector r = xs.col_vector(j);
    for (const auto& [idx, val] : codes[j].entries()) axpy(-val, d.atom(idx), r.data(), r.size());
    residual_norms[j] = norm2(r);
  }
  return replace_dead_atoms_impl(d, usage, xs, residual_norms, threshold, seed);
}

KsvdResult train_ksvd(const Matrix& xs, const TrainConfig& cfg) {
  if (xs.empty()) throw argument_error("train_ksvd: empty dataset");
  if (cfg.method != TrainMethod::KSVD) throw argument_error("train_ksvd: config method is not KSVD");
  if (cfg.solver.reg.kind != Regularizer::Kind::L0) throw argument_error("train_ksvd: L0 solver required");

  const std::size_t n = xs.cols();
  const std::size_t dim = xs.rows();
  const std::size_t k = cfg.num_atoms;

  Dictionary dict = init_dictionary(xs, cfg);
  std::vector<SparseCode> codes;
  std::vector<double> trace;
  trace.reserve(cfg.epochs);

  // Dense copy of the codes for in-place coefficient updates.
  std::vector<Vector> y(n);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    codes = batch_encode(xs, dict, cfg.solver);
    for (std::size_t j = 0; j < n; ++j) y[j] = codes[j].dense();

    // Full residual R = X − DY, kept current through the atom updates.
    Matrix residual = xs;
    for (std::size_t j = 0; j < n; ++j) {
      for (const auto& [idx, val] : codes[j].entries()) {
        axpy(-val, dict.atom(idx), residual.col(j), dim);
      }
    }
    trace.push_back(frobenius_sq(residual));

    std::vector<std::vector<std::size_t>> users(k);
    for (std::size_t j = 0; j < n; ++j) {
      for (const auto& [idx, val] : codes[j].entries()) users[idx].push_back(j);
    }

    Matrix& atoms = dict.atoms();
    for (std::size_t a = 0; a < k; ++a) {
      const auto& omega = users[a];
      if (omega.empty()) continue;
      const std::size_t m = omega.size();

      // Residual with this atom's contribution restored.
      Matrix e(dim, m);
      Vector v0(m);
      for (std::size_t t = 0; t < m; ++t) {
        const std::size_t j = omega[t];
        const double coef = y[j][a];
        v0[t] = coef;
        Vector ec = residual.col_vector(j);
        axpy(coef, atoms.col(a), ec.data(), dim);
        e.set_col(t, ec);
      }

      Vector u;
      double sigma = 0.0;
      if (!rank1_svd(e, v0, u, sigma)) continue;

      atoms.set_col(a, u);
      for (std::size_t t = 0; t < m; ++t) {
        const std::size_t j = omega[t];
        y[j][a] = sigma * v0[t];
        // R column = E column − new rank-1 contribution.
        for (std::size_t i = 0; i < dim; ++i) residual(i, j) = e(i, t) - u[i] * y[j][a];
      }
    }

    std::vector<int> usage(k, 0);
    for (std::size_t a = 0; a < k; ++a) usage[a] = static_cast<int>(users[a].size());
    // Two atoms drifting onto one direction stall recovery: the pair splits
    // the users while some other direction goes uncovered. Retire the later
    // twin along with the dead atoms. Skipped on the last epoch so the
    // returned codes only reference atoms that survived.
    if (epoch + 1 < cfg.epochs) {
      for (std::size_t a = 0; a < k; ++a) {
        if (usage[a] <= cfg.dead_atom_threshold) continue;
        for (std::size_t b = a + 1; b < k; ++b) {
          if (usage[b] <= cfg.dead_atom_threshold) continue;
          if (std::abs(dot(atoms.col(a), atoms.col(b), dim)) > 0.99) {
            usage[b] = cfg.dead_atom_threshold;
          }
        }
      }
    }
    Vector residual_norms(n);
    for (std::size_t j = 0; j < n; ++j) residual_norms[j] = norm2(residual.col(j), dim);
    dict = replace_dead_atoms_impl(dict, usage, xs, residual_norms, cfg.dead_atom_threshold,
                                   cfg.seed + static_cast<std::uint64_t>(epoch) + 1);
  }

  // Rebuild sparse codes from the updated coefficients.
  std::vector<SparseCode> out;
  out.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<std::pair<std::size_t, double>> entries;
    for (const auto& [idx, val] : codes[j].entries()) {
      if (y[j][idx] != 0.0) entries.emplace_back(idx, y[j][idx]);
    }
    out.emplace_back(k, std::move(entries), cfg.solver.reg);
  }
  return {std::move(dict), std::move(out), std::move(trace)};
}

OnlineResult train_online(const Matrix& xs, const TrainConfig& cfg) {
  if (xs.empty()) throw argument_error("train_online: empty dataset");
  if (cfg.method != TrainMethod::Online) throw argument_error("train_online: config method is not Online");
  if (cfg.solver.reg.kind != Regularizer::Kind::L1) throw argument_error("train_online: L1 solver required");
  if (cfg.batch_size == 0) throw argument_error("train_online: batch_size must be positive");

  const std::size_t n = xs.cols();
  const std::size_t dim = xs.rows();
  const std::size_t k = cfg.num_atoms;
  const double lambda = cfg.solver.reg.lambda;

  Dictionary dict = init_dictionary(xs, cfg);
  Matrix stat_a(k, k);    // accumulated Y·Yᵀ
  Matrix stat_b(dim, k);  // accumulated X·Yᵀ

  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  std::vector<double> trace;
  trace.reserve(cfg.epochs);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_obj = 0.0;

    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t stop = std::min(start + cfg.batch_size, n);
      const Matrix g = gram(dict.atoms());
      bool any_active = false;

      for (std::size_t t = start; t < stop; ++t) {
        const std::size_t j = order[t];
        const Vector x = xs.col_vector(j);
        const Vector b = matvec_transposed(dict.atoms(), x);
        const SparseCode code = detail::lasso_encode_gram(b, g, cfg.solver, k);

        Vector r = x;
        for (const auto& [idx, val] : code.entries()) axpy(-val, dict.atom(idx), r.data(), dim);
        epoch_obj += dot(r, r) + lambda * code.l1_norm();

        for (const auto& [i1, v1] : code.entries()) {
          any_active = true;
          for (const auto& [i2, v2] : code.entries()) stat_a(i1, i2) += v1 * v2;
          axpy(v1, x.data(), stat_b.col(i1), dim);
        }
      }

      if (!any_active) continue;
      // One block-coordinate pass over the atoms, each projected onto the
      // unit ball.
      Matrix& atoms = dict.atoms();
      for (std::size_t a2 = 0; a2 < k; ++a2) {
        const double ajj = stat_a(a2, a2);
        if (ajj <= 1e-12) continue;
        Vector u = atoms.col_vector(a2);
        const Vector da = matvec(atoms, stat_a.col_vector(a2));
        for (std::size_t i = 0; i < dim; ++i) u[i] += (stat_b(i, a2) - da[i]) / ajj;
        const double nrm = norm2(u);
        if (nrm > 1.0) scale(1.0 / nrm, u.data(), dim);
        atoms.set_col(a2, u);
      }
    }
    trace.push_back(epoch_obj);
  }
  return {std::move(dict), std::move(trace)};
}

namespace {

nlohmann::ordered_json solver_to_json(const SolverConfig& s) {
  nlohmann::ordered_json j;
  if (s.reg.kind == Regularizer::Kind::L0) {
    j["regularizer"] = "l0";
    j["sparsity"] = s.reg.sparsity;
  } else {
    j["regularizer"] = "l1";
    j["lambda"] = s.reg.lambda;
  }
  j["max_iter"] = s.max_iter;
  j["tol"] = s.tol;
  return j;
}

SolverConfig solver_from_json(const nlohmann::json& j) {
  SolverConfig s;
  const std::string kind = j.at("regularizer").get<std::string>();
  if (kind == "l0") {
    s.reg = Regularizer::l0(j.at("sparsity").get<std::size_t>());
  } else if (kind == "l1") {
    s.reg = Regularizer::l1(j.at("lambda").get<double>());
  } else {
    throw format_error("dictionary metadata: unknown regularizer '" + kind + "'");
  }
  s.max_iter = j.at("max_iter").get<int>();
  s.tol = j.at("tol").get<double>();
  return s;
}

}  // namespace

void save_dictionary(const Dictionary& d, const DictionaryMeta& meta, const std::string& stem) {
  save_matrix(d.atoms(), stem + ".msc");

  nlohmann::ordered_json j;
  j["atom_dim"] = d.atom_dim();
  j["num_atoms"] = d.num_atoms();
  auto blocks = nlohmann::ordered_json::array();
  for (const auto& b : d.blocks()) {
    blocks.push_back({{"name", b.name}, {"row_start", b.row_start}, {"row_end", b.row_end}, {"weight", b.weight}});
  }
  j["modality_blocks"] = blocks;
  j["solver"] = solver_to_json(meta.solver);
  j["seed"] = meta.seed;
  if (meta.lambda_joint) j["lambda_joint"] = *meta.lambda_joint;
  if (meta.lambda_cross) j["lambda_cross"] = *meta.lambda_cross;

  std::ofstream os(stem + ".json", std::ios::trunc);
  if (!os) throw format_error("save_dictionary: cannot open '" + stem + ".json'");
  os << j.dump(2) << '\n';
}

std::pair<Dictionary, DictionaryMeta> load_dictionary(const std::string& stem) {
  Matrix atoms = load_matrix(stem + ".msc");

  std::ifstream is(stem + ".json");
  if (!is) throw format_error("load_dictionary: cannot open '" + stem + ".json'");
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw format_error(std::string("load_dictionary: bad metadata: ") + e.what());
  }

  if (j.at("atom_dim").get<std::size_t>() != atoms.rows() ||
      j.at("num_atoms").get<std::size_t>() != atoms.cols()) {
    throw format_error("load_dictionary: metadata does not match atom matrix shape");
  }

  std::vector<ModalityBlock> blocks;
  for (const auto& b : j.at("modality_blocks")) {
    blocks.push_back({b.at("name").get<std::string>(), b.at("row_start").get<std::size_t>(),
                      b.at("row_end").get<std::size_t>(), b.at("weight").get<double>()});
  }

  DictionaryMeta meta;
  meta.solver = solver_from_json(j.at("solver"));
  meta.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("lambda_joint")) meta.lambda_joint = j.at("lambda_joint").get<double>();
  if (j.contains("lambda_cross")) meta.lambda_cross = j.at("lambda_cross").get<double>();

  return {Dictionary(std::move(atoms), std::move(blocks)), meta};
}

}  // namespace msc
