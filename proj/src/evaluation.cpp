#include "msc/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "msc/errors.hpp"
#include "msc/rng.hpp"

namespace msc {

Vector class_scores(const LinearModel& model, const Vector& x) {
  if (x.size() != model.weights.cols()) throw argument_error("class_scores: feature dimension mismatch");
  Vector s = matvec(model.weights, x);
  for (std::size_t c = 0; c < s.size(); ++c) s[c] += model.bias[c];
  return s;
}

int predict(const LinearModel& model, const Vector& x) {
  const Vector s = class_scores(model, x);
  std::size_t best = 0;
  for (std::size_t c = 1; c < s.size(); ++c) {
    if (s[c] > s[best]) best = c;
  }
  return static_cast<int>(best);
}

namespace {

std::size_t check_labels(const std::vector<int>& labels, std::size_t n) {
  if (labels.size() != n) throw argument_error("train: one label per feature column required");
  if (n < 2) throw argument_error("train: at least two examples required");
  int max_label = 0;
  for (int l : labels) {
    if (l < 0) throw argument_error("train: negative class label");
    max_label = std::max(max_label, l);
  }
  const std::size_t classes = static_cast<std::size_t>(max_label) + 1;
  std::vector<bool> seen(classes, false);
  for (int l : labels) seen[static_cast<std::size_t>(l)] = true;
  std::size_t distinct = 0;
  for (bool s : seen) distinct += s ? 1 : 0;
  if (distinct < 2) throw argument_error("train: at least two classes required");
  return classes;
}

}  // namespace

LinearModel train_svm_ova(const Matrix& features, const std::vector<int>& labels, double c,
                          int epochs, std::uint64_t seed) {
  const std::size_t n = features.cols();
  const std::size_t f = features.rows();
  const std::size_t classes = check_labels(labels, n);
  if (c <= 0.0) throw argument_error("train_svm_ova: C must be positive");
  if (epochs < 1) throw argument_error("train_svm_ova: epochs must be positive");

  const double lambda = 1.0 / (c * static_cast<double>(n));

  LinearModel model;
  model.kind = LinearModel::Kind::SVM;
  model.weights = Matrix(classes, f);
  model.bias.assign(classes, 0.0);

  Rng rng(seed);
  std::vector<std::size_t> order(n);
  Vector w(f);

  for (std::size_t cls = 0; cls < classes; ++cls) {
    std::fill(w.begin(), w.end(), 0.0);
    double b = 0.0;
    std::iota(order.begin(), order.end(), 0);
    std::size_t t = 0;
    for (int epoch = 0; epoch < epochs; ++epoch) {
      rng.shuffle(order);
      for (std::size_t j : order) {
        ++t;
        const double eta = 1.0 / (lambda * static_cast<double>(t));
        const double y = labels[j] == static_cast<int>(cls) ? 1.0 : -1.0;
        const double margin = y * (dot(w.data(), features.col(j), f) + b);
        scale(1.0 - eta * lambda, w.data(), f);
        if (margin < 1.0) {
          axpy(eta * y, features.col(j), w.data(), f);
          b += eta * y;
        }
      }
    }
    for (std::size_t i = 0; i < f; ++i) model.weights(cls, i) = w[i];
    model.bias[cls] = b;
  }
  return model;
}

namespace detail {

double logistic_loss_grad(const Matrix& features, const std::vector<int>& labels, const Matrix& w,
                          const Vector& b, double l2, Matrix* grad_w, Vector* grad_b) {
  const std::size_t n = features.cols();
  const std::size_t f = features.rows();
  const std::size_t classes = w.rows();
  const double inv_n = 1.0 / static_cast<double>(n);

  if (grad_w != nullptr) *grad_w = Matrix(classes, f);
  if (grad_b != nullptr) grad_b->assign(classes, 0.0);

  double loss = 0.0;
  Vector s(classes), p(classes);
  for (std::size_t j = 0; j < n; ++j) {
    const double* x = features.col(j);
    for (std::size_t cls = 0; cls < classes; ++cls) {
      double acc = b[cls];
      for (std::size_t i = 0; i < f; ++i) acc += w(cls, i) * x[i];
      s[cls] = acc;
    }
    const double smax = *std::max_element(s.begin(), s.end());
    double z = 0.0;
    for (std::size_t cls = 0; cls < classes; ++cls) z += std::exp(s[cls] - smax);
    const double logz = std::log(z) + smax;
    const std::size_t y = static_cast<std::size_t>(labels[j]);
    loss += (logz - s[y]) * inv_n;

    if (grad_w == nullptr && grad_b == nullptr) continue;
    for (std::size_t cls = 0; cls < classes; ++cls) {
      p[cls] = std::exp(s[cls] - logz);
      const double g = (p[cls] - (cls == y ? 1.0 : 0.0)) * inv_n;
      if (grad_b != nullptr) (*grad_b)[cls] += g;
      if (grad_w != nullptr) {
        for (std::size_t i = 0; i < f; ++i) (*grad_w)(cls, i) += g * x[i];
      }
    }
  }

  double reg = 0.0;
  for (double v : w.data()) reg += v * v;
  loss += 0.5 * l2 * reg;
  if (grad_w != nullptr) {
    for (std::size_t i = 0; i < grad_w->data().size(); ++i) grad_w->data()[i] += l2 * w.data()[i];
  }
  return loss;
}

}  // namespace detail

LinearModel train_logistic(const Matrix& features, const std::vector<int>& labels, double l2,
                           int epochs, std::uint64_t seed) {
  (void)seed;
  const std::size_t n = features.cols();
  const std::size_t f = features.rows();
  const std::size_t classes = check_labels(labels, n);
  if (l2 < 0.0) throw argument_error("train_logistic: l2 must be non-negative");
  if (epochs < 1) throw argument_error("train_logistic: epochs must be positive");

  LinearModel model;
  model.kind = LinearModel::Kind::Logistic;
  model.weights = Matrix(classes, f);
  model.bias.assign(classes, 0.0);

  Matrix gw;
  Vector gb;
  double loss = detail::logistic_loss_grad(features, labels, model.weights, model.bias, l2, &gw, &gb);

  double step = 1.0;
  for (int it = 0; it < epochs; ++it) {
    double gnorm_sq = 0.0;
    for (double v : gw.data()) gnorm_sq += v * v;
    for (double v : gb) gnorm_sq += v * v;
    if (gnorm_sq < 1e-20) break;

    step = std::min(step * 2.0, 1e6);
    Matrix w_next(classes, f);
    Vector b_next(classes);
    double loss_next = 0.0;
    bool accepted = false;
    for (int half = 0; half < 60; ++half) {
      for (std::size_t i = 0; i < gw.data().size(); ++i) {
        w_next.data()[i] = model.weights.data()[i] - step * gw.data()[i];
      }
      for (std::size_t cls = 0; cls < classes; ++cls) b_next[cls] = model.bias[cls] - step * gb[cls];
      loss_next = detail::logistic_loss_grad(features, labels, w_next, b_next, l2, nullptr, nullptr);
      if (loss_next <= loss - 1e-4 * step * gnorm_sq) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    model.weights = std::move(w_next);
    model.bias = std::move(b_next);
    loss = detail::logistic_loss_grad(features, labels, model.weights, model.bias, l2, &gw, &gb);
  }
  return model;
}

double accuracy(const LinearModel& model, const Matrix& features, const std::vector<int>& labels) {
  if (labels.size() != features.cols()) throw argument_error("accuracy: one label per column required");
  if (labels.empty()) throw argument_error("accuracy: empty evaluation set");
  std::size_t correct = 0;
  for (std::size_t j = 0; j < features.cols(); ++j) {
    if (predict(model, features.col_vector(j)) == labels[j]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double average_precision(const RankedList& items) {
  std::size_t positives = 0;
  for (const auto& it : items) positives += it.positive ? 1 : 0;
  if (positives == 0) throw argument_error("average_precision: no positive items");

  RankedList sorted = items;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const RankedItem& a, const RankedItem& b) { return a.score > b.score; });

  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    if (sorted[k].positive) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
  }
  return sum / static_cast<double>(positives);
}

double mean_average_precision(const std::vector<RankedList>& lists) {
  if (lists.empty()) throw argument_error("mean_average_precision: no lists");
  double sum = 0.0;
  for (const auto& l : lists) sum += average_precision(l);
  return sum / static_cast<double>(lists.size());
}

Psnr psnr(const Matrix& clean, const Matrix& estimate, double peak) {
  if (clean.rows() != estimate.rows() || clean.cols() != estimate.cols()) {
    throw argument_error("psnr: shape mismatch");
  }
  if (clean.empty()) throw argument_error("psnr: empty input");
  if (peak <= 0.0) throw argument_error("psnr: peak must be positive");

  double mse = 0.0;
  for (std::size_t i = 0; i < clean.data().size(); ++i) {
    const double d = clean.data()[i] - estimate.data()[i];
    mse += d * d;
  }
  mse /= static_cast<double>(clean.data().size());

  if (mse == 0.0) return {true, 0.0};
  return {false, 10.0 * std::log10(peak * peak / mse)};
}

Matrix l2_normalize_columns(const Matrix& m) {
  Matrix out = m;
  for (std::size_t j = 0; j < out.cols(); ++j) {
    const double nrm = norm2(out.col(j), out.rows());
    if (nrm > 0.0) scale(1.0 / nrm, out.col(j), out.rows());
  }
  return out;
}

}  // namespace msc
