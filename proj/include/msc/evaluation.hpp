#pragma once

#include <cstdint>
#include <vector>

#include "msc/matrix.hpp"

namespace msc {

// One linear scorer per class: score = weights·x + bias, prediction by
// argmax with ties to the lowest class index.
struct LinearModel {
  enum class Kind { SVM, Logistic };
  Matrix weights;  // classes × features
  Vector bias;     // per class
  Kind kind = Kind::SVM;

  std::size_t num_classes() const { return weights.rows(); }
};

Vector class_scores(const LinearModel& model, const Vector& x);
int predict(const LinearModel& model, const Vector& x);

// One-vs-all hinge loss by the classic decreasing-step subgradient schedule
// eta_t = 1/(lambda*t) with lambda = 1/(C*n); the bias is unregularized.
// Features are columns; labels are 0-based class ids.
LinearModel train_svm_ova(const Matrix& features, const std::vector<int>& labels, double c,
                          int epochs, std::uint64_t seed);

// Multinomial cross entropy with L2 on the weights (not the bias), full
// batch gradient descent with backtracking line search from a zero start.
// The seed is accepted for interface symmetry; the solve is deterministic.
LinearModel train_logistic(const Matrix& features, const std::vector<int>& labels, double l2,
                           int epochs, std::uint64_t seed);

double accuracy(const LinearModel& model, const Matrix& features, const std::vector<int>& labels);

// Retrieval list entry. Lists are sorted by score descending before
// evaluation; ties keep their original order.
struct RankedItem {
  double score = 0.0;
  bool positive = false;
};
using RankedList = std::vector<RankedItem>;

// Mean of precision at each positive rank, divided by the positive count.
double average_precision(const RankedList& items);
double mean_average_precision(const std::vector<RankedList>& lists);

// 10*log10(peak^2/MSE); identical inputs are reported as exact rather than
// as a number.
struct Psnr {
  bool exact = false;
  double db = 0.0;
};
Psnr psnr(const Matrix& clean, const Matrix& estimate, double peak);

// Unit L2 columns; zero columns stay zero.
Matrix l2_normalize_columns(const Matrix& m);

namespace detail {
// Loss value and gradients of the multinomial objective, exposed for
// finite-difference verification.
double logistic_loss_grad(const Matrix& features, const std::vector<int>& labels, const Matrix& w,
                          const Vector& b, double l2, Matrix* grad_w, Vector* grad_b);
}  // namespace detail

}  // namespace msc
