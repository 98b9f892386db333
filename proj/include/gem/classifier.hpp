#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gem/linalg.hpp"

namespace gem {

struct TrainOptions {
  double l2 = 1e-4;
  std::size_t max_iter = 500;
  /// Stop once the gradient infinity-norm falls to this value.
  double grad_tol = 1e-6;
  /// Curvature pairs kept by the quasi-Newton update.
  std::size_t history = 10;
  /// Starting weights (k x (width + 1)); zero when absent.
  std::optional<RowMatrix> init;
};

/// Objective value after every accepted step, starting from the initial point.
struct TrainTrace {
  std::vector<double> objective;
  bool converged = false;
};

/// Multinomial logistic regression. weights is k x (width + 1); the last
/// column is the unpenalized bias.
struct MultiLogitModel {
  RowMatrix weights;
  double l2 = 0.0;
  std::size_t iterations = 0;
  double objective = 0.0;

  std::size_t classes() const { return static_cast<std::size_t>(weights.rows()); }
  std::size_t width() const { return weights.cols() > 0 ? static_cast<std::size_t>(weights.cols()) - 1 : 0; }

  Vector scores(std::span<const double> x) const;
  RowMatrix scores(const RowMatrix& X) const;
  Vector predict_proba(std::span<const double> x) const;
  RowMatrix predict_proba(const RowMatrix& X) const;

  friend bool operator==(const MultiLogitModel&, const MultiLogitModel&) = default;
};

/// Mean cross-entropy plus (l2 / 2) * ||W without bias||^2 and its gradient.
/// The data term is summed over fixed row chunks reduced in a fixed order, so
/// the value is independent of the worker count.
class MultiLogitObjective {
 public:
  MultiLogitObjective(const RowMatrix& X, std::span<const std::uint32_t> labels, std::size_t classes, double l2);

  double evaluate(const RowMatrix& W, RowMatrix* grad) const;

  std::size_t classes() const { return classes_; }
  std::size_t width() const { return static_cast<std::size_t>(X_.cols()); }

 private:
  const RowMatrix& X_;
  std::span<const std::uint32_t> labels_;
  std::size_t classes_;
  double l2_;
};

/// Limited-memory quasi-Newton descent with Armijo backtracking, started from
/// zero weights unless opts.init is set. Deterministic given data and options.
MultiLogitModel train(const RowMatrix& X, std::span<const std::uint32_t> labels, std::size_t classes,
                      const TrainOptions& opts = {}, TrainTrace* trace = nullptr);

/// Softmax of a score vector.
Vector softmax(const Vector& scores);

/// Entrywise geometric mean of probability vectors (floored at 1e-12),
/// renormalized to sum to one.
Vector ensemble_geomean(std::span<const Vector> members);
RowMatrix ensemble_geomean(std::span<const RowMatrix> members);

struct Metrics {
  std::size_t n = 0;
  std::size_t errors = 0;
  double error_rate = 0.0;
  double cross_entropy = 0.0;
};

/// Error = fraction of rows whose argmax differs from the label;
/// cross-entropy = mean -ln max(p_y, 1e-12).
Metrics evaluate(const RowMatrix& proba, std::span<const std::uint32_t> labels);

inline constexpr double kProbabilityFloor = 1e-12;

}  // namespace gem
