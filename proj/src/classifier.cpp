#include "gem/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include "gem/error.hpp"
#include "gem/parallel.hpp"
#include "gem/simd/kernels.hpp"

namespace gem {
namespace {

constexpr Eigen::Index kChunkRows = 2048;
constexpr double kArmijo = 1e-4;

struct ChunkResult {
  double loss = 0.0;
  RowMatrix grad;
};

void softmax_row(double* s, std::size_t k) {
  double mx = s[0];
  for (std::size_t c = 1; c < k; ++c) mx = std::max(mx, s[c]);
  double sum = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    s[c] = std::exp(s[c] - mx);
    sum += s[c];
  }
  const double inv = 1.0 / sum;
  for (std::size_t c = 0; c < k; ++c) s[c] *= inv;
}

using FlatMap = Eigen::Map<Eigen::VectorXd>;

FlatMap flat(RowMatrix& m) { return FlatMap(m.data(), m.size()); }

}  // namespace

Vector MultiLogitModel::scores(std::span<const double> x) const {
  if (x.size() != width()) {
    throw DimensionError("classifier expects " + std::to_string(width()) + " features, got " + std::to_string(x.size()));
  }
  std::vector<double> aug(x.begin(), x.end());
  aug.push_back(1.0);
  Vector s(weights.rows());
  simd::kernels().gemv(weights.data(), classes(), aug.size(), aug.data(), s.data());
  return s;
}

RowMatrix MultiLogitModel::scores(const RowMatrix& X) const {
  if (static_cast<std::size_t>(X.cols()) != width()) {
    throw DimensionError("classifier expects " + std::to_string(width()) + " features, got " + std::to_string(X.cols()));
  }
  const Eigen::Index w = X.cols();
  RowMatrix S = X * weights.leftCols(w).transpose();
  S.rowwise() += weights.col(w).transpose();
  return S;
}

Vector MultiLogitModel::predict_proba(std::span<const double> x) const { return softmax(scores(x)); }

RowMatrix MultiLogitModel::predict_proba(const RowMatrix& X) const {
  RowMatrix P = scores(X);
  for (Eigen::Index i = 0; i < P.rows(); ++i) softmax_row(P.row(i).data(), classes());
  return P;
}

MultiLogitObjective::MultiLogitObjective(const RowMatrix& X, std::span<const std::uint32_t> labels,
                                         std::size_t classes, double l2)
    : X_(X), labels_(labels), classes_(classes), l2_(l2) {
  if (static_cast<std::size_t>(X.rows()) != labels.size()) throw DimensionError("row and label counts differ");
  if (X.rows() < 1) throw ConfigError("classifier needs at least one example");
  if (classes < 1) throw ConfigError("classifier needs at least one class");
  if (!(l2 >= 0.0)) throw ConfigError("l2 strength must be nonnegative");
  for (auto y : labels) {
    if (y >= classes) throw LabelError("label outside the class range");
  }
  if (!X.allFinite()) throw NonFiniteError("non-finite classifier feature");
}

double MultiLogitObjective::evaluate(const RowMatrix& W, RowMatrix* grad) const {
  const Eigen::Index n = X_.rows();
  const Eigen::Index w = X_.cols();
  const auto k = static_cast<Eigen::Index>(classes_);
  if (W.rows() != k || W.cols() != w + 1) throw DimensionError("weight matrix has the wrong shape");

  const Eigen::Index chunks = (n + kChunkRows - 1) / kChunkRows;
  std::vector<ChunkResult> parts(static_cast<std::size_t>(chunks));
  const auto Wx = W.leftCols(w);
  const auto bias = W.col(w).transpose();

  parallel_for(static_cast<std::size_t>(chunks), [&](std::size_t c) {
    const Eigen::Index start = static_cast<Eigen::Index>(c) * kChunkRows;
    const Eigen::Index len = std::min(kChunkRows, n - start);
    const auto Xc = X_.middleRows(start, len);
    RowMatrix S = Xc * Wx.transpose();
    S.rowwise() += bias;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < len; ++i) {
      double* s = S.row(i).data();
      const auto y = labels_[static_cast<std::size_t>(start + i)];
      double mx = s[0];
      for (Eigen::Index j = 1; j < k; ++j) mx = std::max(mx, s[j]);
      double sum = 0.0;
      for (Eigen::Index j = 0; j < k; ++j) sum += std::exp(s[j] - mx);
      const double lse = mx + std::log(sum);
      loss += lse - s[y];
      if (grad) {
        for (Eigen::Index j = 0; j < k; ++j) s[j] = std::exp(s[j] - lse);
        s[y] -= 1.0;
      }
    }
    ChunkResult& out = parts[c];
    out.loss = loss;
    if (grad) {
      out.grad.resize(k, w + 1);
      out.grad.leftCols(w).noalias() = S.transpose() * Xc;
      out.grad.col(w) = S.colwise().sum().transpose();
    }
  });

  // Pairwise reduction in a fixed tree shape.
  for (std::size_t stride = 1; stride < parts.size(); stride *= 2) {
    for (std::size_t i = 0; i + stride < parts.size(); i += 2 * stride) {
      parts[i].loss += parts[i + stride].loss;
      if (grad) parts[i].grad += parts[i + stride].grad;
    }
  }

  const double inv_n = 1.0 / static_cast<double>(n);
  const double penalty = 0.5 * l2_ * Wx.squaredNorm();
  const double value = parts[0].loss * inv_n + penalty;
  if (grad) {
    *grad = parts[0].grad * inv_n;
    grad->leftCols(w) += l2_ * Wx;
  }
  return value;
}

MultiLogitModel train(const RowMatrix& X, std::span<const std::uint32_t> labels, std::size_t classes,
                      const TrainOptions& opts, TrainTrace* trace) {
  const MultiLogitObjective objective(X, labels, classes, opts.l2);
  const auto k = static_cast<Eigen::Index>(classes);
  const Eigen::Index cols = X.cols() + 1;

  RowMatrix W = RowMatrix::Zero(k, cols);
  if (opts.init) {
    if (opts.init->rows() != k || opts.init->cols() != cols) throw DimensionError("initial weights have the wrong shape");
    W = *opts.init;
  }

  RowMatrix G(k, cols);
  double f = objective.evaluate(W, &G);
  if (trace) {
    trace->objective.assign(1, f);
    trace->converged = false;
  }

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  RowMatrix W_new(k, cols), G_new(k, cols);
  Eigen::VectorXd d(W.size());
  std::size_t iter = 0;
  bool converged = false;

  for (; iter < opts.max_iter; ++iter) {
    if (flat(G).lpNorm<Eigen::Infinity>() <= opts.grad_tol) {
      converged = true;
      break;
    }

    // Two-loop recursion for d = -H g.
    d = -flat(G);
    std::vector<double> alpha(s_hist.size());
    for (std::size_t m = s_hist.size(); m-- > 0;) {
      alpha[m] = rho_hist[m] * s_hist[m].dot(d);
      d -= alpha[m] * y_hist[m];
    }
    if (!s_hist.empty()) d *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (std::size_t m = 0; m < s_hist.size(); ++m) {
      const double beta = rho_hist[m] * y_hist[m].dot(d);
      d += (alpha[m] - beta) * s_hist[m];
    }

    double slope = flat(G).dot(d);
    if (!(slope < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      d = -flat(G);
      slope = -flat(G).squaredNorm();
    }

    double step = s_hist.empty() ? std::min(1.0, 1.0 / flat(G).norm()) : 1.0;
    double f_new = 0.0;
    bool accepted = false;
    while (step > 1e-20) {
      flat(W_new) = flat(W) + step * d;
      f_new = objective.evaluate(W_new, &G_new);
      if (std::isfinite(f_new) && f_new <= f + kArmijo * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted || !(f_new < f)) break;  // no further progress at working precision

    Eigen::VectorXd s = flat(W_new) - flat(W);
    Eigen::VectorXd y = flat(G_new) - flat(G);
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (s_hist.size() > opts.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    W.swap(W_new);
    G.swap(G_new);
    f = f_new;
    if (trace) trace->objective.push_back(f);
  }
  if (!converged && flat(G).lpNorm<Eigen::Infinity>() <= opts.grad_tol) converged = true;
  if (trace) trace->converged = converged;

  MultiLogitModel model;
  model.weights = std::move(W);
  model.l2 = opts.l2;
  model.iterations = iter;
  model.objective = f;
  return model;
}

Vector softmax(const Vector& scores) {
  Vector p = scores;
  if (p.size() > 0) softmax_row(p.data(), static_cast<std::size_t>(p.size()));
  return p;
}

Vector ensemble_geomean(std::span<const Vector> members) {
  if (members.empty()) throw ConfigError("ensemble needs at least one member");
  const Eigen::Index k = members.front().size();
  Vector logsum = Vector::Zero(k);
  for (const auto& p : members) {
    if (p.size() != k) throw DimensionError("ensemble members disagree on the class count");
    logsum.array() += p.array().max(kProbabilityFloor).log();
  }
  logsum /= static_cast<double>(members.size());
  return softmax(logsum);
}

RowMatrix ensemble_geomean(std::span<const RowMatrix> members) {
  if (members.empty()) throw ConfigError("ensemble needs at least one member");
  const auto& first = members.front();
  RowMatrix logsum = RowMatrix::Zero(first.rows(), first.cols());
  for (const auto& P : members) {
    if (P.rows() != first.rows() || P.cols() != first.cols()) throw DimensionError("ensemble members disagree in shape");
    logsum.array() += P.array().max(kProbabilityFloor).log();
  }
  logsum /= static_cast<double>(members.size());
  for (Eigen::Index i = 0; i < logsum.rows(); ++i) softmax_row(logsum.row(i).data(), static_cast<std::size_t>(logsum.cols()));
  return logsum;
}

Metrics evaluate(const RowMatrix& proba, std::span<const std::uint32_t> labels) {
  if (static_cast<std::size_t>(proba.rows()) != labels.size()) throw DimensionError("row and label counts differ");
  Metrics m;
  m.n = labels.size();
  if (m.n == 0) return m;
  double ce = 0.0;
  for (Eigen::Index i = 0; i < proba.rows(); ++i) {
    const auto y = labels[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(y) >= proba.cols()) throw LabelError("label outside the class range");
    Eigen::Index best = 0;
    proba.row(i).maxCoeff(&best);
    if (best != static_cast<Eigen::Index>(y)) ++m.errors;
    ce -= std::log(std::max(proba(i, y), kProbabilityFloor));
  }
  m.error_rate = static_cast<double>(m.errors) / static_cast<double>(m.n);
  m.cross_entropy = ce / static_cast<double>(m.n);
  return m;
}

}  // namespace gem
