#pragma once

// Batch losses over final-hidden-layer features, each returning the value and
// its analytic gradient.
//
// The expression-clustered loss is a ratio of class-frequency weighted
// distances over ordered pairs i != j of the batch:
//
//            sum_{same label}  ||x_i - x_j|| / N(x_i)
//   L  =  -----------------------------------------------
//            sum_{diff label}  ||x_i - x_j|| / N(x_j)
//
// where N(x) is the number of batch rows sharing x's label (x included).
// Batches holding a single label have no inter-class pairs; they are flagged
// `skipped` and contribute no gradient.

#include "ecstfl/core.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <vector>

namespace ecstfl {

struct FeatureBatch {
  Matrix features;          // n x d, row i is x_i
  std::vector<int> labels;  // n class indices

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
};

struct LossResult {
  double value = 0.0;
  Matrix grad;  // same shape as the differentiated input
  bool skipped = false;
};

// Cross-class features all coincide, so the denominator is exactly zero.
class CollapsedFeaturesError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

inline void validate(const FeatureBatch& batch) {
  require(batch.size() >= 1 && batch.dim() >= 1, "feature batch must be non-empty");
  require(static_cast<Eigen::Index>(batch.labels.size()) == batch.size(),
          "feature batch has " + std::to_string(batch.size()) + " rows but " +
              std::to_string(batch.labels.size()) + " labels");
  require(all_finite(batch.features), "feature batch contains NaN or Inf");
}

inline std::size_t distinct_labels(std::span<const int> labels) {
  std::vector<int> sorted(labels.begin(), labels.end());
  std::sort(sorted.begin(), sorted.end());
  return static_cast<std::size_t>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
}

inline LossResult ec_stfl_loss(const FeatureBatch& batch) {
  validate(batch);
  const Eigen::Index n = batch.size();
  require(n >= 2, "expression-clustered loss needs at least 2 samples");

  LossResult out;
  out.grad = Matrix::Zero(n, batch.dim());
  if (distinct_labels(batch.labels) < 2) {
    // Undefined ratio; reported as 0 and never backpropagated.
    out.skipped = true;
    return out;
  }

  std::map<int, double> class_size;
  for (int y : batch.labels) class_size[y] += 1.0;
  std::vector<double> inv_n(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) inv_n[i] = 1.0 / class_size[batch.labels[i]];

  // Visit unordered pairs once. A same-class pair counts twice in the
  // numerator with weight 1/N; a cross pair {i, j} enters the denominator as
  // d/N_j + d/N_i.
  double intra = 0.0;
  double inter = 0.0;
  Matrix g_intra = Matrix::Zero(n, batch.dim());
  Matrix g_inter = Matrix::Zero(n, batch.dim());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const Eigen::RowVectorXd diff = batch.features.row(i) - batch.features.row(j);
      const double dist = diff.norm();
      const bool same = batch.labels[i] == batch.labels[j];
      const double weight = same ? 2.0 * inv_n[i] : inv_n[i] + inv_n[j];
      (same ? intra : inter) += weight * dist;
      if (dist > 0.0) {
        Matrix& g = same ? g_intra : g_inter;
        const Eigen::RowVectorXd unit = (weight / dist) * diff;
        g.row(i) += unit;
        g.row(j) -= unit;
      }
    }
  }

  if (inter == 0.0) {
    throw CollapsedFeaturesError(
        "all inter-class feature distances are zero; the loss denominator vanishes");
  }
  out.value = intra / inter;
  out.grad = (g_intra - out.value * g_inter) / inter;
  return out;
}

// Loss value alone, accumulated in long double. Used by the gradient check:
// near-zero gradient entries are smaller than the rounding noise of a
// double-precision difference quotient.
inline long double ec_stfl_value_extended(const FeatureBatch& batch) {
  std::map<int, long double> class_size;
  for (int y : batch.labels) class_size[y] += 1.0L;
  long double intra = 0.0L, inter = 0.0L;
  for (Eigen::Index i = 0; i < batch.size(); ++i) {
    for (Eigen::Index j = i + 1; j < batch.size(); ++j) {
      long double sq = 0.0L;
      for (Eigen::Index f = 0; f < batch.dim(); ++f) {
        const long double d = static_cast<long double>(batch.features(i, f)) - batch.features(j, f);
        sq += d * d;
      }
      const long double dist = std::sqrt(sq);
      const long double ni = class_size[batch.labels[i]], nj = class_size[batch.labels[j]];
      if (batch.labels[i] == batch.labels[j]) {
        intra += 2.0L * dist / ni;
      } else {
        inter += dist / ni + dist / nj;
      }
    }
  }
  return intra / inter;
}

// Max entrywise relative error between the analytic gradient and central
// finite differences. The quotient is taken over the step actually
// representable in x. The denominator is floored at 1e-8 so entries whose
// true gradient is (near) zero compare absolutely.
template <typename ValueFn>
double max_relative_error(const Matrix& x, const Matrix& analytic, double epsilon, ValueFn&& value_at) {
  using Real = decltype(value_at(x));
  Matrix probe = x;
  double worst = 0.0;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const double saved = probe(r, c);
      const double hi = saved + epsilon, lo = saved - epsilon;
      probe(r, c) = hi;
      const Real up = value_at(probe);
      probe(r, c) = lo;
      const Real down = value_at(probe);
      probe(r, c) = saved;
      const auto numeric = static_cast<double>((up - down) / (static_cast<Real>(hi) - static_cast<Real>(lo)));
      const double a = analytic(r, c);
      const double scale = std::max({std::abs(a), std::abs(numeric), 1e-8});
      worst = std::max(worst, std::abs(a - numeric) / scale);
    }
  }
  return worst;
}

inline double ec_stfl_grad_check(const FeatureBatch& batch, double epsilon) {
  require(epsilon >= 1e-7 && epsilon <= 1e-4, "epsilon must lie in [1e-7, 1e-4]");
  const LossResult analytic = ec_stfl_loss(batch);
  if (analytic.skipped) throw ValidationError("gradient check on a skipped (single-label) batch");
  FeatureBatch probe = batch;
  return max_relative_error(batch.features, analytic.grad, epsilon, [&](const Matrix& x) {
    probe.features = x;
    return ec_stfl_value_extended(probe);
  });
}

// Mean negative log-softmax of the true class. grad is with respect to logits.
inline LossResult softmax_xent(const Matrix& logits, std::span<const int> labels) {
  const Eigen::Index n = logits.rows();
  require(n >= 1 && logits.cols() >= 1, "logits must be non-empty");
  require(static_cast<Eigen::Index>(labels.size()) == n, "logits/labels length mismatch");
  require(all_finite(logits), "logits contain NaN or Inf");

  LossResult out;
  out.grad.resize(n, logits.cols());
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    require(y >= 0 && y < logits.cols(), "label " + std::to_string(y) + " outside logit range");
    const double top = logits.row(i).maxCoeff();
    const Eigen::RowVectorXd shifted = logits.row(i).array() - top;
    const Eigen::RowVectorXd e = shifted.array().exp();
    const double z = e.sum();
    total += std::log(z) - shifted(y);
    out.grad.row(i) = e / z;
    out.grad(i, y) -= 1.0;
  }
  out.value = total / static_cast<double>(n);
  out.grad /= static_cast<double>(n);
  return out;
}

struct ClassCenters {
  Matrix centers;             // kNumClasses x d
  double update_rate = 0.5;   // in (0, 1]

  static ClassCenters zeros(Eigen::Index dim, double update_rate = 0.5) {
    require(update_rate > 0.0 && update_rate <= 1.0, "center update rate must lie in (0, 1]");
    return ClassCenters{Matrix::Zero(kNumClasses, dim), update_rate};
  }
};

// value = (1/2n) sum ||x_i - c_{y_i}||^2, grad = (x_i - c_{y_i}) / n.
// Afterwards every center present in the batch moves by
//   c_j -= rate * sum_{y_i = j} (c_j - x_i) / (1 + n_j).
inline LossResult center_loss(const FeatureBatch& batch, ClassCenters& centers) {
  validate(batch);
  require(centers.centers.cols() == batch.dim(), "center dimension mismatch");
  const Eigen::Index n = batch.size();

  LossResult out;
  out.grad.resize(n, batch.dim());
  Matrix delta = Matrix::Zero(centers.centers.rows(), batch.dim());
  std::vector<double> members(static_cast<std::size_t>(centers.centers.rows()), 0.0);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = batch.labels[static_cast<std::size_t>(i)];
    require(y >= 0 && y < centers.centers.rows(), "label outside center range");
    const Eigen::RowVectorXd diff = batch.features.row(i) - centers.centers.row(y);
    total += diff.squaredNorm();
    out.grad.row(i) = diff / static_cast<double>(n);
    delta.row(y) -= diff;
    members[static_cast<std::size_t>(y)] += 1.0;
  }
  out.value = total / (2.0 * static_cast<double>(n));

  for (Eigen::Index k = 0; k < centers.centers.rows(); ++k) {
    if (members[static_cast<std::size_t>(k)] > 0.0)
      centers.centers.row(k) -= centers.update_rate * delta.row(k) / (1.0 + members[static_cast<std::size_t>(k)]);
  }
  return out;
}

inline constexpr double kDefaultLambda = 10.0;
inline constexpr double kDefaultCenterCoef = 1e-4;

struct JointLossResult {
  double value = 0.0;      // L_s + lambda * aux
  double softmax = 0.0;    // L_s
  double auxiliary = 0.0;  // unweighted auxiliary term
  bool skipped = false;    // auxiliary gradient suppressed
  Matrix grad_logits;      // dL/dlogits
  Matrix grad_features;    // direct dL/dfeatures from the auxiliary term
};

// L = L_s + lambda * L_ec. The softmax gradient is returned with respect to
// the logits (the caller routes it through its classifier); the clustered
// term's gradient lands on the features directly.
inline JointLossResult joint_loss(const FeatureBatch& batch, const Matrix& logits, double lambda = kDefaultLambda) {
  require(lambda >= 0.0, "lambda must be non-negative");
  validate(batch);
  require(logits.rows() == batch.size(), "logits/features row mismatch");

  const LossResult soft = softmax_xent(logits, batch.labels);
  JointLossResult out;
  out.softmax = soft.value;
  out.grad_logits = soft.grad;
  out.grad_features = Matrix::Zero(batch.size(), batch.dim());

  out.value = soft.value;
  if (lambda == 0.0) return out;
  if (batch.size() < 2 || distinct_labels(batch.labels) < 2) {
    out.skipped = true;
    return out;
  }
  const LossResult ec = ec_stfl_loss(batch);
  out.auxiliary = ec.value;
  out.value = soft.value + lambda * ec.value;
  out.grad_features = lambda * ec.grad;
  return out;
}

}  // namespace ecstfl
