#pragma once

// Confusion matrices, per-class recall, UAR / WAR, pooled cross-validation
// metrics and a 2-D linear projection of learned features.

#include "ecstfl/core.hpp"

#include <nlohmann/json.hpp>

#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

namespace ecstfl {

// Rows are ground truth, columns are predictions.
struct ConfusionMatrix {
  std::array<std::array<long long, kNumClasses>, kNumClasses> counts{};

  long long total() const {
    long long t = 0;
    for (const auto& row : counts)
      for (long long c : row) t += c;
    return t;
  }
  long long row_sum(int k) const {
    long long t = 0;
    for (long long c : counts[static_cast<std::size_t>(k)]) t += c;
    return t;
  }
  ConfusionMatrix& operator+=(const ConfusionMatrix& other) {
    for (int r = 0; r < kNumClasses; ++r)
      for (int c = 0; c < kNumClasses; ++c) counts[r][c] += other.counts[r][c];
    return *this;
  }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

inline ConfusionMatrix confusion(const std::vector<int>& truth, const std::vector<int>& pred) {
  require(truth.size() == pred.size(), "truth has " + std::to_string(truth.size()) + " labels, predictions " +
                                           std::to_string(pred.size()));
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    require(truth[i] >= 0 && truth[i] < kNumClasses && pred[i] >= 0 && pred[i] < kNumClasses,
            "label outside 0..6 at position " + std::to_string(i));
    ++cm.counts[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(pred[i])];
  }
  return cm;
}

struct MetricReport {
  std::array<double, kNumClasses> per_class_recall{};  // 0 for excluded classes
  std::array<long long, kNumClasses> n_per_class{};
  std::vector<int> excluded_classes;  // no ground-truth samples; left out of UAR
  double uar = 0.0;                   // fractions in [0, 1]
  double war = 0.0;
};

// Classes without ground truth are excluded from the UAR mean.
inline MetricReport metrics(const ConfusionMatrix& cm) {
  const long long total = cm.total();
  require(total > 0, "metrics of an empty confusion matrix");
  MetricReport rep;
  long long correct = 0;
  double recall_sum = 0.0;
  int present = 0;
  for (int k = 0; k < kNumClasses; ++k) {
    const long long n = cm.row_sum(k);
    rep.n_per_class[k] = n;
    correct += cm.counts[k][k];
    if (n == 0) {
      rep.excluded_classes.push_back(k);
      continue;
    }
    rep.per_class_recall[k] = static_cast<double>(cm.counts[k][k]) / static_cast<double>(n);
    recall_sum += rep.per_class_recall[k];
    ++present;
  }
  rep.uar = recall_sum / present;
  rep.war = static_cast<double>(correct) / static_cast<double>(total);
  return rep;
}

// Percentage rounded to two decimals, as reported in results tables.
inline double percent2(double fraction) { return std::round(fraction * 10000.0) / 100.0; }

inline nlohmann::json to_json(const MetricReport& r) {
  std::vector<std::string> excluded;
  for (int k : r.excluded_classes) excluded.emplace_back(kEmotionNames[static_cast<std::size_t>(k)]);
  return nlohmann::json{{"uar", r.uar},
                        {"war", r.war},
                        {"uar_percent", percent2(r.uar)},
                        {"war_percent", percent2(r.war)},
                        {"per_class_recall", r.per_class_recall},
                        {"n_per_class", r.n_per_class},
                        {"excluded_classes", excluded}};
}

struct LabeledPrediction {
  std::string clip_id;
  int truth = 0;
  int pred = 0;
};

struct FoldPredictions {
  int fold = 0;
  std::vector<LabeledPrediction> items;
};

// Pools every fold's predictions into one confusion matrix. `expected_ids`
// is the full clip set the folds must cover exactly once.
inline MetricReport cv_aggregate(const std::vector<FoldPredictions>& folds, const std::vector<std::string>& expected_ids,
                                 ConfusionMatrix* pooled_out = nullptr) {
  std::set<std::string> expected(expected_ids.begin(), expected_ids.end());
  std::set<std::string> seen;
  std::vector<int> truth, pred;
  for (const auto& fold : folds) {
    for (const auto& item : fold.items) {
      require(seen.insert(item.clip_id).second,
              "clip '" + item.clip_id + "' predicted more than once (fold " + std::to_string(fold.fold) + ")");
      require(expected.count(item.clip_id) == 1, "clip '" + item.clip_id + "' is not in the evaluated set");
      truth.push_back(item.truth);
      pred.push_back(item.pred);
    }
  }
  for (const auto& id : expected) require(seen.count(id) == 1, "clip '" + id + "' has no prediction in any fold");
  const ConfusionMatrix cm = confusion(truth, pred);
  if (pooled_out) *pooled_out = cm;
  return metrics(cm);
}

inline void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm) {
  out << "truth\\pred";
  for (auto name : kEmotionNames) out << ',' << name;
  out << '\n';
  for (int r = 0; r < kNumClasses; ++r) {
    out << kEmotionNames[r];
    for (int c = 0; c < kNumClasses; ++c) out << ',' << cm.counts[r][c];
    out << '\n';
  }
}

// Centers the rows and projects them on the two leading principal
// directions. Each direction's largest-magnitude entry is made positive.
inline Matrix project_2d(const Matrix& features) {
  require(features.rows() >= 2 && features.cols() >= 2, "projection needs at least 2 rows and 2 columns");
  require(all_finite(features), "features contain NaN or Inf");
  const Eigen::RowVectorXd mean = features.colwise().mean();
  const Matrix centered = features.rowwise() - mean;
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(features.rows());
  if (cov.cwiseAbs().maxCoeff() == 0.0) throw ValidationError("projection of rank-0 features (all rows identical)");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  const Eigen::Index d = cov.rows();
  Eigen::MatrixXd basis(d, 2);
  for (int k = 0; k < 2; ++k) {
    Eigen::VectorXd v = solver.eigenvectors().col(d - 1 - k);  // eigenvalues ascend
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    basis.col(k) = v;
  }
  return centered * basis;
}

inline void write_projection_csv(std::ostream& out, const std::vector<std::string>& ids, const std::vector<int>& labels,
                                 const Matrix& coords) {
  require(ids.size() == labels.size() && static_cast<Eigen::Index>(ids.size()) == coords.rows(),
          "projection rows disagree with ids/labels");
  out << "clip_id,label,px,py\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out << ids[i] << ',' << (labels[i] + 1) << ',' << format_double(coords(r, 0)) << ','
        << format_double(coords(r, 1)) << '\n';
  }
}

}  // namespace ecstfl
