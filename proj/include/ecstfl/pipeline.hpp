#pragma once

// Fold-level experiment orchestration shared by the CLI and the test suites.

#include "ecstfl/data.hpp"
#include "ecstfl/eval.hpp"
#include "ecstfl/model.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace ecstfl {

// Runs fn(0..n-1) on up to `jobs` threads. Results must be written to
// per-index slots; the first exception is rethrown after all workers join.
inline void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  const unsigned count = static_cast<unsigned>(std::min<std::size_t>(jobs, n));
  for (unsigned w = 0; w < count; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (error) std::rethrow_exception(error);
}

inline unsigned default_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

struct FoldSplit {
  std::vector<ClipSequence> train;
  std::vector<ClipSequence> test;
};

// Fold `fold` is the test set; every other fold trains.
inline FoldSplit split_fold(const std::vector<ClipSequence>& clips, const FoldAssignment& folds, int fold) {
  require(fold >= 1 && fold <= folds.k, "fold " + std::to_string(fold) + " outside 1.." + std::to_string(folds.k));
  FoldSplit s;
  for (const auto& clip : clips) (folds.fold(clip.clip_id) == fold ? s.test : s.train).push_back(clip);
  require(!s.train.empty(), "fold " + std::to_string(fold) + " leaves no training clips");
  require(!s.test.empty(), "fold " + std::to_string(fold) + " has no test clips");
  return s;
}

struct FoldRun {
  int fold = 0;
  TrainResult trained;
  FoldPredictions predictions;
  Matrix test_features;
  MetricReport report;
};

inline FoldRun evaluate_fold(const EncoderParams& params, const std::vector<ClipSequence>& test, int fold) {
  FoldRun run;
  run.fold = fold;
  const Predictions p = predict(params, test);
  run.predictions.fold = fold;
  std::vector<int> truth;
  for (std::size_t i = 0; i < test.size(); ++i) {
    require(test[i].label.has_value(), "test clip " + test[i].clip_id + " has no label");
    run.predictions.items.push_back({test[i].clip_id, *test[i].label, p.predicted[i]});
    truth.push_back(*test[i].label);
  }
  run.test_features = p.features;
  run.report = metrics(confusion(truth, p.predicted));
  return run;
}

// `clips` must already be filtered and aligned.
inline FoldRun run_fold(const std::vector<ClipSequence>& clips, const FoldAssignment& folds, int fold,
                        const TrainConfig& cfg) {
  const FoldSplit split = split_fold(clips, folds, fold);
  TrainResult trained = train(split.train, cfg);
  FoldRun run = evaluate_fold(trained.params, split.test, fold);
  run.trained = std::move(trained);
  return run;
}

struct CrossValidation {
  std::vector<FoldRun> folds;
  ConfusionMatrix pooled_confusion;
  MetricReport pooled;
};

inline CrossValidation cross_validate(const std::vector<ClipSequence>& clips, const FoldAssignment& folds,
                                      const TrainConfig& cfg, unsigned jobs = 1) {
  CrossValidation cv;
  cv.folds.resize(static_cast<std::size_t>(folds.k));
  parallel_for(cv.folds.size(), jobs, [&](std::size_t i) {
    cv.folds[i] = run_fold(clips, folds, static_cast<int>(i) + 1, cfg);
  });
  std::vector<FoldPredictions> preds;
  for (const auto& f : cv.folds) preds.push_back(f.predictions);
  std::vector<std::string> ids;
  for (const auto& c : clips) ids.push_back(c.clip_id);
  cv.pooled = cv_aggregate(preds, ids, &cv.pooled_confusion);
  return cv;
}

// Mean intra/inter distance ratio of held-out features, measured with the
// clustered loss itself over the whole evaluation set.
inline double feature_distance_ratio(const Matrix& features, const std::vector<int>& labels) {
  return ec_stfl_loss(FeatureBatch{features, labels}).value;
}

}  // namespace ecstfl
