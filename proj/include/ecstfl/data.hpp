#pragma once

// Synthetic clip sequences, usable-frame filtering, temporal alignment to a
// fixed length and the k-fold split protocol.

#include "ecstfl/core.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

namespace ecstfl {

struct ClipSequence {
  std::string clip_id;
  std::optional<int> label;  // class index 0..6
  Matrix frames;             // T x F
  std::vector<bool> usable;  // length T

  Eigen::Index length() const { return frames.rows(); }
  Eigen::Index usable_count() const {
    return static_cast<Eigen::Index>(std::count(usable.begin(), usable.end(), true));
  }
  double usable_rate() const {
    return usable.empty() ? 0.0 : static_cast<double>(usable_count()) / static_cast<double>(usable.size());
  }
};

// Percent column of the single-labeled benchmark, happy..fear.
inline constexpr std::array<double, kNumClasses> kDefaultClassProportions = {
    0.2063, 0.1665, 0.2246, 0.1848, 0.1242, 0.0122, 0.0814};

struct DatasetSpec {
  std::array<double, kNumClasses> class_proportions = kDefaultClassProportions;
  int n_clips = 700;
  int feature_dim = 16;
  double cluster_separation = 4.0;
  double noise_scale = 3.0;
  int min_length = 8;
  int max_length = 32;
  double dropout_rate = 0.1;
  std::uint64_t seed = 1;

  void validate() const {
    double total = 0.0;
    for (double p : class_proportions) {
      require(p >= 0.0 && std::isfinite(p), "class proportions must be non-negative");
      total += p;
    }
    require(std::abs(total - 1.0) <= 1e-9, "class proportions must sum to 1 (got " + format_double(total) + ")");
    require(n_clips >= 1, "n_clips must be positive");
    require(feature_dim >= 1, "feature_dim must be positive");
    require(cluster_separation >= 0.0, "cluster separation must be non-negative");
    require(noise_scale >= 0.0, "noise scale must be non-negative");
    require(min_length >= 1 && min_length <= max_length, "length range must satisfy 1 <= min <= max");
    require(dropout_rate >= 0.0 && dropout_rate <= 1.0, "dropout rate must lie in [0, 1]");
  }
};

inline nlohmann::json to_json(const DatasetSpec& s) {
  return nlohmann::json{{"class_proportions", s.class_proportions},
                        {"n_clips", s.n_clips},
                        {"feature_dim", s.feature_dim},
                        {"cluster_separation", s.cluster_separation},
                        {"noise_scale", s.noise_scale},
                        {"length_range", {s.min_length, s.max_length}},
                        {"dropout_rate", s.dropout_rate},
                        {"seed", s.seed}};
}

// Largest-remainder apportionment; ties in the remainder go to the lower
// class index.
inline std::array<int, kNumClasses> apportion(const std::array<double, kNumClasses>& proportions, int total) {
  std::array<int, kNumClasses> counts{};
  std::array<double, kNumClasses> remainder{};
  int assigned = 0;
  for (int k = 0; k < kNumClasses; ++k) {
    const double quota = proportions[k] * total;
    counts[k] = static_cast<int>(std::floor(quota));
    remainder[k] = quota - counts[k];
    assigned += counts[k];
  }
  std::array<int, kNumClasses> order{};
  for (int k = 0; k < kNumClasses; ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return remainder[a] > remainder[b]; });
  for (int i = 0; assigned < total; ++i, ++assigned) ++counts[order[static_cast<std::size_t>(i % kNumClasses)]];
  return counts;
}

inline std::string clip_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "clip_%05zu", index);
  return buf;
}

// Each class owns an affine trajectory template u_c + tau * v_c over
// normalized time tau in [0, 1], with |u_c| = |v_c| = cluster_separation.
// A clip adds a clip-level offset and per-frame jitter, both scaled by
// noise_scale. Every clip draws from its own stream derived from
// (seed, clip index).
inline std::vector<ClipSequence> synth_generate(const DatasetSpec& spec) {
  spec.validate();
  const auto counts = apportion(spec.class_proportions, spec.n_clips);
  for (int k = 0; k < kNumClasses; ++k) {
    if (spec.class_proportions[k] > 0.0 && counts[k] == 0) {
      throw ValidationError("class " + std::string(kEmotionNames[k]) + " rounds to 0 clips at n_clips=" +
                            std::to_string(spec.n_clips) + "; use a larger n_clips");
    }
  }

  const Eigen::Index dim = spec.feature_dim;
  auto template_rng = make_rng(spec.seed, Stream::data, 0);
  Matrix base(kNumClasses, dim), slope(kNumClasses, dim);
  if (dim >= 2 * kNumClasses) {
    // Seeded orthonormal directions: every pair of class templates sits at
    // the same distance, so difficulty does not depend on the seed.
    Eigen::MatrixXd g(dim, dim);
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = normal(template_rng);
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
    for (int k = 0; k < kNumClasses; ++k) {
      base.row(k) = spec.cluster_separation * q.col(k).transpose();
      slope.row(k) = spec.cluster_separation * q.col(k + kNumClasses).transpose();
    }
  } else {
    const double scale = spec.cluster_separation / std::sqrt(static_cast<double>(dim));
    for (int k = 0; k < kNumClasses; ++k) {
      for (Eigen::Index f = 0; f < dim; ++f) {
        base(k, f) = scale * normal(template_rng);
        slope(k, f) = scale * normal(template_rng);
      }
    }
  }

  std::vector<int> labels;
  for (int k = 0; k < kNumClasses; ++k) labels.insert(labels.end(), static_cast<std::size_t>(counts[k]), k);
  shuffle(labels, template_rng);

  std::vector<ClipSequence> clips(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto rng = make_rng(spec.seed, Stream::data, i + 1);
    ClipSequence& clip = clips[i];
    clip.clip_id = clip_name(i);
    clip.label = labels[i];
    const int span = spec.max_length - spec.min_length + 1;
    const Eigen::Index length = spec.min_length + static_cast<int>(rng() % static_cast<std::uint64_t>(span));
    Eigen::RowVectorXd offset(dim);
    for (Eigen::Index f = 0; f < dim; ++f) offset(f) = spec.noise_scale * normal(rng);
    clip.frames.resize(length, dim);
    clip.usable.assign(static_cast<std::size_t>(length), true);
    for (Eigen::Index t = 0; t < length; ++t) {
      const double tau = length > 1 ? static_cast<double>(t) / static_cast<double>(length - 1) : 0.0;
      for (Eigen::Index f = 0; f < dim; ++f) {
        clip.frames(t, f) = base(labels[i], f) + tau * slope(labels[i], f) + offset(f) +
                            spec.noise_scale * normal(rng);
      }
      clip.usable[static_cast<std::size_t>(t)] = uniform01(rng) >= spec.dropout_rate;
    }
  }
  return clips;
}

struct FilterReport {
  std::vector<ClipSequence> retained;
  std::vector<std::pair<std::string, double>> rejected;  // clip id, usable rate
};

// Keeps clips whose usable fraction is at least min_rate and strips their
// unusable frames.
inline FilterReport usable_rate_filter(const std::vector<ClipSequence>& clips, double min_rate = 0.5) {
  require(min_rate >= 0.0 && min_rate <= 1.0, "min usable rate must lie in [0, 1]");
  FilterReport report;
  for (const auto& clip : clips) {
    require(clip.usable.size() == static_cast<std::size_t>(clip.length()),
            "clip " + clip.clip_id + ": usable mask length differs from frame count");
    const double rate = clip.usable_rate();
    if (rate < min_rate || clip.usable_count() == 0) {
      report.rejected.emplace_back(clip.clip_id, rate);
      continue;
    }
    ClipSequence kept;
    kept.clip_id = clip.clip_id;
    kept.label = clip.label;
    kept.frames.resize(clip.usable_count(), clip.frames.cols());
    Eigen::Index row = 0;
    for (Eigen::Index t = 0; t < clip.length(); ++t)
      if (clip.usable[static_cast<std::size_t>(t)]) kept.frames.row(row++) = clip.frames.row(t);
    kept.usable.assign(static_cast<std::size_t>(row), true);
    report.retained.push_back(std::move(kept));
  }
  return report;
}

// Piecewise-linear resampling of the usable frames onto `target` evenly
// spaced points from the first to the last usable frame. Endpoints are
// reproduced exactly.
inline ClipSequence interpolate_to_length(const ClipSequence& clip, int target = kAlignedFrames) {
  require(target >= 1, "target length must be positive");
  require(clip.usable.size() == static_cast<std::size_t>(clip.length()),
          "clip " + clip.clip_id + ": usable mask length differs from frame count");
  std::vector<Eigen::Index> rows;
  for (Eigen::Index t = 0; t < clip.length(); ++t)
    if (clip.usable[static_cast<std::size_t>(t)]) rows.push_back(t);
  require(!rows.empty(), "clip " + clip.clip_id + " has no usable frames to interpolate");

  ClipSequence out;
  out.clip_id = clip.clip_id;
  out.label = clip.label;
  out.frames.resize(target, clip.frames.cols());
  out.usable.assign(static_cast<std::size_t>(target), true);
  const auto last = static_cast<Eigen::Index>(rows.size()) - 1;
  for (int j = 0; j < target; ++j) {
    const double pos = target > 1 ? static_cast<double>(j * last) / static_cast<double>(target - 1) : 0.0;
    auto lo = static_cast<Eigen::Index>(std::floor(pos));
    if (lo >= last) {
      out.frames.row(j) = clip.frames.row(rows[static_cast<std::size_t>(last)]);
      continue;
    }
    const double w = pos - static_cast<double>(lo);
    const auto a = clip.frames.row(rows[static_cast<std::size_t>(lo)]);
    const auto b = clip.frames.row(rows[static_cast<std::size_t>(lo + 1)]);
    if (w == 0.0) {
      out.frames.row(j) = a;
    } else {
      out.frames.row(j) = (1.0 - w) * a + w * b;
    }
  }
  return out;
}

// Filter then align every clip to the model's input length.
inline FilterReport preprocess(const std::vector<ClipSequence>& clips, double min_rate = 0.5) {
  FilterReport report = usable_rate_filter(clips, min_rate);
  for (auto& clip : report.retained) clip = interpolate_to_length(clip);
  return report;
}

struct FoldAssignment {
  int k = 5;
  std::map<std::string, int> fold_of_clip;  // 1..k

  int fold(const std::string& clip_id) const {
    auto it = fold_of_clip.find(clip_id);
    require(it != fold_of_clip.end(), "clip '" + clip_id + "' has no fold assignment");
    return it->second;
  }

  std::vector<std::size_t> sizes() const {
    std::vector<std::size_t> out(static_cast<std::size_t>(k), 0);
    for (const auto& [id, f] : fold_of_clip) ++out[static_cast<std::size_t>(f - 1)];
    return out;
  }
};

// Seeded shuffle then contiguous partition; the first n % k folds take one
// extra clip. With stratify, each class is shuffled separately and the
// class-ordered list is dealt round-robin, which keeps sizes within 1 too.
inline FoldAssignment kfold_split(const std::vector<std::string>& clip_ids, int k, std::uint64_t seed,
                                  const std::vector<int>* labels = nullptr) {
  require(k >= 1, "fold count must be positive");
  require(static_cast<int>(clip_ids.size()) >= k,
          "cannot split " + std::to_string(clip_ids.size()) + " clips into " + std::to_string(k) + " folds");
  std::set<std::string> unique(clip_ids.begin(), clip_ids.end());
  require(unique.size() == clip_ids.size(), "duplicate clip ids passed to kfold_split");

  auto rng = make_rng(seed, Stream::folds);
  FoldAssignment out;
  out.k = k;
  if (labels == nullptr) {
    std::vector<std::size_t> order(clip_ids.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle(order, rng);
    const std::size_t n = order.size();
    const std::size_t base = n / static_cast<std::size_t>(k);
    const std::size_t extra = n % static_cast<std::size_t>(k);
    std::size_t pos = 0;
    for (int f = 0; f < k; ++f) {
      const std::size_t size = base + (static_cast<std::size_t>(f) < extra ? 1 : 0);
      for (std::size_t i = 0; i < size; ++i) out.fold_of_clip[clip_ids[order[pos++]]] = f + 1;
    }
    return out;
  }

  require(labels->size() == clip_ids.size(), "stratified split needs one label per clip");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < clip_ids.size(); ++i) by_class[(*labels)[i]].push_back(i);
  std::size_t dealt = 0;
  for (auto& [label, members] : by_class) {
    shuffle(members, rng);
    for (std::size_t idx : members) out.fold_of_clip[clip_ids[idx]] = static_cast<int>(dealt++ % static_cast<std::size_t>(k)) + 1;
  }
  return out;
}

// ---- file formats ----------------------------------------------------------

// One row per frame: clip_id,label,t,f1..fF,usable. label is 1..7 or empty.
inline void write_dataset_csv(std::ostream& out, const std::vector<ClipSequence>& clips) {
  require(!clips.empty(), "refusing to write an empty dataset");
  const Eigen::Index dim = clips.front().frames.cols();
  out << "clip_id,label,t";
  for (Eigen::Index f = 1; f <= dim; ++f) out << ",f" << f;
  out << ",usable\n";
  for (const auto& clip : clips) {
    require(clip.frames.cols() == dim, "clips disagree on feature dimension");
    for (Eigen::Index t = 0; t < clip.length(); ++t) {
      out << clip.clip_id << ',';
      if (clip.label) out << (*clip.label + 1);
      out << ',' << t;
      for (Eigen::Index f = 0; f < dim; ++f) out << ',' << format_double(clip.frames(t, f));
      out << ',' << (clip.usable[static_cast<std::size_t>(t)] ? 1 : 0) << '\n';
    }
  }
}

inline std::vector<ClipSequence> read_dataset_csv(std::istream& in) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "dataset file is empty");
  const auto header = detail::split_csv_line(detail::strip_cr(line));
  require(header.size() >= 5 && header[0] == "clip_id" && header[1] == "label" && header[2] == "t" &&
              header.back() == "usable",
          "line 1: dataset header must be clip_id,label,t,f1..fF,usable");
  const std::size_t dim = header.size() - 4;
  for (std::size_t f = 0; f < dim; ++f)
    require(header[3 + f] == "f" + std::to_string(f + 1), "line 1: expected column f" + std::to_string(f + 1));

  std::vector<ClipSequence> clips;
  std::vector<std::vector<double>> rows;
  std::map<std::string, std::size_t> seen;
  auto flush = [&]() {
    if (clips.empty() || rows.empty()) return;
    ClipSequence& clip = clips.back();
    clip.frames.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t t = 0; t < rows.size(); ++t)
      for (std::size_t f = 0; f < dim; ++f) clip.frames(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(f)) = rows[t][f];
    rows.clear();
  };

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    const std::string where = "line " + std::to_string(line_no);
    require(fields.size() == header.size(), where + ": expected " + std::to_string(header.size()) + " fields");
    if (clips.empty() || clips.back().clip_id != fields[0]) {
      flush();
      require(seen.emplace(fields[0], clips.size()).second, where + ": rows of clip '" + fields[0] + "' are not contiguous");
      ClipSequence clip;
      clip.clip_id = fields[0];
      if (!fields[1].empty()) {
        const double label = parse_double(fields[1], where + " label");
        require(label >= 1 && label <= kNumClasses && label == std::floor(label), where + ": label outside 1..7");
        clip.label = static_cast<int>(label) - 1;
      }
      clips.push_back(std::move(clip));
    }
    ClipSequence& clip = clips.back();
    require(parse_double(fields[2], where + " t") == static_cast<double>(rows.size()),
            where + ": frame index out of sequence");
    std::vector<double> row(dim);
    for (std::size_t f = 0; f < dim; ++f) row[f] = parse_double(fields[3 + f], where + " " + header[3 + f]);
    rows.push_back(std::move(row));
    require(fields.back() == "0" || fields.back() == "1", where + ": usable must be 0 or 1");
    clip.usable.push_back(fields.back() == "1");
  }
  flush();
  require(!clips.empty(), "dataset file has no frames");
  return clips;
}

inline void write_folds_csv(std::ostream& out, const FoldAssignment& folds) {
  out << "clip_id,fold\n";
  for (const auto& [id, f] : folds.fold_of_clip) out << id << ',' << f << '\n';
}

inline FoldAssignment read_folds_csv(std::istream& in) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)) && detail::strip_cr(line) == "clip_id,fold",
          "line 1: fold header must be clip_id,fold");
  FoldAssignment folds;
  folds.k = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    const std::string where = "line " + std::to_string(line_no);
    require(fields.size() == 2, where + ": expected clip_id,fold");
    const double f = parse_double(fields[1], where + " fold");
    require(f >= 1 && f == std::floor(f), where + ": fold must be a positive integer");
    require(folds.fold_of_clip.emplace(fields[0], static_cast<int>(f)).second,
            where + ": clip '" + fields[0] + "' assigned twice");
    folds.k = std::max(folds.k, static_cast<int>(f));
  }
  require(!folds.fold_of_clip.empty(), "fold file has no rows");
  return folds;
}

}  // namespace ecstfl
