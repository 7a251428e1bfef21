#pragma once

// Multi-annotator emotion labels: tallying, threshold single-labeling and
// Fleiss's kappa.

#include "ecstfl/core.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <istream>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace ecstfl {

inline constexpr int kDefaultAnnotators = 10;
inline constexpr int kDefaultLabelThreshold = 6;

struct EmotionDistribution {
  std::array<int, kNumClasses> counts{};
  int n_annotators = 0;

  // Validates non-negative counts summing to n_annotators.
  static EmotionDistribution from_counts(const std::array<int, kNumClasses>& counts) {
    int total = 0;
    for (int c : counts) {
      require(c >= 0, "negative annotation count");
      total += c;
    }
    require(total > 0, "annotation counts sum to zero");
    return EmotionDistribution{counts, total};
  }

  int count(Emotion e) const { return counts[static_cast<std::size_t>(class_index(e))]; }

  friend bool operator==(const EmotionDistribution&, const EmotionDistribution&) = default;
};

inline EmotionDistribution tally(const std::vector<int>& votes,
                                 int n_annotators = kDefaultAnnotators) {
  require(static_cast<int>(votes.size()) == n_annotators,
          "expected " + std::to_string(n_annotators) + " votes, got " +
              std::to_string(votes.size()));
  EmotionDistribution dist;
  dist.n_annotators = n_annotators;
  for (std::size_t i = 0; i < votes.size(); ++i) {
    if (votes[i] < 1 || votes[i] > kNumClasses) {
      throw ValidationError("vote " + std::to_string(i + 1) + " has category " +
                            std::to_string(votes[i]) + " outside 1..7");
    }
    ++dist.counts[static_cast<std::size_t>(votes[i] - 1)];
  }
  return dist;
}

// Raised when more than one category clears the threshold.
class AmbiguousLabelError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// nullopt means the clip stays unlabeled. Labels require count > r, strictly.
inline std::optional<Emotion> single_label(const EmotionDistribution& dist,
                                           int r = kDefaultLabelThreshold) {
  require(r >= 0 && r <= dist.n_annotators,
          "threshold r=" + std::to_string(r) + " outside 0.." +
              std::to_string(dist.n_annotators));
  std::optional<Emotion> label;
  for (int k = 0; k < kNumClasses; ++k) {
    if (dist.counts[static_cast<std::size_t>(k)] > r) {
      if (label) {
        throw AmbiguousLabelError("categories " + std::string(emotion_name(*label)) +
                                  " and " + std::string(kEmotionNames[k]) +
                                  " both exceed threshold r=" + std::to_string(r));
      }
      label = emotion_from_index(k + 1);
    }
  }
  return label;
}

struct AnnotatedItem {
  std::string clip_id;
  EmotionDistribution dist;
};

class AnnotatedDataset {
 public:
  void add(std::string clip_id, const EmotionDistribution& dist) {
    require(!clip_id.empty(), "empty clip_id");
    require(ids_.insert(clip_id).second, "duplicate clip_id '" + clip_id + "'");
    if (!items_.empty()) {
      require(dist.n_annotators == n_annotators(),
              "clip '" + clip_id + "' has " + std::to_string(dist.n_annotators) +
                  " annotators, expected " + std::to_string(n_annotators()));
    }
    items_.push_back({std::move(clip_id), dist});
  }

  const std::vector<AnnotatedItem>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  int n_annotators() const { return items_.empty() ? 0 : items_.front().dist.n_annotators; }

 private:
  std::vector<AnnotatedItem> items_;
  std::set<std::string> ids_;
};

// Share of all assignments that went to each category.
inline std::array<double, kNumClasses> category_proportions(const AnnotatedDataset& ds) {
  require(!ds.empty(), "category proportions of an empty dataset");
  std::array<long long, kNumClasses> totals{};
  for (const auto& item : ds.items())
    for (int k = 0; k < kNumClasses; ++k) totals[k] += item.dist.counts[k];
  const double denom = static_cast<double>(ds.size()) * ds.n_annotators();
  std::array<double, kNumClasses> p{};
  for (int k = 0; k < kNumClasses; ++k) p[k] = static_cast<double>(totals[k]) / denom;
  return p;
}

// Fraction of ordered annotator pairs that agree on this item.
inline double per_item_agreement(const EmotionDistribution& dist) {
  const long long n = dist.n_annotators;
  require(n >= 2, "pairwise agreement needs at least 2 annotators");
  long long squares = 0;
  for (int c : dist.counts) squares += static_cast<long long>(c) * c;
  return static_cast<double>(squares - n) / static_cast<double>(n * (n - 1));
}

// Expected agreement is 1: every assignment in one category, kappa is 0/0.
class DegenerateAgreementError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

struct KappaReport {
  std::size_t n_items = 0;
  int n_annotators = 0;
  std::array<double, kNumClasses> p{};
  double p_bar = 0.0;
  double pe_bar = 0.0;
  double kappa = 0.0;
  std::string band;
};

inline std::string interpret_kappa(double kappa) {
  if (std::isnan(kappa)) throw ValidationError("kappa is NaN");
  // Rounding slack so an exact 1 computed in floating point is not rejected.
  if (kappa > 1.0 + 1e-12) throw ValidationError("kappa " + std::to_string(kappa) + " exceeds 1");
  if (kappa < 0.0) return "Poor agreement";
  if (kappa <= 0.20) return "Slight agreement";
  if (kappa <= 0.40) return "Fair agreement";
  if (kappa <= 0.60) return "Moderate agreement";
  if (kappa <= 0.80) return "Substantial agreement";
  return "Almost perfect agreement";
}

inline KappaReport kappa_report(const AnnotatedDataset& ds) {
  require(!ds.empty(), "kappa of an empty dataset");
  KappaReport rep;
  rep.n_items = ds.size();
  rep.n_annotators = ds.n_annotators();
  rep.p = category_proportions(ds);

  double sum_p = 0.0;
  for (const auto& item : ds.items()) sum_p += per_item_agreement(item.dist);
  rep.p_bar = sum_p / static_cast<double>(ds.size());

  // Decide degeneracy on the integer totals, not on a rounded pe_bar.
  std::array<long long, kNumClasses> totals{};
  for (const auto& item : ds.items())
    for (int k = 0; k < kNumClasses; ++k) totals[k] += item.dist.counts[k];
  const auto nonzero = std::count_if(totals.begin(), totals.end(), [](long long t) { return t > 0; });
  if (nonzero <= 1) {
    throw DegenerateAgreementError(
        "expected agreement P_e = 1 (all assignments in one category); kappa is undefined (0/0)");
  }

  rep.pe_bar = 0.0;
  for (double pj : rep.p) rep.pe_bar += pj * pj;
  rep.kappa = (rep.p_bar - rep.pe_bar) / (1.0 - rep.pe_bar);
  rep.band = interpret_kappa(rep.kappa);
  return rep;
}

inline double fleiss_kappa(const AnnotatedDataset& ds) { return kappa_report(ds).kappa; }

inline nlohmann::json to_json(const KappaReport& rep) {
  return nlohmann::json{{"n_items", rep.n_items},   {"n_annotators", rep.n_annotators},
                        {"p", rep.p},               {"p_bar", rep.p_bar},
                        {"pe_bar", rep.pe_bar},     {"kappa", rep.kappa},
                        {"band", rep.band}};
}

namespace detail {

inline int parse_int_field(const std::string& text, std::size_t line_no, const std::string& column) {
  std::size_t pos = 0;
  int value = 0;
  try {
    value = std::stoi(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (text.empty() || pos != text.size()) {
    throw ValidationError("line " + std::to_string(line_no) + ": column " + column +
                          " is not an integer: '" + text + "'");
  }
  return value;
}

}  // namespace detail

// Reads either `clip_id,c1..c7` (tallied counts) or `clip_id,v1..vN` (raw
// votes). Every error names the offending line.
inline AnnotatedDataset read_annotations(std::istream& in) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "annotation file is empty");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);
  const auto header = detail::split_csv_line(detail::strip_cr(line));
  require(header.size() >= 2 && header[0] == "clip_id",
          "line 1: header must start with clip_id");

  bool counts_mode = header[1] == "c1";
  const std::string prefix = counts_mode ? "c" : "v";
  for (std::size_t i = 1; i < header.size(); ++i) {
    if (header[i] != prefix + std::to_string(i)) {
      throw ValidationError("line 1: expected column '" + prefix + std::to_string(i) +
                            "', found '" + header[i] + "'");
    }
  }
  if (counts_mode) {
    require(header.size() == kNumClasses + 1, "line 1: count header must be clip_id,c1,...,c7");
  } else {
    require(header[1] == "v1", "line 1: second column must be c1 or v1");
  }

  AnnotatedDataset ds;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size()) {
      throw ValidationError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields, found " +
                            std::to_string(fields.size()));
    }
    std::vector<int> values;
    for (std::size_t i = 1; i < fields.size(); ++i)
      values.push_back(detail::parse_int_field(fields[i], line_no, header[i]));
    try {
      if (counts_mode) {
        std::array<int, kNumClasses> counts{};
        std::copy(values.begin(), values.end(), counts.begin());
        ds.add(fields[0], EmotionDistribution::from_counts(counts));
      } else {
        ds.add(fields[0], tally(values, static_cast<int>(values.size())));
      }
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  require(!ds.empty(), "annotation file has no data rows");
  return ds;
}

}  // namespace ecstfl
