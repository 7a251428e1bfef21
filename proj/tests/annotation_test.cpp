#include "ecstfl/annotation.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace ecstfl;

namespace {

using Counts = std::array<int, kNumClasses>;

EmotionDistribution dist(Counts c) { return EmotionDistribution::from_counts(c); }

AnnotatedDataset dataset(const std::vector<Counts>& items) {
  AnnotatedDataset ds;
  for (std::size_t i = 0; i < items.size(); ++i) ds.add("c" + std::to_string(i), dist(items[i]));
  return ds;
}

// Random distribution of `raters` votes over the first `used` categories.
Counts random_counts(std::mt19937_64& rng, int raters, int used) {
  Counts c{};
  std::uniform_int_distribution<int> pick(0, used - 1);
  for (int v = 0; v < raters; ++v) ++c[static_cast<std::size_t>(pick(rng))];
  return c;
}

}  // namespace

TEST(Tally, CountsVotes) {
  EXPECT_EQ(tally({1, 1, 1, 1, 1, 1, 1, 2, 3, 4}).counts, (Counts{7, 1, 1, 1, 0, 0, 0}));
  EXPECT_EQ(tally({3, 3, 3, 3, 3, 3, 3, 3, 3, 3}).counts, (Counts{0, 0, 10, 0, 0, 0, 0}));
  EXPECT_EQ(tally({1, 2, 1, 2, 1, 2, 1, 2, 1, 2}).counts, (Counts{5, 5, 0, 0, 0, 0, 0}));
}

TEST(Tally, RejectsOutOfRangeVoteByPosition) {
  try {
    tally({1, 1, 1, 1, 8, 1, 1, 1, 1, 1});
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("vote 5"), std::string::npos) << e.what();
  }
  EXPECT_THROW(tally({0, 1, 1, 1, 1, 1, 1, 1, 1, 1}), ValidationError);
  EXPECT_THROW(tally({1, 1, 1}), ValidationError);
}

TEST(SingleLabel, StrictThreshold) {
  EXPECT_EQ(single_label(dist({7, 1, 1, 1, 0, 0, 0})), Emotion::happy);
  EXPECT_EQ(single_label(dist({6, 4, 0, 0, 0, 0, 0})), std::nullopt);
  EXPECT_EQ(single_label(dist({10, 0, 0, 0, 0, 0, 0})), Emotion::happy);
  EXPECT_EQ(single_label(dist({0, 0, 0, 0, 0, 0, 10})), Emotion::fear);
}

TEST(SingleLabel, TwoQualifyingCategoriesAreAmbiguous) {
  EXPECT_THROW(single_label(dist({5, 5, 0, 0, 0, 0, 0}), 4), AmbiguousLabelError);
}

TEST(SingleLabel, MonotoneInThresholdAndNeverAmbiguousAtDefault) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const auto d = dist(random_counts(rng, 10, 1 + trial % 7));
    EXPECT_NO_THROW(single_label(d, 6));
    bool labeled_before = true;
    for (int r = 5; r <= 10; ++r) {
      const bool labeled = single_label(d, r).has_value();
      EXPECT_FALSE(labeled && !labeled_before) << "r=" << r;
      labeled_before = labeled;
    }
  }
}

TEST(CategoryProportions, Examples) {
  auto p = category_proportions(dataset({{10, 0, 0, 0, 0, 0, 0}}));
  EXPECT_DOUBLE_EQ(p[0], 1.0);
  p = category_proportions(dataset({{10, 0, 0, 0, 0, 0, 0}, {0, 10, 0, 0, 0, 0, 0}}));
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
  p = category_proportions(dataset({{7, 1, 1, 1, 0, 0, 0}, {5, 5, 0, 0, 0, 0, 0}}));
  const std::array<double, 7> want{0.6, 0.3, 0.05, 0.05, 0, 0, 0};
  for (int k = 0; k < 7; ++k) EXPECT_NEAR(p[k], want[k], 1e-15);
  EXPECT_THROW(category_proportions(AnnotatedDataset{}), ValidationError);
}

TEST(PerItemAgreement, Examples) {
  EXPECT_DOUBLE_EQ(per_item_agreement(dist({10, 0, 0, 0, 0, 0, 0})), 1.0);
  EXPECT_NEAR(per_item_agreement(dist({5, 5, 0, 0, 0, 0, 0})), 40.0 / 90.0, 1e-15);
  EXPECT_NEAR(per_item_agreement(dist({7, 1, 1, 1, 0, 0, 0})), 42.0 / 90.0, 1e-15);
  EXPECT_THROW(per_item_agreement(dist({1, 0, 0, 0, 0, 0, 0})), ValidationError);
}

TEST(FleissKappa, UnanimousDistinctIsOne) {
  EXPECT_DOUBLE_EQ(fleiss_kappa(dataset({{10, 0, 0, 0, 0, 0, 0}, {0, 10, 0, 0, 0, 0, 0}})), 1.0);
}

TEST(FleissKappa, SingleCategoryIsDegenerate) {
  EXPECT_THROW(fleiss_kappa(dataset({{10, 0, 0, 0, 0, 0, 0}, {10, 0, 0, 0, 0, 0, 0}})),
               DegenerateAgreementError);
}

TEST(FleissKappa, MatchesRationalOracleOnFourItemCase) {
  const std::vector<Counts> items{{7, 3, 0, 0, 0, 0, 0}, {3, 7, 0, 0, 0, 0, 0}, {5, 5, 0, 0, 0, 0, 0},
                                  {10, 0, 0, 0, 0, 0, 0}};
  const double want = static_cast<double>(oracle::fleiss_kappa(items));
  EXPECT_NEAR(fleiss_kappa(dataset(items)), want, 1e-12);
}

TEST(FleissKappa, MatchesRationalOracleOnRandomData) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 25; ++trial) {
    const int raters = 2 + trial % 9;
    const int n_items = 1 + trial % 12;
    std::vector<Counts> items;
    for (int i = 0; i < n_items; ++i) items.push_back(random_counts(rng, raters, 2 + trial % 6));
    std::array<long, 7> col{};
    for (const auto& it : items)
      for (int k = 0; k < 7; ++k) col[k] += it[k];
    if (std::count_if(col.begin(), col.end(), [](long c) { return c > 0; }) < 2) continue;
    const double want = static_cast<double>(oracle::fleiss_kappa(items));
    EXPECT_NEAR(fleiss_kappa(dataset(items)), want, 1e-12) << "trial " << trial;
  }
}

TEST(FleissKappa, ReportCarriesIntermediates) {
  const auto rep = kappa_report(dataset({{10, 0, 0, 0, 0, 0, 0}, {0, 10, 0, 0, 0, 0, 0}}));
  EXPECT_EQ(rep.n_items, 2u);
  EXPECT_EQ(rep.n_annotators, 10);
  EXPECT_DOUBLE_EQ(rep.p_bar, 1.0);
  EXPECT_DOUBLE_EQ(rep.pe_bar, 0.5);
  EXPECT_EQ(rep.band, "Almost perfect agreement");
}

TEST(InterpretKappa, Bands) {
  EXPECT_EQ(interpret_kappa(0.70), "Substantial agreement");
  EXPECT_EQ(interpret_kappa(0.63), "Substantial agreement");
  EXPECT_EQ(interpret_kappa(0.85), "Almost perfect agreement");
  EXPECT_EQ(interpret_kappa(-0.1), "Poor agreement");
  EXPECT_EQ(interpret_kappa(0.0), "Slight agreement");
  EXPECT_EQ(interpret_kappa(0.20), "Slight agreement");
  EXPECT_EQ(interpret_kappa(0.21), "Fair agreement");
  EXPECT_EQ(interpret_kappa(0.5), "Moderate agreement");
  EXPECT_EQ(interpret_kappa(0.80), "Substantial agreement");
  EXPECT_EQ(interpret_kappa(1.0), "Almost perfect agreement");
  EXPECT_THROW(interpret_kappa(1.01), ValidationError);
}

TEST(AnnotatedDataset, RejectsDuplicatesAndMixedRaterCounts) {
  AnnotatedDataset ds;
  ds.add("a", dist({10, 0, 0, 0, 0, 0, 0}));
  EXPECT_THROW(ds.add("a", dist({10, 0, 0, 0, 0, 0, 0})), ValidationError);
  EXPECT_THROW(ds.add("b", dist({9, 0, 0, 0, 0, 0, 0})), ValidationError);
}

TEST(ReadAnnotations, CountAndVoteFormats) {
  std::istringstream counts("\xEF\xBB\xBF" "clip_id,c1,c2,c3,c4,c5,c6,c7\r\na,7,1,1,1,0,0,0\r\nb,0,0,0,0,0,0,10\r\n");
  const auto ds = read_annotations(counts);
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.items()[1].dist.counts[6], 10);

  std::istringstream votes("clip_id,v1,v2,v3\nx,1,1,2\n\n");
  const auto dv = read_annotations(votes);
  ASSERT_EQ(dv.size(), 1u);
  EXPECT_EQ(dv.n_annotators(), 3);
  EXPECT_EQ(dv.items()[0].dist.counts[0], 2);
}

TEST(ReadAnnotations, ErrorsNameTheLine) {
  auto error_of = [](const std::string& text) {
    std::istringstream in(text);
    try {
      read_annotations(in);
    } catch (const ValidationError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  const std::string head = "clip_id,c1,c2,c3,c4,c5,c6,c7\n";
  EXPECT_NE(error_of(head + "a,7,1,1,1,0,0,0\nb,1,x,0,0,0,0,0\n").find("line 3"), std::string::npos);
  EXPECT_NE(error_of(head + "a,7,1,1,1,0,0\n").find("line 2"), std::string::npos);
  EXPECT_NE(error_of(head + "a,7,1,1,1,0,0,0\na,7,1,1,1,0,0,0\n").find("duplicate"), std::string::npos);
  EXPECT_NE(error_of(head + "a,-1,1,1,1,0,0,8\n").find("line 2"), std::string::npos);
  EXPECT_NE(error_of("id,c1\n").find("clip_id"), std::string::npos);
  EXPECT_NE(error_of(head).find("no data"), std::string::npos);
  EXPECT_NE(error_of("clip_id,v1,v2\nq,1,9\n").find("line 2"), std::string::npos);
}
