// SPDX-License-Identifier: Apache-2.0

#include "dds/metrics.hpp"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "dds/error.hpp"
#include "dds/rng.hpp"

namespace dds {
namespace {

// Independent oracle: direct pair counting with ties worth one half.
double roc_auc_bruteforce(const std::vector<double>& scores,
                          const std::vector<int>& labels) {
  double correct = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] == 0) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) correct += 1.0;
      else if (scores[i] == scores[j]) correct += 0.5;
    }
  }
  return correct / static_cast<double>(pairs);
}

TEST(RocAuc, PerfectRanking) {
  EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{0.1, 0.9},
                           std::vector<int>{0, 1}),
                   1.0);
}

TEST(RocAuc, HandCountedPairs) {
  std::vector<double> scores{0.1, 0.4, 0.35, 0.8};
  std::vector<int> labels{0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(roc_auc(scores, labels), 0.75);
}

TEST(RocAuc, AllTiedScoresGiveHalf) {
  std::vector<double> scores{0.5, 0.5, 0.5, 0.5};
  std::vector<int> labels{0, 1, 0, 1};
  EXPECT_DOUBLE_EQ(roc_auc(scores, labels), 0.5);
}

TEST(RocAuc, SingleClassThrows) {
  std::vector<double> scores{0.2, 0.4};
  std::vector<int> labels{1, 1};
  EXPECT_THROW(roc_auc(scores, labels), Error);
}

TEST(RocAuc, MatchesBruteForceOnRandomCases) {
  Rng rng(101);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + rng.below(49);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      // coarse grid so ties actually occur
      scores[i] = static_cast<double>(rng.below(10)) / 10.0;
      labels[i] = static_cast<int>(rng.below(2));
    }
    bool has_pos = false, has_neg = false;
    for (int l : labels) (l ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) {
      labels[0] = 1;
      labels[n - 1] = 0;
    }
    EXPECT_NEAR(roc_auc(scores, labels), roc_auc_bruteforce(scores, labels),
                1e-12);
  }
}

TEST(RocAuc, InvariantUnderMonotoneTransform) {
  Rng rng(103);
  std::vector<double> scores(40);
  std::vector<int> labels(40);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i] = rng.uniform();
    labels[i] = static_cast<int>(rng.below(2));
  }
  labels[0] = 1;
  labels[1] = 0;
  std::vector<double> transformed(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i)
    transformed[i] = std::exp(3.0 * scores[i]) + 7.0;
  EXPECT_DOUBLE_EQ(roc_auc(scores, labels), roc_auc(transformed, labels));
  EXPECT_DOUBLE_EQ(pr_auc(scores, labels), pr_auc(transformed, labels));
}

TEST(RocAuc, ClassSwapSymmetry) {
  Rng rng(107);
  std::vector<double> scores(30);
  std::vector<int> labels(30);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i] = rng.uniform();
    labels[i] = static_cast<int>(rng.below(2));
  }
  labels[0] = 1;
  labels[1] = 0;
  std::vector<double> flipped_scores(scores.size());
  std::vector<int> flipped_labels(labels.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    flipped_scores[i] = 1.0 - scores[i];
    flipped_labels[i] = 1 - labels[i];
  }
  EXPECT_NEAR(roc_auc(scores, labels), roc_auc(flipped_scores, flipped_labels),
              1e-12);
  EXPECT_DOUBLE_EQ(threshold_metrics(scores, labels).acc,
                   threshold_metrics(flipped_scores, flipped_labels).acc);
}

TEST(PrAuc, PerfectSeparation) {
  std::vector<double> scores{0.9, 0.8, 0.2, 0.1};
  std::vector<int> labels{1, 1, 0, 0};
  EXPECT_DOUBLE_EQ(pr_auc(scores, labels), 1.0);
}

TEST(PrAuc, PositiveRankedSecond) {
  std::vector<double> scores{0.9, 0.8};
  std::vector<int> labels{0, 1};
  EXPECT_DOUBLE_EQ(pr_auc(scores, labels), 0.5);
}

TEST(PrAuc, SinglePositiveRankedFirst) {
  std::vector<double> scores{0.9, 0.5, 0.4, 0.3};
  std::vector<int> labels{1, 0, 0, 0};
  EXPECT_DOUBLE_EQ(pr_auc(scores, labels), 1.0);
}

TEST(PrAuc, NoPositivesThrows) {
  std::vector<double> scores{0.2, 0.4};
  std::vector<int> labels{0, 0};
  EXPECT_THROW(pr_auc(scores, labels), Error);
}

TEST(ThresholdMetrics, HandComputedConfusion) {
  // 40 TP, 10 FN, 30 TN, 20 FP
  std::vector<double> scores;
  std::vector<int> labels;
  for (int i = 0; i < 40; ++i) { scores.push_back(0.9); labels.push_back(1); }
  for (int i = 0; i < 10; ++i) { scores.push_back(0.1); labels.push_back(1); }
  for (int i = 0; i < 30; ++i) { scores.push_back(0.1); labels.push_back(0); }
  for (int i = 0; i < 20; ++i) { scores.push_back(0.9); labels.push_back(0); }
  MetricReport r = threshold_metrics(scores, labels);
  EXPECT_EQ(r.counts.tp, 40u);
  EXPECT_EQ(r.counts.fn, 10u);
  EXPECT_EQ(r.counts.tn, 30u);
  EXPECT_EQ(r.counts.fp, 20u);
  EXPECT_DOUBLE_EQ(r.tpr, 0.8);
  EXPECT_DOUBLE_EQ(r.tnr, 0.6);
  EXPECT_DOUBLE_EQ(r.bacc, 0.7);
  EXPECT_DOUBLE_EQ(r.prec, 2.0 / 3.0);
}

TEST(ThresholdMetrics, AllCorrect) {
  std::vector<double> scores{0.9, 0.8, 0.1, 0.2};
  std::vector<int> labels{1, 1, 0, 0};
  MetricReport r = threshold_metrics(scores, labels);
  EXPECT_DOUBLE_EQ(r.acc, 1.0);
  EXPECT_DOUBLE_EQ(r.kappa, 1.0);
  EXPECT_EQ(r.counts.tp + r.counts.tn, 4u);
}

TEST(ThresholdMetrics, NoPredictedPositivesFlagsPrecision) {
  std::vector<double> scores{0.1, 0.2};
  std::vector<int> labels{1, 0};
  MetricReport r = threshold_metrics(scores, labels);
  EXPECT_DOUBLE_EQ(r.prec, 0.0);
  EXPECT_TRUE(r.degenerate_precision);
}

TEST(ThresholdMetrics, StrictInequalityAtThreshold) {
  std::vector<double> scores{0.5};
  std::vector<int> labels{1};
  MetricReport r = threshold_metrics(scores, labels);
  EXPECT_EQ(r.counts.fn, 1u);  // 0.5 is not > 0.5
}

TEST(CohenKappa, BalancedChanceAgreementIsZero) {
  ConfusionCounts c{25, 25, 25, 25};
  EXPECT_DOUBLE_EQ(cohen_kappa(c), 0.0);
}

TEST(CohenKappa, DegenerateMarginalsFlagged) {
  ConfusionCounts c{10, 0, 0, 0};
  bool degenerate = false;
  EXPECT_DOUBLE_EQ(cohen_kappa(c, &degenerate), 0.0);
  EXPECT_TRUE(degenerate);
}

TEST(CohenKappa, MatchesHandFormulaOnRandomCounts) {
  Rng rng(109);
  for (int trial = 0; trial < 100; ++trial) {
    ConfusionCounts c{rng.below(50), rng.below(50), rng.below(50),
                      rng.below(50)};
    if (c.total() == 0) c.tp = 1;
    const double n = static_cast<double>(c.total());
    const double po = (static_cast<double>(c.tp) + c.tn) / n;
    const double pe = ((c.tp + c.fp) / n) * ((c.tp + c.fn) / n) +
                      ((c.tn + c.fn) / n) * ((c.tn + c.fp) / n);
    bool degenerate = false;
    const double kappa = cohen_kappa(c, &degenerate);
    if (pe == 1.0) {
      EXPECT_TRUE(degenerate);
    } else {
      EXPECT_DOUBLE_EQ(kappa, (po - pe) / (1.0 - pe));
      EXPECT_GE(kappa, -1.0 - 1e-12);
      EXPECT_LE(kappa, 1.0 + 1e-12);
    }
  }
}

TEST(BaccIdentity, HoldsOnRandomReports) {
  Rng rng(113);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 4 + rng.below(40);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = rng.uniform();
      labels[i] = static_cast<int>(rng.below(2));
    }
    MetricReport r = threshold_metrics(scores, labels);
    EXPECT_DOUBLE_EQ(r.bacc, (r.tpr + r.tnr) / 2.0);
    const double total = static_cast<double>(r.counts.total());
    EXPECT_DOUBLE_EQ(r.acc, (r.counts.tp + r.counts.tn) / total);
  }
}

TEST(Pearson, AffineAndInverseRelations) {
  std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> y;
  for (double v : x) y.push_back(2 * v + 1);
  EXPECT_NEAR(pearson(x, y), 1.0, 1e-12);
  std::vector<double> neg;
  for (double v : x) neg.push_back(-v);
  EXPECT_NEAR(pearson(x, neg), -1.0, 1e-12);
}

TEST(Pearson, ConstantInputThrows) {
  std::vector<double> x{2, 2, 2};
  std::vector<double> y{1, 2, 3};
  EXPECT_THROW(pearson(x, y), Error);
}

}  // namespace
}  // namespace dds
