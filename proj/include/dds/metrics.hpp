// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>

namespace dds {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
};

struct MetricReport {
  double roc_auc = 0.0;
  double pr_auc = 0.0;
  double acc = 0.0;
  double bacc = 0.0;
  double prec = 0.0;
  double tpr = 0.0;
  double tnr = 0.0;
  double kappa = 0.0;
  ConfusionCounts counts;
  bool degenerate_precision = false;  // no predicted positives
  bool degenerate_kappa = false;      // chance agreement is 1
};

// Mann-Whitney form: fraction of (positive, negative) pairs ranked
// correctly, ties counting one half. Throws SingleClass when only one
// label value is present.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

// Average precision: sum over descending-score thresholds of
// (R_k - R_{k-1}) * P_k, tied scores handled as one threshold. Throws
// NoPositives when no positive labels exist.
double pr_auc(std::span<const double> scores, std::span<const int> labels);

// Confusion-matrix metrics at `score > threshold`. Fills everything in
// the report except the ranking metrics.
MetricReport threshold_metrics(std::span<const double> scores,
                               std::span<const int> labels,
                               double threshold = 0.5);

double cohen_kappa(const ConfusionCounts& counts, bool* degenerate = nullptr);

// Sample Pearson correlation; throws ZeroVariance when either input has
// variance <= 1e-12.
double pearson(std::span<const double> x, std::span<const double> y);

// All eight metrics of the evaluation protocol in one report.
MetricReport evaluate(std::span<const double> scores,
                      std::span<const int> labels, double threshold = 0.5);

std::string metric_report_to_json(const MetricReport& report);
// CSV row form for cross-fold aggregation.
std::string metric_report_csv_header();
std::string metric_report_csv_row(const MetricReport& report);

}  // namespace dds
