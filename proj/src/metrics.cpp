// SPDX-License-Identifier: Apache-2.0

#include "dds/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "dds/error.hpp"

namespace dds {

namespace {

void check_lengths(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size())
    throw Error(ErrorCode::LengthMismatch, "scores and labels differ in length");
  if (scores.empty())
    throw Error(ErrorCode::LengthMismatch, "no samples");
}

}  // namespace

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores, labels);
  const std::size_t n = scores.size();
  std::size_t positives = 0;
  for (int label : labels) positives += label != 0;
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0)
    throw Error(ErrorCode::SingleClass, "ROC AUC needs both classes");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });

  // Average ranks over tied scores, then the Mann-Whitney identity.
  double positive_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] != 0) positive_rank_sum += avg_rank;
    i = j;
  }
  const double u = positive_rank_sum -
                   static_cast<double>(positives) *
                       (static_cast<double>(positives) + 1.0) / 2.0;
  return u / (static_cast<double>(positives) * static_cast<double>(negatives));
}

double pr_auc(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores, labels);
  std::size_t positives = 0;
  for (int label : labels) positives += label != 0;
  if (positives == 0)
    throw Error(ErrorCode::NoPositives, "PR AUC needs a positive sample");

  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });

  double area = 0.0;
  double prev_recall = 0.0;
  std::size_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] != 0)
        ++tp;
      else
        ++fp;
    }
    const double recall = static_cast<double>(tp) / static_cast<double>(positives);
    const double precision =
        static_cast<double>(tp) / static_cast<double>(tp + fp);
    area += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  return area;
}

MetricReport threshold_metrics(std::span<const double> scores,
                               std::span<const int> labels, double threshold) {
  check_lengths(scores, labels);
  MetricReport report;
  ConfusionCounts& c = report.counts;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] > threshold;
    const bool actual = labels[i] != 0;
    if (predicted && actual) ++c.tp;
    else if (predicted && !actual) ++c.fp;
    else if (!predicted && actual) ++c.fn;
    else ++c.tn;
  }
  const double total = static_cast<double>(c.total());
  report.acc = static_cast<double>(c.tp + c.tn) / total;
  report.tpr = (c.tp + c.fn) == 0
                   ? 0.0
                   : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  report.tnr = (c.tn + c.fp) == 0
                   ? 0.0
                   : static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
  report.bacc = (report.tpr + report.tnr) / 2.0;
  if (c.tp + c.fp == 0) {
    report.prec = 0.0;
    report.degenerate_precision = true;
  } else {
    report.prec = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  }
  report.kappa = cohen_kappa(c, &report.degenerate_kappa);
  return report;
}

double cohen_kappa(const ConfusionCounts& c, bool* degenerate) {
  const double total = static_cast<double>(c.total());
  if (c.total() == 0)
    throw Error(ErrorCode::LengthMismatch, "kappa of empty counts");
  const double observed = static_cast<double>(c.tp + c.tn) / total;
  const double expected = ((c.tp + c.fp) / total) * ((c.tp + c.fn) / total) +
                          ((c.tn + c.fn) / total) * ((c.tn + c.fp) / total);
  if (degenerate != nullptr) *degenerate = false;
  if (expected == 1.0) {
    if (degenerate != nullptr) *degenerate = true;
    return 0.0;
  }
  return (observed - expected) / (1.0 - expected);
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw Error(ErrorCode::LengthMismatch,
                "pearson needs two equal-length samples of size >= 2");
  const double n = static_cast<double>(x.size());
  double mean_x = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mean_x += x[i];
    mean_y += y[i];
  }
  mean_x /= n;
  mean_y /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mean_x;
    const double dy = y[i] - mean_y;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  const double var_x = sxx / (n - 1.0);
  const double var_y = syy / (n - 1.0);
  if (var_x <= 1e-12 || var_y <= 1e-12)
    throw Error(ErrorCode::ZeroVariance, "pearson input has no variance");
  return sxy / std::sqrt(sxx * syy);
}

MetricReport evaluate(std::span<const double> scores,
                      std::span<const int> labels, double threshold) {
  MetricReport report = threshold_metrics(scores, labels, threshold);
  report.roc_auc = roc_auc(scores, labels);
  report.pr_auc = pr_auc(scores, labels);
  return report;
}

std::string metric_report_to_json(const MetricReport& report) {
  nlohmann::json doc{
      {"roc_auc", report.roc_auc},
      {"pr_auc", report.pr_auc},
      {"acc", report.acc},
      {"bacc", report.bacc},
      {"prec", report.prec},
      {"tpr", report.tpr},
      {"tnr", report.tnr},
      {"kappa", report.kappa},
      {"counts",
       {{"tp", report.counts.tp},
        {"fp", report.counts.fp},
        {"tn", report.counts.tn},
        {"fn", report.counts.fn}}},
      {"degenerate_precision", report.degenerate_precision},
      {"degenerate_kappa", report.degenerate_kappa}};
  return doc.dump(2);
}

std::string metric_report_csv_header() {
  return "roc_auc,pr_auc,acc,bacc,prec,tpr,tnr,kappa,tp,fp,tn,fn";
}

std::string metric_report_csv_row(const MetricReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << report.roc_auc << ',' << report.pr_auc << ',' << report.acc << ','
      << report.bacc << ',' << report.prec << ',' << report.tpr << ','
      << report.tnr << ',' << report.kappa << ',' << report.counts.tp << ','
      << report.counts.fp << ',' << report.counts.tn << ','
      << report.counts.fn;
  return out.str();
}

}  // namespace dds
