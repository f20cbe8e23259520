// SPDX-License-Identifier: Apache-2.0

#include "dds/interpret.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dds/error.hpp"
#include "dds/gnn.hpp"

namespace dds {

namespace {

std::vector<std::string> atom_labels(const MolGraph& drug) {
  std::vector<std::string> labels;
  labels.reserve(drug.num_atoms());
  for (std::size_t i = 0; i < drug.num_atoms(); ++i)
    labels.push_back(std::to_string(i) + ":" + drug.atoms[i].element);
  return labels;
}

struct RowStats {
  std::vector<double> centered;  // row minus its mean
  double norm = 0.0;             // sqrt(sum of squared deviations)
  bool masked = false;
};

std::vector<RowStats> center_rows(const Tensor& embeddings) {
  const std::size_t n = embeddings.rows(), w = embeddings.cols();
  if (w < 2)
    throw Error(ErrorCode::WidthMismatch,
                "correlations need embedding width >= 2");
  std::vector<RowStats> stats(n);
  for (std::size_t i = 0; i < n; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < w; ++j) mean += embeddings.at(i, j);
    mean /= static_cast<double>(w);
    RowStats& row = stats[i];
    row.centered.resize(w);
    double ss = 0.0;
    for (std::size_t j = 0; j < w; ++j) {
      row.centered[j] = embeddings.at(i, j) - mean;
      ss += row.centered[j] * row.centered[j];
    }
    row.norm = std::sqrt(ss);
    row.masked = ss / static_cast<double>(w - 1) <= 1e-12;
  }
  return stats;
}

double row_correlation(const RowStats& a, const RowStats& b) {
  double dot = 0.0;
  for (std::size_t j = 0; j < a.centered.size(); ++j)
    dot += a.centered[j] * b.centered[j];
  return dot / (a.norm * b.norm);
}

}  // namespace

Tensor atom_embeddings(const DeepDdsModel& model, const MolGraph& drug) {
  if (!drug.hydrogens_assigned)
    throw Error(ErrorCode::HydrogensNotAssigned,
                "atom embeddings need a prepared graph");
  NoGrad inference;
  Tensor features = featurize(
      drug, std::span<const std::string>(model.featurizer_vocab));
  std::pair<const MolGraph*, Tensor> one{&drug, features};
  GraphBatch batch = batch_graphs(std::span(&one, 1));
  return encode_drug_nodes(model, batch);
}

AtomCorrelationMatrix intra_corr(const Tensor& embeddings,
                                 const MolGraph& drug) {
  const std::size_t n = embeddings.rows();
  if (n < 2)
    throw Error(ErrorCode::EmptyGraph,
                "intra-drug correlation needs at least two atoms");
  const auto stats = center_rows(embeddings);

  AtomCorrelationMatrix out;
  out.rows = out.cols = n;
  out.row_labels = out.col_labels = atom_labels(drug);
  out.values.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    out.row_masked.push_back(stats[i].masked);
    out.col_masked.push_back(stats[i].masked);
  }
  for (std::size_t i = 0; i < n; ++i) {
    out.values[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      double r = 0.0;
      if (!stats[i].masked && !stats[j].masked)
        r = row_correlation(stats[i], stats[j]);
      out.values[i * n + j] = r;
      out.values[j * n + i] = r;
    }
  }
  return out;
}

AtomCorrelationMatrix inter_corr(const Tensor& embeddings_a,
                                 const MolGraph& drug_a,
                                 const Tensor& embeddings_b,
                                 const MolGraph& drug_b) {
  if (embeddings_a.cols() != embeddings_b.cols())
    throw Error(ErrorCode::WidthMismatch,
                "embedding widths disagree across drugs");
  const auto stats_a = center_rows(embeddings_a);
  const auto stats_b = center_rows(embeddings_b);

  AtomCorrelationMatrix out;
  out.rows = embeddings_a.rows();
  out.cols = embeddings_b.rows();
  out.row_labels = atom_labels(drug_a);
  out.col_labels = atom_labels(drug_b);
  for (const RowStats& s : stats_a) out.row_masked.push_back(s.masked);
  for (const RowStats& s : stats_b) out.col_masked.push_back(s.masked);
  out.values.assign(out.rows * out.cols, 0.0);
  for (std::size_t i = 0; i < out.rows; ++i)
    for (std::size_t j = 0; j < out.cols; ++j)
      if (!stats_a[i].masked && !stats_b[j].masked)
        out.values[i * out.cols + j] = row_correlation(stats_a[i], stats_b[j]);
  return out;
}

std::vector<std::size_t> cluster_order(const AtomCorrelationMatrix& matrix) {
  if (matrix.rows != matrix.cols)
    throw Error(ErrorCode::ShapeMismatch, "cluster_order needs a square matrix");
  const std::size_t n = matrix.rows;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (std::fabs(matrix.at(i, j) - matrix.at(j, i)) > 1e-9)
        throw Error(ErrorCode::ShapeMismatch,
                    "cluster_order needs a symmetric matrix");
  if (n == 1) return {0};

  struct Cluster {
    std::vector<std::size_t> leaves;
    bool alive = true;
  };
  std::vector<Cluster> clusters(n);
  for (std::size_t i = 0; i < n; ++i) clusters[i].leaves = {i};

  // Pairwise average-linkage distances on 1 - corr, updated in place.
  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      dist[i][j] = 1.0 - matrix.at(i, j);

  std::vector<std::size_t> alive;
  for (std::size_t i = 0; i < n; ++i) alive.push_back(i);

  while (alive.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t x = 0; x < alive.size(); ++x) {
      for (std::size_t y = x + 1; y < alive.size(); ++y) {
        const std::size_t i = alive[x], j = alive[y];
        double d = 0.0;
        for (std::size_t a : clusters[i].leaves)
          for (std::size_t b : clusters[j].leaves) d += dist[a][b];
        d /= static_cast<double>(clusters[i].leaves.size() *
                                 clusters[j].leaves.size());
        if (d < best) {  // strict: earliest (i, j) wins ties
          best = d;
          bi = i;
          bj = j;
        }
      }
    }
    // merge bj into bi, preserving left-to-right leaf order
    clusters[bi].leaves.insert(clusters[bi].leaves.end(),
                               clusters[bj].leaves.begin(),
                               clusters[bj].leaves.end());
    clusters[bj].alive = false;
    alive.erase(std::remove(alive.begin(), alive.end(), bj), alive.end());
  }
  return clusters[alive.front()].leaves;
}

std::string correlation_to_csv(const AtomCorrelationMatrix& matrix) {
  std::ostringstream out;
  out.precision(17);
  for (const std::string& label : matrix.col_labels) out << ',' << label;
  out << '\n';
  for (std::size_t i = 0; i < matrix.rows; ++i) {
    out << matrix.row_labels[i];
    for (std::size_t j = 0; j < matrix.cols; ++j) out << ',' << matrix.at(i, j);
    out << '\n';
  }
  return out.str();
}

}  // namespace dds
