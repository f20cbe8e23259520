// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "dds/chem.hpp"
#include "dds/net.hpp"

namespace dds {

// Pearson coefficients between atom embedding rows. For one drug the
// matrix is square with unit diagonal; across two drugs it is N_A x N_B.
// Rows with no variance are flagged in `masked` and their off-diagonal
// entries set to 0.
struct AtomCorrelationMatrix {
  std::vector<std::string> row_labels;  // "<index>:<element>"
  std::vector<std::string> col_labels;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // row-major
  std::vector<bool> row_masked;
  std::vector<bool> col_masked;

  double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
};

// Node embeddings after the last graph layer, eval mode, no pooling.
Tensor atom_embeddings(const DeepDdsModel& model, const MolGraph& drug);

AtomCorrelationMatrix intra_corr(const Tensor& embeddings,
                                 const MolGraph& drug);
AtomCorrelationMatrix inter_corr(const Tensor& embeddings_a,
                                 const MolGraph& drug_a,
                                 const Tensor& embeddings_b,
                                 const MolGraph& drug_b);

// Average-linkage hierarchical clustering on distance 1 - corr; returns
// the dendrogram leaf order. Ties merge lowest-index clusters first, so
// an identity-correlation matrix comes back in input order.
std::vector<std::size_t> cluster_order(const AtomCorrelationMatrix& matrix);

// CSV with row/column labels in the first column/row.
std::string correlation_to_csv(const AtomCorrelationMatrix& matrix);

}  // namespace dds
