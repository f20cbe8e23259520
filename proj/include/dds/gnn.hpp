// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <utility>
#include <vector>

#include "dds/chem.hpp"
#include "dds/rng.hpp"
#include "dds/tensor.hpp"

namespace dds {

Tensor glorot_uniform(Rng& rng, std::size_t fan_in, std::size_t fan_out);

struct GcnLayer {
  Tensor weight;  // [C_in x C_out]
  Tensor bias;    // [C_out]

  static GcnLayer init(std::size_t in, std::size_t out, Rng& rng);
};

struct GatLayer {
  // One weight [C_in x C_out] and one attention vector [2*C_out x 1]
  // per head; head outputs are averaged.
  std::vector<Tensor> head_weights;
  std::vector<Tensor> head_attention;

  std::size_t heads() const { return head_weights.size(); }
  static GatLayer init(std::size_t in, std::size_t out, std::size_t heads,
                       Rng& rng);
};

// Several molecular graphs stacked for one forward pass. Adjacency is
// block-diagonal by construction and stored per graph; the symmetric
// normalization with self-loops is computed once here and reused by
// every GCN layer on the batch.
struct GraphBatch {
  Tensor node_features;  // [N_total x C], constant
  std::vector<std::pair<std::size_t, std::size_t>> offsets;  // (start, len)
  std::vector<Tensor> adj_blocks;        // A per graph, zero diagonal
  std::vector<Tensor> norm_blocks;       // D^-1/2 (A+I) D^-1/2 per graph
  std::vector<Tensor> attention_masks;   // A+I per graph

  std::size_t num_graphs() const { return offsets.size(); }
  std::size_t total_nodes() const { return node_features.rows(); }
  // Materialized [N_total x N_total] block-diagonal matrix (tests and
  // small batches only).
  Tensor dense_adjacency() const;
};

GraphBatch batch_graphs(
    std::span<const std::pair<const MolGraph*, Tensor>> graphs);

// H' = ReLU(D^-1/2 (A+I) D^-1/2 H W + bias)
Tensor gcn_forward(const GcnLayer& layer, const GraphBatch& batch,
                   const Tensor& input);
inline Tensor gcn_forward(const GcnLayer& layer, const GraphBatch& batch) {
  return gcn_forward(layer, batch, batch.node_features);
}

// Per head: e_ij = elu(a^T [Wh_i || Wh_j]) over j in N(i) plus self,
// attention = row softmax over that set, h'_i = sum_j a_ij W h_j.
// Heads are averaged, then ELU. When `attention_out` is given it
// receives one [n_g x n_g] coefficient matrix per (head, graph),
// head-major.
Tensor gat_forward(const GatLayer& layer, const GraphBatch& batch,
                   const Tensor& input,
                   std::vector<Tensor>* attention_out = nullptr);
inline Tensor gat_forward(const GatLayer& layer, const GraphBatch& batch) {
  return gat_forward(layer, batch, batch.node_features);
}

// Per-graph, per-channel max over node rows -> [G x C].
Tensor global_max_pool(
    const Tensor& node_embeddings,
    const std::vector<std::pair<std::size_t, std::size_t>>& offsets);

}  // namespace dds
