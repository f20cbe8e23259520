// SPDX-License-Identifier: Apache-2.0

#include "dds/gnn.hpp"

#include <cmath>

#include "dds/error.hpp"

namespace dds {

Tensor glorot_uniform(Rng& rng, std::size_t fan_in, std::size_t fan_out) {
  const double bound =
      std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> values(fan_in * fan_out);
  for (double& v : values) v = rng.uniform(-bound, bound);
  return Tensor::from({fan_in, fan_out}, std::move(values),
                      /*requires_grad=*/true);
}

GcnLayer GcnLayer::init(std::size_t in, std::size_t out, Rng& rng) {
  if (in == 0 || out == 0)
    throw Error(ErrorCode::InvalidWidth, "GCN layer width must be positive");
  GcnLayer layer;
  layer.weight = glorot_uniform(rng, in, out);
  layer.bias = Tensor::zeros({out}, /*requires_grad=*/true);
  return layer;
}

GatLayer GatLayer::init(std::size_t in, std::size_t out, std::size_t heads,
                        Rng& rng) {
  if (in == 0 || out == 0 || heads == 0)
    throw Error(ErrorCode::InvalidWidth,
                "GAT layer width and head count must be positive");
  GatLayer layer;
  for (std::size_t m = 0; m < heads; ++m) {
    layer.head_weights.push_back(glorot_uniform(rng, in, out));
    layer.head_attention.push_back(glorot_uniform(rng, 2 * out, 1));
  }
  return layer;
}

Tensor GraphBatch::dense_adjacency() const {
  const std::size_t n = total_nodes();
  Tensor dense = Tensor::zeros({n, n});
  auto v = dense.values_mut();
  for (std::size_t g = 0; g < offsets.size(); ++g) {
    const auto [start, len] = offsets[g];
    const auto block = adj_blocks[g].values();
    for (std::size_t i = 0; i < len; ++i)
      for (std::size_t j = 0; j < len; ++j)
        v[(start + i) * n + (start + j)] = block[i * len + j];
  }
  return dense;
}

GraphBatch batch_graphs(
    std::span<const std::pair<const MolGraph*, Tensor>> graphs) {
  if (graphs.empty())
    throw Error(ErrorCode::EmptyBatch, "batch_graphs needs at least one graph");

  const std::size_t width = graphs[0].second.cols();
  std::size_t total = 0;
  for (const auto& [mol, features] : graphs) {
    if (mol->num_atoms() == 0)
      throw Error(ErrorCode::EmptyGraph, "graph with no atoms");
    if (features.rank() != 2 || features.rows() != mol->num_atoms())
      throw Error(ErrorCode::WidthMismatch,
                  "feature row count must equal atom count");
    if (features.cols() != width)
      throw Error(ErrorCode::WidthMismatch,
                  "feature widths disagree across the batch");
    total += mol->num_atoms();
  }

  GraphBatch batch;
  std::vector<double> stacked;
  stacked.reserve(total * width);
  std::size_t at = 0;
  for (const auto& [mol, features] : graphs) {
    const std::size_t n = mol->num_atoms();
    batch.offsets.emplace_back(at, n);
    at += n;
    stacked.insert(stacked.end(), features.values().begin(),
                   features.values().end());

    Tensor adjacency = mol->adjacency();
    Tensor mask = Tensor::from({n, n},
                               std::vector<double>(adjacency.values().begin(),
                                                   adjacency.values().end()));
    auto mv = mask.values_mut();
    for (std::size_t i = 0; i < n; ++i) mv[i * n + i] = 1.0;

    Tensor norm = Tensor::zeros({n, n});
    {
      std::vector<double> inv_sqrt_degree(n);
      for (std::size_t i = 0; i < n; ++i) {
        double d = 0.0;
        for (std::size_t j = 0; j < n; ++j) d += mv[i * n + j];
        inv_sqrt_degree[i] = 1.0 / std::sqrt(d);
      }
      auto nv = norm.values_mut();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          nv[i * n + j] = inv_sqrt_degree[i] * mv[i * n + j] * inv_sqrt_degree[j];
    }

    batch.adj_blocks.push_back(std::move(adjacency));
    batch.attention_masks.push_back(std::move(mask));
    batch.norm_blocks.push_back(std::move(norm));
  }
  batch.node_features = Tensor::from({total, width}, std::move(stacked));
  return batch;
}

Tensor gcn_forward(const GcnLayer& layer, const GraphBatch& batch,
                   const Tensor& input) {
  if (input.rank() != 2 || input.cols() != layer.weight.rows())
    throw Error(ErrorCode::ShapeMismatch,
                "GCN input width does not match layer weight");
  Tensor propagated = block_diag_matmul(batch.norm_blocks, batch.offsets, input);
  return relu(add(matmul(propagated, layer.weight), layer.bias));
}

Tensor gat_forward(const GatLayer& layer, const GraphBatch& batch,
                   const Tensor& input, std::vector<Tensor>* attention_out) {
  if (layer.heads() == 0)
    throw Error(ErrorCode::InvalidWidth, "GAT layer has no heads");
  const std::size_t out_width = layer.head_weights[0].cols();
  if (input.rank() != 2 || input.cols() != layer.head_weights[0].rows())
    throw Error(ErrorCode::ShapeMismatch,
                "GAT input width does not match layer weight");

  const std::size_t num_graphs = batch.num_graphs();
  std::vector<Tensor> per_graph_sum(num_graphs);

  for (std::size_t m = 0; m < layer.heads(); ++m) {
    const Tensor& w = layer.head_weights[m];
    const Tensor& a = layer.head_attention[m];
    Tensor transformed = matmul(input, w);  // [N x C']
    Tensor a_self = slice_rows(a, 0, out_width);
    Tensor a_neighbor = slice_rows(a, out_width, out_width);
    Tensor score_self = matmul(transformed, a_self);          // [N x 1]
    Tensor score_neighbor = matmul(transformed, a_neighbor);  // [N x 1]

    for (std::size_t g = 0; g < num_graphs; ++g) {
      const auto [start, len] = batch.offsets[g];
      Tensor s1 = slice_rows(score_self, start, len);                // [n x 1]
      Tensor s2 = reshape(slice_rows(score_neighbor, start, len), {1, len});
      Tensor scores = elu(add(matmul(s1, Tensor::full({1, len}, 1.0)),
                              matmul(Tensor::full({len, 1}, 1.0), s2)));
      Tensor attention =
          masked_softmax_rows(scores, batch.attention_masks[g]);
      if (attention_out != nullptr) attention_out->push_back(attention);
      Tensor head_out = matmul(attention, slice_rows(transformed, start, len));
      per_graph_sum[g] = per_graph_sum[g].defined()
                             ? add(per_graph_sum[g], head_out)
                             : head_out;
    }
  }

  const double inv_heads = 1.0 / static_cast<double>(layer.heads());
  std::vector<Tensor> per_graph_out;
  per_graph_out.reserve(num_graphs);
  for (Tensor& sum_g : per_graph_sum)
    per_graph_out.push_back(elu(scale(sum_g, inv_heads)));
  return concat_rows(per_graph_out);
}

Tensor global_max_pool(
    const Tensor& node_embeddings,
    const std::vector<std::pair<std::size_t, std::size_t>>& offsets) {
  if (offsets.empty())
    throw Error(ErrorCode::EmptyBatch, "global_max_pool with no graphs");
  std::vector<Tensor> pooled;
  pooled.reserve(offsets.size());
  for (const auto& [start, len] : offsets) {
    if (len == 0) throw Error(ErrorCode::EmptyGraph, "empty graph in pool");
    pooled.push_back(max_over_rows(slice_rows(node_embeddings, start, len)));
  }
  return concat_rows(pooled);
}

}  // namespace dds
