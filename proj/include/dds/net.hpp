// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dds/data.hpp"
#include "dds/gnn.hpp"
#include "dds/rng.hpp"
#include "dds/tensor.hpp"

namespace dds {

enum class EncoderKind { gcn, gat };

const char* encoder_kind_name(EncoderKind kind);
EncoderKind encoder_kind_from_name(const std::string& name);

struct ModelConfig {
  EncoderKind encoder = EncoderKind::gcn;
  std::vector<std::size_t> gcn_hidden{1024, 512, 156};
  std::vector<std::size_t> gat_hidden{1024, 512};
  std::size_t gat_heads = 10;
  std::vector<std::size_t> mlp_hidden{2048, 512};
  std::vector<std::size_t> fc_hidden{1024, 512, 128};
  double dropout = 0.2;
  std::uint64_t seed = 0;
};

enum class Activation { relu, none };

struct DenseLayer {
  Tensor weight;  // [in x out]
  Tensor bias;    // [out]
  Activation activation = Activation::relu;

  static DenseLayer init(std::size_t in, std::size_t out,
                         Activation activation, Rng& rng);
};

Tensor dense_forward(const DenseLayer& layer, const Tensor& input);

enum class Mode { train, eval };

// The full network: one shared drug encoder applied to both slots, the
// expression MLP, and the fully connected softmax head.
struct DeepDdsModel {
  ModelConfig config;
  std::vector<GcnLayer> gcn_layers;
  std::vector<GatLayer> gat_layers;
  std::vector<DenseLayer> cell_mlp;
  std::vector<DenseLayer> predictor;  // hidden FC layers
  DenseLayer output;                  // [last_fc x 2], no activation
  std::vector<std::string> featurizer_vocab;
  std::vector<std::string> gene_list;
  NormStats normalization;  // filled once a normalizer has been fit

  std::size_t drug_embedding_width() const;
  std::size_t predictor_input_width() const;
};

// Glorot-uniform weights, zero biases, drawn deterministically from
// config.seed in a fixed construction order.
DeepDdsModel init_model(const ModelConfig& config,
                        std::vector<std::string> gene_list);

// Stable (name, tensor) enumeration of every trainable parameter.
std::vector<std::pair<std::string, Tensor>> named_parameters(
    const DeepDdsModel& model);
std::vector<Tensor> parameters(const DeepDdsModel& model);
// Multiplicative parameters only (weights and attention vectors); the
// L2 term excludes biases.
std::vector<Tensor> weight_matrices(const DeepDdsModel& model);

// Node embeddings after the final graph layer, before pooling.
Tensor encode_drug_nodes(const DeepDdsModel& model, const GraphBatch& batch);
// Pooled per-graph drug embeddings [G x emb].
Tensor encode_drugs(const DeepDdsModel& model, const GraphBatch& batch);

// Probabilities [B x 2] (column 0 antagonist, column 1 synergist).
// Dropout fires in train mode only and draws from `dropout_rng`.
Tensor forward_batch(const DeepDdsModel& model,
                     std::span<const SampleRef> samples, Mode mode,
                     Rng* dropout_rng = nullptr);

// Single-sample convenience: (p_antagonist, p_synergist).
std::pair<double, double> forward(const DeepDdsModel& model,
                                  const MolGraph& drug_a,
                                  const MolGraph& drug_b,
                                  const CellLineProfile& cell,
                                  Mode mode = Mode::eval,
                                  Rng* dropout_rng = nullptr);

// Mean cross-entropy over the batch plus lambda * sum ||W||^2 over all
// weight matrices (biases excluded).
Tensor loss(const Tensor& predictions, const std::vector<int>& labels,
            const DeepDdsModel& model, double lambda);

}  // namespace dds
