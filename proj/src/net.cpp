// SPDX-License-Identifier: Apache-2.0

#include "dds/net.hpp"

#include <algorithm>
#include <unordered_map>

#include "dds/error.hpp"

namespace dds {

const char* encoder_kind_name(EncoderKind kind) {
  return kind == EncoderKind::gcn ? "gcn" : "gat";
}

EncoderKind encoder_kind_from_name(const std::string& name) {
  if (name == "gcn") return EncoderKind::gcn;
  if (name == "gat") return EncoderKind::gat;
  throw Error(ErrorCode::BadConfig, "unknown encoder '" + name + "'");
}

DenseLayer DenseLayer::init(std::size_t in, std::size_t out,
                            Activation activation, Rng& rng) {
  if (in == 0 || out == 0)
    throw Error(ErrorCode::InvalidWidth, "dense layer width must be positive");
  DenseLayer layer;
  layer.weight = glorot_uniform(rng, in, out);
  layer.bias = Tensor::zeros({out}, /*requires_grad=*/true);
  layer.activation = activation;
  return layer;
}

Tensor dense_forward(const DenseLayer& layer, const Tensor& input) {
  if (input.rank() != 2 || input.cols() != layer.weight.rows())
    throw Error(ErrorCode::WidthMismatch,
                "dense input width does not match layer");
  Tensor out = add(matmul(input, layer.weight), layer.bias);
  return layer.activation == Activation::relu ? relu(out) : out;
}

std::size_t DeepDdsModel::drug_embedding_width() const {
  const auto& widths = config.encoder == EncoderKind::gcn ? config.gcn_hidden
                                                          : config.gat_hidden;
  return widths.back();
}

std::size_t DeepDdsModel::predictor_input_width() const {
  return 2 * drug_embedding_width() + config.mlp_hidden.back();
}

namespace {

void validate_widths(const std::vector<std::size_t>& widths,
                     const char* what) {
  if (widths.empty())
    throw Error(ErrorCode::InvalidWidth, std::string(what) + " has no layers");
  for (std::size_t w : widths)
    if (w == 0)
      throw Error(ErrorCode::InvalidWidth,
                  std::string(what) + " contains width 0");
}

}  // namespace

DeepDdsModel init_model(const ModelConfig& config,
                        std::vector<std::string> gene_list) {
  validate_widths(config.mlp_hidden, "mlp_hidden");
  validate_widths(config.fc_hidden, "fc_hidden");
  if (config.encoder == EncoderKind::gcn)
    validate_widths(config.gcn_hidden, "gcn_hidden");
  else
    validate_widths(config.gat_hidden, "gat_hidden");
  if (config.encoder == EncoderKind::gat && config.gat_heads == 0)
    throw Error(ErrorCode::InvalidWidth, "gat_heads must be positive");
  if (gene_list.empty())
    throw Error(ErrorCode::InvalidWidth, "gene list must not be empty");
  if (config.dropout < 0.0 || config.dropout >= 1.0)
    throw Error(ErrorCode::BadConfig, "dropout must lie in [0, 1)");

  DeepDdsModel model;
  model.config = config;
  model.gene_list = std::move(gene_list);
  for (std::string_view symbol : element_vocabulary())
    model.featurizer_vocab.emplace_back(symbol);

  Rng rng(config.seed);
  std::size_t in = kAtomFeatureWidth;
  if (config.encoder == EncoderKind::gcn) {
    for (std::size_t width : config.gcn_hidden) {
      model.gcn_layers.push_back(GcnLayer::init(in, width, rng));
      in = width;
    }
  } else {
    for (std::size_t width : config.gat_hidden) {
      model.gat_layers.push_back(
          GatLayer::init(in, width, config.gat_heads, rng));
      in = width;
    }
  }

  in = model.gene_list.size();
  for (std::size_t width : config.mlp_hidden) {
    model.cell_mlp.push_back(DenseLayer::init(in, width, Activation::relu, rng));
    in = width;
  }

  in = model.predictor_input_width();
  for (std::size_t width : config.fc_hidden) {
    model.predictor.push_back(
        DenseLayer::init(in, width, Activation::relu, rng));
    in = width;
  }
  model.output = DenseLayer::init(in, 2, Activation::none, rng);
  return model;
}

std::vector<std::pair<std::string, Tensor>> named_parameters(
    const DeepDdsModel& model) {
  std::vector<std::pair<std::string, Tensor>> params;
  for (std::size_t i = 0; i < model.gcn_layers.size(); ++i) {
    params.emplace_back("gcn" + std::to_string(i) + ".weight",
                        model.gcn_layers[i].weight);
    params.emplace_back("gcn" + std::to_string(i) + ".bias",
                        model.gcn_layers[i].bias);
  }
  for (std::size_t i = 0; i < model.gat_layers.size(); ++i) {
    const GatLayer& layer = model.gat_layers[i];
    for (std::size_t m = 0; m < layer.heads(); ++m) {
      const std::string prefix =
          "gat" + std::to_string(i) + ".head" + std::to_string(m);
      params.emplace_back(prefix + ".weight", layer.head_weights[m]);
      params.emplace_back(prefix + ".attention", layer.head_attention[m]);
    }
  }
  auto add_dense = [&params](const std::string& prefix,
                             const DenseLayer& layer) {
    params.emplace_back(prefix + ".weight", layer.weight);
    params.emplace_back(prefix + ".bias", layer.bias);
  };
  for (std::size_t i = 0; i < model.cell_mlp.size(); ++i)
    add_dense("cell_mlp" + std::to_string(i), model.cell_mlp[i]);
  for (std::size_t i = 0; i < model.predictor.size(); ++i)
    add_dense("fc" + std::to_string(i), model.predictor[i]);
  add_dense("output", model.output);
  return params;
}

std::vector<Tensor> parameters(const DeepDdsModel& model) {
  std::vector<Tensor> out;
  for (auto& [name, tensor] : named_parameters(model)) out.push_back(tensor);
  return out;
}

std::vector<Tensor> weight_matrices(const DeepDdsModel& model) {
  std::vector<Tensor> out;
  for (auto& [name, tensor] : named_parameters(model))
    if (!name.ends_with(".bias")) out.push_back(tensor);
  return out;
}

Tensor encode_drug_nodes(const DeepDdsModel& model, const GraphBatch& batch) {
  Tensor x = batch.node_features;
  if (model.config.encoder == EncoderKind::gcn) {
    for (const GcnLayer& layer : model.gcn_layers)
      x = gcn_forward(layer, batch, x);
  } else {
    for (const GatLayer& layer : model.gat_layers)
      x = gat_forward(layer, batch, x);
  }
  return x;
}

Tensor encode_drugs(const DeepDdsModel& model, const GraphBatch& batch) {
  return global_max_pool(encode_drug_nodes(model, batch), batch.offsets);
}

namespace {

Tensor dropout(const Tensor& x, double rate, Rng* rng) {
  if (rate <= 0.0) return x;
  if (rng == nullptr)
    throw Error(ErrorCode::BadConfig, "train-mode dropout needs an rng");
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(x.size());
  for (double& v : mask) v = rng->uniform() < rate ? 0.0 : keep_scale;
  return mul(x, Tensor::from(x.shape(), std::move(mask)));
}

}  // namespace

Tensor forward_batch(const DeepDdsModel& model,
                     std::span<const SampleRef> samples, Mode mode,
                     Rng* dropout_rng) {
  if (samples.empty())
    throw Error(ErrorCode::EmptyBatch, "forward over an empty batch");
  const std::size_t gene_width = model.gene_list.size();
  for (const SampleRef& s : samples) {
    if (s.cell->values.size() != gene_width)
      throw Error(ErrorCode::GeneMismatch,
                  "profile '" + s.cell->cell_id + "' width " +
                      std::to_string(s.cell->values.size()) +
                      " does not match gene list " +
                      std::to_string(gene_width));
    if (!s.cell->normalized)
      throw Error(ErrorCode::GeneMismatch,
                  "profile '" + s.cell->cell_id + "' is not normalized");
  }

  // Encode each distinct graph once, then gather per-slot rows.
  std::unordered_map<const MolGraph*, std::size_t> graph_index;
  std::vector<std::pair<const MolGraph*, Tensor>> unique_graphs;
  std::vector<std::size_t> index_a, index_b;
  for (const SampleRef& s : samples) {
    for (const MolGraph* mol : {s.drug_a, s.drug_b}) {
      auto [it, inserted] = graph_index.emplace(mol, unique_graphs.size());
      if (inserted) {
        unique_graphs.emplace_back(
            mol, featurize(*mol, std::span<const std::string>(
                               model.featurizer_vocab)));
      }
    }
    index_a.push_back(graph_index.at(s.drug_a));
    index_b.push_back(graph_index.at(s.drug_b));
  }
  GraphBatch batch =
      batch_graphs(std::span(unique_graphs.data(), unique_graphs.size()));
  Tensor drug_embeddings = encode_drugs(model, batch);
  Tensor drug_a = gather_rows(drug_embeddings, std::move(index_a));
  Tensor drug_b = gather_rows(drug_embeddings, std::move(index_b));

  std::vector<double> cells;
  cells.reserve(samples.size() * gene_width);
  for (const SampleRef& s : samples)
    cells.insert(cells.end(), s.cell->values.begin(), s.cell->values.end());
  Tensor cell = Tensor::from({samples.size(), gene_width}, std::move(cells));
  const bool training = mode == Mode::train;
  for (const DenseLayer& layer : model.cell_mlp) {
    cell = dense_forward(layer, cell);
    if (training) cell = dropout(cell, model.config.dropout, dropout_rng);
  }

  std::vector<Tensor> parts{drug_a, drug_b, cell};
  Tensor hidden = concat_cols(parts);
  for (const DenseLayer& layer : model.predictor) {
    hidden = dense_forward(layer, hidden);
    if (training) hidden = dropout(hidden, model.config.dropout, dropout_rng);
  }
  return softmax_rows(dense_forward(model.output, hidden));
}

std::pair<double, double> forward(const DeepDdsModel& model,
                                  const MolGraph& drug_a,
                                  const MolGraph& drug_b,
                                  const CellLineProfile& cell, Mode mode,
                                  Rng* dropout_rng) {
  SampleRef sample{&drug_a, &drug_b, &cell};
  Tensor p = forward_batch(model, std::span(&sample, 1), mode, dropout_rng);
  return {p.at(0, 0), p.at(0, 1)};
}

Tensor loss(const Tensor& predictions, const std::vector<int>& labels,
            const DeepDdsModel& model, double lambda) {
  if (predictions.rank() != 2 || predictions.cols() != 2)
    throw Error(ErrorCode::ShapeMismatch, "predictions must be [B x 2]");
  if (predictions.rows() != labels.size())
    throw Error(ErrorCode::LengthMismatch,
                "predictions and labels differ in length");
  if (lambda < 0.0)
    throw Error(ErrorCode::BadConfig, "lambda must be non-negative");

  std::vector<std::size_t> columns;
  columns.reserve(labels.size());
  for (int label : labels) {
    if (label != 0 && label != 1)
      throw Error(ErrorCode::LengthMismatch, "labels must be 0 or 1");
    columns.push_back(static_cast<std::size_t>(label));
  }
  Tensor cross_entropy =
      scale(sum_all(log(pick(predictions, std::move(columns)))),
            -1.0 / static_cast<double>(labels.size()));
  if (lambda == 0.0) return cross_entropy;

  Tensor reg;
  for (const Tensor& w : weight_matrices(model)) {
    Tensor term = sum_all(mul(w, w));
    reg = reg.defined() ? add(reg, term) : term;
  }
  return add(cross_entropy, scale(reg, lambda));
}

}  // namespace dds
