// SPDX-License-Identifier: Apache-2.0

#include "dds/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>
#include <zlib.h>

#include "dds/error.hpp"

namespace dds {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'D', 'D', 'S', '1'};

json config_to_json_obj(const ModelConfig& config) {
  return json{{"encoder", encoder_kind_name(config.encoder)},
              {"gcn_hidden", config.gcn_hidden},
              {"gat_hidden", config.gat_hidden},
              {"gat_heads", config.gat_heads},
              {"mlp_hidden", config.mlp_hidden},
              {"fc_hidden", config.fc_hidden},
              {"dropout", config.dropout},
              {"seed", config.seed}};
}

ModelConfig config_from_json_obj(const json& doc) {
  ModelConfig config;
  config.encoder = encoder_kind_from_name(doc.at("encoder").get<std::string>());
  config.gcn_hidden = doc.at("gcn_hidden").get<std::vector<std::size_t>>();
  config.gat_hidden = doc.at("gat_hidden").get<std::vector<std::size_t>>();
  config.gat_heads = doc.at("gat_heads").get<std::size_t>();
  config.mlp_hidden = doc.at("mlp_hidden").get<std::vector<std::size_t>>();
  config.fc_hidden = doc.at("fc_hidden").get<std::vector<std::size_t>>();
  config.dropout = doc.at("dropout").get<double>();
  config.seed = doc.at("seed").get<std::uint64_t>();
  return config;
}

template <typename T>
void append_le(std::string& out, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.append(bytes, sizeof(T));
}

template <typename T>
T read_le(const std::string& data, std::size_t at) {
  T value;
  std::memcpy(&value, data.data() + at, sizeof(T));
  return value;
}

}  // namespace

std::string model_config_to_json(const ModelConfig& config) {
  return config_to_json_obj(config).dump();
}

ModelConfig model_config_from_json(const std::string& text) {
  try {
    return config_from_json_obj(json::parse(text));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadConfig,
                std::string("bad model config: ") + e.what());
  }
}

Checkpoint checkpoint_from_model(const DeepDdsModel& model,
                                 std::uint64_t training_seed) {
  Checkpoint checkpoint;
  checkpoint.config = model.config;
  checkpoint.featurizer_vocab = model.featurizer_vocab;
  checkpoint.gene_list = model.gene_list;
  checkpoint.normalization = model.normalization;
  checkpoint.training_seed = training_seed;
  for (const auto& [name, tensor] : named_parameters(model)) {
    Checkpoint::TensorEntry entry;
    entry.name = name;
    entry.shape = tensor.shape();
    entry.values.reserve(tensor.size());
    for (double v : tensor.values())
      entry.values.push_back(static_cast<float>(v));
    checkpoint.tensors.push_back(std::move(entry));
  }
  return checkpoint;
}

DeepDdsModel model_from_checkpoint(const Checkpoint& checkpoint) {
  DeepDdsModel model = init_model(checkpoint.config, checkpoint.gene_list);
  model.featurizer_vocab = checkpoint.featurizer_vocab;
  model.normalization = checkpoint.normalization;

  std::size_t at = 0;
  auto params = named_parameters(model);
  if (params.size() != checkpoint.tensors.size())
    throw Error(ErrorCode::CorruptTensor,
                "checkpoint tensor count does not match the architecture");
  for (auto& [name, tensor] : params) {
    const Checkpoint::TensorEntry& entry = checkpoint.tensors[at++];
    if (entry.name != name || entry.shape != tensor.shape() ||
        entry.values.size() != tensor.size())
      throw Error(ErrorCode::CorruptTensor,
                  "tensor '" + entry.name + "' does not match '" + name + "'");
    auto values = tensor.values_mut();
    for (std::size_t i = 0; i < entry.values.size(); ++i)
      values[i] = static_cast<double>(entry.values[i]);
  }
  return model;
}

void write_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
  json manifest = json::array();
  std::string payload;
  for (const Checkpoint::TensorEntry& entry : checkpoint.tensors) {
    manifest.push_back({{"name", entry.name},
                        {"shape", entry.shape},
                        {"offset", payload.size()},
                        {"count", entry.values.size()}});
    const std::size_t bytes = entry.values.size() * sizeof(float);
    const std::size_t start = payload.size();
    payload.resize(start + bytes);
    std::memcpy(payload.data() + start, entry.values.data(), bytes);
  }

  json header{{"version", Checkpoint::kVersion},
              {"config", config_to_json_obj(checkpoint.config)},
              {"featurizer_vocab", checkpoint.featurizer_vocab},
              {"gene_list", checkpoint.gene_list},
              {"normalization",
               {{"mean", checkpoint.normalization.mean},
                {"stddev", checkpoint.normalization.stddev}}},
              {"training_seed", checkpoint.training_seed},
              {"tensors", std::move(manifest)}};
  const std::string header_text = header.dump();

  std::string blob;
  blob.append(kMagic, sizeof(kMagic));
  append_le<std::uint32_t>(blob, Checkpoint::kVersion);
  append_le<std::uint64_t>(blob, header_text.size());
  blob += header_text;
  blob += payload;
  const auto crc = static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(payload.data()),
            static_cast<uInt>(payload.size())));
  append_le<std::uint32_t>(blob, crc);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw Error(ErrorCode::Io, "short write to " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());

  if (data.size() < sizeof(kMagic) + sizeof(std::uint32_t) + sizeof(std::uint64_t))
    throw Error(ErrorCode::CorruptTensor, "checkpoint file is truncated");
  if (std::memcmp(data.data(), kMagic, sizeof(kMagic)) != 0)
    throw Error(ErrorCode::BadMagic, "not a checkpoint file");
  const auto version = read_le<std::uint32_t>(data, 4);
  if (version != Checkpoint::kVersion)
    throw Error(ErrorCode::VersionMismatch,
                "unsupported checkpoint version " + std::to_string(version));
  const auto header_len = read_le<std::uint64_t>(data, 8);
  const std::size_t header_start = 16;
  if (data.size() < header_start + header_len + sizeof(std::uint32_t))
    throw Error(ErrorCode::CorruptTensor, "checkpoint file is truncated");

  json header;
  try {
    header = json::parse(data.substr(header_start, header_len));
  } catch (const json::exception&) {
    throw Error(ErrorCode::CorruptTensor, "checkpoint header is not JSON");
  }

  const std::size_t payload_start = header_start + header_len;
  const std::size_t payload_size =
      data.size() - payload_start - sizeof(std::uint32_t);
  const auto stored_crc =
      read_le<std::uint32_t>(data, data.size() - sizeof(std::uint32_t));
  const auto actual_crc = static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(data.data() + payload_start),
            static_cast<uInt>(payload_size)));
  if (stored_crc != actual_crc)
    throw Error(ErrorCode::CorruptTensor, "payload checksum mismatch");

  Checkpoint checkpoint;
  try {
    checkpoint.config = config_from_json_obj(header.at("config"));
    checkpoint.featurizer_vocab =
        header.at("featurizer_vocab").get<std::vector<std::string>>();
    checkpoint.gene_list =
        header.at("gene_list").get<std::vector<std::string>>();
    checkpoint.normalization.mean =
        header.at("normalization").at("mean").get<std::vector<double>>();
    checkpoint.normalization.stddev =
        header.at("normalization").at("stddev").get<std::vector<double>>();
    checkpoint.training_seed = header.at("training_seed").get<std::uint64_t>();
    for (const json& entry_doc : header.at("tensors")) {
      Checkpoint::TensorEntry entry;
      entry.name = entry_doc.at("name").get<std::string>();
      entry.shape = entry_doc.at("shape").get<std::vector<std::size_t>>();
      const auto offset = entry_doc.at("offset").get<std::size_t>();
      const auto count = entry_doc.at("count").get<std::size_t>();
      std::size_t expected = 1;
      for (std::size_t e : entry.shape) expected *= e;
      if (expected != count ||
          offset + count * sizeof(float) > payload_size)
        throw Error(ErrorCode::CorruptTensor,
                    "tensor '" + entry.name + "' manifest is inconsistent");
      entry.values.resize(count);
      std::memcpy(entry.values.data(),
                  data.data() + payload_start + offset, count * sizeof(float));
      checkpoint.tensors.push_back(std::move(entry));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptTensor,
                std::string("checkpoint header is incomplete: ") + e.what());
  }
  return checkpoint;
}

void save_checkpoint(const DeepDdsModel& model, const std::string& path,
                     std::uint64_t training_seed) {
  write_checkpoint(checkpoint_from_model(model, training_seed), path);
}

DeepDdsModel load_checkpoint(const std::string& path) {
  return model_from_checkpoint(read_checkpoint(path));
}

}  // namespace dds
