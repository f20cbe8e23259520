// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dds/net.hpp"

namespace dds {

// Serialized model state: configuration, featurizer vocabulary, gene
// list, normalization statistics and all parameter tensors rounded to
// f32. File layout: magic "DDS1", u32 LE version, u64 LE header length,
// JSON header (config + manifest), raw little-endian f32 payload, then a
// CRC32 of the payload region.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  ModelConfig config;
  std::vector<std::string> featurizer_vocab;
  std::vector<std::string> gene_list;
  NormStats normalization;
  std::uint64_t training_seed = 0;

  struct TensorEntry {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<float> values;
  };
  std::vector<TensorEntry> tensors;
};

Checkpoint checkpoint_from_model(const DeepDdsModel& model,
                                 std::uint64_t training_seed);
DeepDdsModel model_from_checkpoint(const Checkpoint& checkpoint);

void write_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint read_checkpoint(const std::string& path);

// Round-trip convenience wrappers.
void save_checkpoint(const DeepDdsModel& model, const std::string& path,
                     std::uint64_t training_seed = 0);
DeepDdsModel load_checkpoint(const std::string& path);

// Shared with the run configuration echo in CLI artifacts.
std::string model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const std::string& text);

}  // namespace dds
