// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "dds/checkpoint.hpp"
#include "dds/data.hpp"
#include "dds/net.hpp"

namespace dds {

struct TrainConfig {
  double learning_rate = 1e-3;
  double lambda = 1e-4;  // L2 weight on the loss term
  std::size_t batch_size = 128;
  std::size_t max_epochs = 500;
  std::size_t patience = 10;  // epochs without val AUC improvement
  std::uint64_t seed = 0;
  bool order_augment = true;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
};

struct EpochStats {
  double train_loss = 0.0;
  double val_auc = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  std::size_t best_epoch = 0;  // 1-based
  double best_val_auc = 0.0;
  double wall_seconds = 0.0;  // informational; not covered by determinism
  std::uint64_t seed = 0;
  std::uint64_t dropout_seed = 0;
};

// Wall time is measured, not derived from the seed; callers that need a
// bit-reproducible artifact leave it out.
std::string train_report_to_json(const TrainReport& report,
                                 bool include_wall_seconds = true);

// First/second moment state, one slot per parameter in `parameters()`
// order.
class AdamState {
 public:
  explicit AdamState(std::span<const Tensor> params);
  std::uint64_t steps() const { return t_; }

  friend void adam_step(std::span<const Tensor> params, AdamState& state,
                        const TrainConfig& config);

 private:
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::uint64_t t_ = 0;
};

// One bias-corrected Adam update; parameters are updated in place from
// their accumulated gradients (which are left untouched).
void adam_step(std::span<const Tensor> params, AdamState& state,
               const TrainConfig& config);

// Eval-mode synergy probabilities, batched; no gradients recorded.
std::vector<double> score_samples(const DeepDdsModel& model,
                                  std::span<const SampleRef> samples,
                                  std::size_t batch_size);

// Epochs of seeded shuffled mini-batches with optional slot-order
// augmentation; validation ROC AUC decides early stopping; the model is
// restored to its best epoch and the matching f32 checkpoint returned.
// `log` (when given) receives one line per epoch.
std::pair<Checkpoint, TrainReport> fit(DeepDdsModel& model,
                                       const ResolvedDataset& train,
                                       const ResolvedDataset& val,
                                       const TrainConfig& config,
                                       std::ostream* log = nullptr);

}  // namespace dds
