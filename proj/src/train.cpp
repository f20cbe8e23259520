// SPDX-License-Identifier: Apache-2.0

#include "dds/train.hpp"

#include <chrono>
#include <cmath>
#include <ostream>

#include <json.hpp>

#include "dds/error.hpp"
#include "dds/metrics.hpp"
#include "dds/rng.hpp"

namespace dds {

std::string train_report_to_json(const TrainReport& report,
                                 bool include_wall_seconds) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const EpochStats& e : report.epochs)
    epochs.push_back({{"train_loss", e.train_loss}, {"val_auc", e.val_auc}});
  nlohmann::json doc{{"epochs", std::move(epochs)},
                     {"best_epoch", report.best_epoch},
                     {"best_val_auc", report.best_val_auc},
                     {"seed", report.seed},
                     {"dropout_seed", report.dropout_seed}};
  if (include_wall_seconds) doc["wall_seconds"] = report.wall_seconds;
  return doc.dump(2);
}

AdamState::AdamState(std::span<const Tensor> params) {
  for (const Tensor& p : params) {
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
  }
}

void adam_step(std::span<const Tensor> params, AdamState& state,
               const TrainConfig& config) {
  if (params.size() != state.m_.size())
    throw Error(ErrorCode::ShapeMismatch,
                "optimizer state does not match parameter count");
  ++state.t_;
  const double b1 = config.adam_beta1;
  const double b2 = config.adam_beta2;
  const double bias1 = 1.0 - std::pow(b1, static_cast<double>(state.t_));
  const double bias2 = 1.0 - std::pow(b2, static_cast<double>(state.t_));

  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor p = params[i];
    if (!p.has_grad()) continue;  // parameter unused this step
    if (p.grad().size() != state.m_[i].size())
      throw Error(ErrorCode::ShapeMismatch,
                  "gradient size does not match optimizer state");
    auto values = p.values_mut();
    auto grad = p.grad();
    auto& m = state.m_[i];
    auto& v = state.v_[i];
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double g = grad[j];
      m[j] = b1 * m[j] + (1.0 - b1) * g;
      v[j] = b2 * v[j] + (1.0 - b2) * g * g;
      const double m_hat = m[j] / bias1;
      const double v_hat = v[j] / bias2;
      values[j] -=
          config.learning_rate * m_hat / (std::sqrt(v_hat) + config.adam_epsilon);
    }
  }
}

std::vector<double> score_samples(const DeepDdsModel& model,
                                  std::span<const SampleRef> samples,
                                  std::size_t batch_size) {
  NoGrad inference;
  std::vector<double> scores;
  scores.reserve(samples.size());
  for (std::size_t at = 0; at < samples.size(); at += batch_size) {
    const std::size_t len = std::min(batch_size, samples.size() - at);
    Tensor p = forward_batch(model, samples.subspan(at, len), Mode::eval);
    for (std::size_t i = 0; i < len; ++i) scores.push_back(p.at(i, 1));
  }
  return scores;
}

namespace {

void restore_parameters(DeepDdsModel& model,
                        const std::vector<std::vector<double>>& snapshot) {
  auto params = parameters(model);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto values = params[i].values_mut();
    std::copy(snapshot[i].begin(), snapshot[i].end(), values.begin());
  }
}

std::vector<std::vector<double>> snapshot_parameters(
    const DeepDdsModel& model) {
  std::vector<std::vector<double>> snapshot;
  for (const Tensor& p : parameters(model))
    snapshot.emplace_back(p.values().begin(), p.values().end());
  return snapshot;
}

}  // namespace

std::pair<Checkpoint, TrainReport> fit(DeepDdsModel& model,
                                       const ResolvedDataset& train,
                                       const ResolvedDataset& val,
                                       const TrainConfig& config,
                                       std::ostream* log) {
  if (train.samples.empty())
    throw Error(ErrorCode::EmptyTrainSet, "no training samples");
  if (val.samples.empty())
    throw Error(ErrorCode::EmptyTrainSet, "no validation samples");
  if (config.batch_size == 0 || config.max_epochs == 0)
    throw Error(ErrorCode::BadConfig, "batch_size and max_epochs must be >= 1");
  if (config.patience > config.max_epochs)
    throw Error(ErrorCode::BadConfig, "patience must not exceed max_epochs");

  const auto start_time = std::chrono::steady_clock::now();

  TrainReport report;
  report.seed = config.seed;
  report.dropout_seed = Rng::mix(config.seed, 0xD509);
  Rng dropout_rng(report.dropout_seed);

  auto params = parameters(model);
  AdamState adam(params);

  std::vector<std::vector<double>> best_snapshot;
  std::size_t epochs_since_best = 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto batches =
        make_batches(train.samples.size(), config.order_augment,
                     config.batch_size, Rng::mix(config.seed, epoch));

    double loss_sum = 0.0;
    std::size_t sample_count = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      std::vector<SampleRef> batch_samples;
      std::vector<int> batch_labels;
      batch_samples.reserve(batches[b].size());
      for (const BatchSample& s : batches[b]) {
        SampleRef ref = train.samples[s.record];
        if (s.swapped) std::swap(ref.drug_a, ref.drug_b);
        batch_samples.push_back(ref);
        batch_labels.push_back(train.labels[s.record]);
      }

      Tape tape;
      Tensor predictions = forward_batch(model, batch_samples, Mode::train,
                                         &dropout_rng);
      Tensor batch_loss =
          loss(predictions, batch_labels, model, config.lambda);
      const double loss_value = batch_loss.item();
      if (!std::isfinite(loss_value))
        throw Error(ErrorCode::NonFiniteLoss,
                    "loss became non-finite at epoch " + std::to_string(epoch) +
                        ", batch " + std::to_string(b));
      tape.backward(batch_loss);
      adam_step(params, adam, config);
      for (Tensor& p : params) p.zero_grad();

      loss_sum += loss_value * static_cast<double>(batch_samples.size());
      sample_count += batch_samples.size();
    }

    EpochStats stats;
    stats.train_loss = loss_sum / static_cast<double>(sample_count);
    const std::vector<double> val_scores = score_samples(
        model, std::span<const SampleRef>(val.samples), config.batch_size);
    stats.val_auc = roc_auc(val_scores, val.labels);
    report.epochs.push_back(stats);
    if (log != nullptr)
      *log << "epoch " << epoch << " loss " << stats.train_loss << " val_auc "
           << stats.val_auc << "\n";

    if (report.best_epoch == 0 || stats.val_auc > report.best_val_auc) {
      report.best_epoch = epoch;
      report.best_val_auc = stats.val_auc;
      best_snapshot = snapshot_parameters(model);
      epochs_since_best = 0;
    } else {
      ++epochs_since_best;
    }
    if (epochs_since_best >= config.patience) break;
  }

  restore_parameters(model, best_snapshot);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                    start_time)
          .count();
  return {checkpoint_from_model(model, config.seed), report};
}

}  // namespace dds
