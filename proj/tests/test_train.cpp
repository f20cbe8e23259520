// SPDX-License-Identifier: Apache-2.0

#include "dds/train.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "dds/error.hpp"
#include "dds/metrics.hpp"
#include "synthetic.hpp"
#include "testutil.hpp"

namespace dds {
namespace {

TEST(AdamStep, FirstStepOnSquareLoss) {
  Tensor w = Tensor::scalar(1.0, /*requires_grad=*/true);
  TrainConfig config;
  config.learning_rate = 0.1;
  AdamState state({&w, 1});
  {
    Tape tape;
    Tensor loss_value = mul(w, w);
    tape.backward(loss_value);
  }
  adam_step({&w, 1}, state, config);
  // bias-corrected ratio is 1 up to epsilon: w <- 1 - 0.1 * g/|g|
  EXPECT_NEAR(w.values()[0], 0.9, 1e-8);
}

TEST(AdamStep, ZeroGradientLeavesParametersUnchanged) {
  Tensor w = Tensor::vector({1.0, -2.0}, /*requires_grad=*/true);
  w.zero_grad();
  TrainConfig config;
  AdamState state({&w, 1});
  adam_step({&w, 1}, state, config);
  EXPECT_EQ(w.values()[0], 1.0);
  EXPECT_EQ(w.values()[1], -2.0);
}

TEST(AdamStep, ParametersUpdateIndependently) {
  Tensor a = Tensor::scalar(1.0, true);
  Tensor b = Tensor::scalar(1.0, true);
  TrainConfig config;
  config.learning_rate = 0.1;
  std::vector<Tensor> params{a, b};
  AdamState state(params);
  {
    Tape tape;
    Tensor loss_value = add(mul(a, a), scale(b, 0.0));
    tape.backward(loss_value);
  }
  adam_step(params, state, config);
  EXPECT_NEAR(a.values()[0], 0.9, 1e-8);
  EXPECT_EQ(b.values()[0], 1.0);  // zero gradient slot untouched
}

class TrainFixture : public ::testing::Test {
 protected:
  // small but learnable task: 240 train / 60 val
  testing::PreparedSynthetic prep_ = testing::prepare_synthetic(5, 240, 60);
};

TEST_F(TrainFixture, PatienceZeroStopsAfterOneEpoch) {
  DeepDdsModel model = init_model(
      testing::reduced_config(EncoderKind::gcn, 1), prep_.data.gene_list);
  TrainConfig config;
  config.max_epochs = 50;
  config.patience = 0;
  config.batch_size = 64;
  auto [checkpoint, report] = fit(model, prep_.train, prep_.val, config);
  EXPECT_EQ(report.epochs.size(), 1u);
  EXPECT_EQ(report.best_epoch, 1u);
}

TEST_F(TrainFixture, DeterministicReports) {
  auto run = [&] {
    DeepDdsModel model = init_model(
        testing::reduced_config(EncoderKind::gcn, 7), prep_.data.gene_list);
    TrainConfig config;
    config.max_epochs = 4;
    config.patience = 4;
    config.batch_size = 64;
    config.seed = 99;
    auto [checkpoint, report] = fit(model, prep_.train, prep_.val, config);
    return report;
  };
  TrainReport first = run();
  TrainReport second = run();
  ASSERT_EQ(first.epochs.size(), second.epochs.size());
  for (std::size_t e = 0; e < first.epochs.size(); ++e) {
    EXPECT_EQ(first.epochs[e].train_loss, second.epochs[e].train_loss);
    EXPECT_EQ(first.epochs[e].val_auc, second.epochs[e].val_auc);
  }
  EXPECT_EQ(first.best_epoch, second.best_epoch);
  EXPECT_EQ(first.best_val_auc, second.best_val_auc);
  EXPECT_EQ(first.dropout_seed, second.dropout_seed);
}

TEST_F(TrainFixture, LossDropsAndBestEpochIsRestored) {
  DeepDdsModel model = init_model(
      testing::reduced_config(EncoderKind::gcn, 11), prep_.data.gene_list);
  TrainConfig config;
  config.max_epochs = 20;
  config.patience = 20;
  config.batch_size = 64;
  config.seed = 3;
  auto [checkpoint, report] = fit(model, prep_.train, prep_.val, config);

  ASSERT_GE(report.epochs.size(), 2u);
  EXPECT_LT(report.epochs.back().train_loss, report.epochs.front().train_loss);

  double max_auc = 0.0;
  for (const EpochStats& e : report.epochs) max_auc = std::max(max_auc, e.val_auc);
  EXPECT_DOUBLE_EQ(report.best_val_auc, max_auc);
  EXPECT_DOUBLE_EQ(report.epochs[report.best_epoch - 1].val_auc, max_auc);

  // the model now carries the best-epoch parameters
  std::vector<double> scores = score_samples(
      model, std::span<const SampleRef>(prep_.val.samples), config.batch_size);
  EXPECT_NEAR(roc_auc(scores, prep_.val.labels), report.best_val_auc, 1e-12);
}

TEST_F(TrainFixture, NonFiniteLossAborts) {
  DeepDdsModel model = init_model(
      testing::reduced_config(EncoderKind::gcn, 13), prep_.data.gene_list);
  TrainConfig config;
  config.learning_rate = 1e18;  // guaranteed blow-up
  config.max_epochs = 10;
  config.batch_size = 64;
  try {
    fit(model, prep_.train, prep_.val, config);
    FAIL() << "expected NonFiniteLoss";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonFiniteLoss);
    EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos);
  }
}

TEST_F(TrainFixture, EmptySetsRejected) {
  DeepDdsModel model = init_model(
      testing::reduced_config(EncoderKind::gcn, 1), prep_.data.gene_list);
  TrainConfig config;
  ResolvedDataset empty;
  EXPECT_THROW(fit(model, empty, prep_.val, config), Error);
  EXPECT_THROW(fit(model, prep_.train, empty, config), Error);
}

TEST(TrainReportJson, ContainsPerEpochCurve) {
  TrainReport report;
  report.epochs = {{1.5, 0.6}, {0.9, 0.8}};
  report.best_epoch = 2;
  report.best_val_auc = 0.8;
  report.seed = 4;
  const std::string text = train_report_to_json(report);
  EXPECT_NE(text.find("\"best_epoch\": 2"), std::string::npos);
  EXPECT_NE(text.find("train_loss"), std::string::npos);
  EXPECT_NE(text.find("val_auc"), std::string::npos);
}

}  // namespace
}  // namespace dds
