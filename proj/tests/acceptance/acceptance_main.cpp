// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: one line per criterion, exit code = number of
// failures. Criterion 9 needs user-supplied benchmark files and reports
// SKIP when they are absent.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <vector>

#include "dds/checkpoint.hpp"
#include "dds/data.hpp"
#include "dds/error.hpp"
#include "dds/gnn.hpp"
#include "dds/interpret.hpp"
#include "dds/metrics.hpp"
#include "dds/net.hpp"
#include "dds/rng.hpp"
#include "dds/train.hpp"
#include "synthetic.hpp"

namespace {

using namespace dds;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Failure {
  std::string message;
};

#define REQUIRE(cond, msg)                                   \
  do {                                                       \
    if (!(cond)) throw Failure{std::string("require failed: ") + msg}; \
  } while (0)

// --- shared helpers ---------------------------------------------------

double max_fd_error(std::vector<Tensor> params,
                    const std::function<Tensor()>& loss_fn,
                    double h = 1e-5) {
  for (Tensor& p : params) p.zero_grad();
  {
    Tape tape;
    Tensor loss_value = loss_fn();
    tape.backward(loss_value);
  }
  std::vector<std::vector<double>> analytic;
  for (Tensor& p : params)
    analytic.emplace_back(p.grad().begin(), p.grad().end());

  double worst = 0.0;
  NoGrad inference;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto values = params[pi].values_mut();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double original = values[i];
      values[i] = original + h;
      const double plus = loss_fn().item();
      values[i] = original - h;
      const double minus = loss_fn().item();
      values[i] = original;
      const double fd = (plus - minus) / (2.0 * h);
      const double a = analytic[pi][i];
      worst = std::max(worst, std::fabs(a - fd) /
                                  std::max({std::fabs(a), std::fabs(fd), 1e-6}));
    }
  }
  return worst;
}

MolGraph random_molgraph(Rng& rng, std::size_t n) {
  static const char* kElements[] = {"C", "N", "O", "S", "P", "F"};
  MolGraph g;
  for (std::size_t i = 0; i < n; ++i) {
    Atom atom;
    atom.element = kElements[rng.below(6)];
    atom.aromatic = rng.uniform() < 0.25;
    g.atoms.push_back(atom);
  }
  std::set<std::pair<std::size_t, std::size_t>> seen;
  auto add_bond = [&](std::size_t a, std::size_t b) {
    const auto key = std::minmax(a, b);
    if (a == b || !seen.insert(key).second) return;
    static const BondOrder kOrders[] = {BondOrder::single,
                                        BondOrder::double_bond,
                                        BondOrder::triple, BondOrder::aromatic};
    g.bonds.push_back(Bond{key.first, key.second, kOrders[rng.below(4)]});
  };
  for (std::size_t i = 1; i < n; ++i) add_bond(i, rng.below(i));
  const std::size_t extra = n > 2 ? rng.below(n) : 0;
  for (std::size_t e = 0; e < extra; ++e) add_bond(rng.below(n), rng.below(n));
  for (const Bond& b : g.bonds) {
    ++g.atoms[b.a].degree;
    ++g.atoms[b.b].degree;
  }
  return assign_hydrogens(g);
}

MolGraph permute_molgraph(const MolGraph& g,
                          const std::vector<std::size_t>& perm) {
  MolGraph out;
  out.atoms.resize(g.atoms.size());
  for (std::size_t i = 0; i < g.atoms.size(); ++i) out.atoms[perm[i]] = g.atoms[i];
  for (const Bond& b : g.bonds)
    out.bonds.push_back(Bond{perm[b.a], perm[b.b], b.order});
  out.hydrogens_assigned = g.hydrogens_assigned;
  return out;
}

GraphBatch single_graph_batch(const MolGraph& g) {
  std::pair<const MolGraph*, Tensor> one{&g, featurize(g)};
  return batch_graphs(std::span(&one, 1));
}

// --- criterion 1: gradient suite ---------------------------------------

void criterion_gradients() {
  const auto start = Clock::now();
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    MolGraph g1 = random_molgraph(rng, 3 + rng.below(4));
    MolGraph g2 = random_molgraph(rng, 3 + rng.below(4));
    std::vector<std::pair<const MolGraph*, Tensor>> graphs{
        {&g1, featurize(g1)}, {&g2, featurize(g2)}};
    GraphBatch batch = batch_graphs(std::span(graphs.data(), graphs.size()));

    GcnLayer gcn = GcnLayer::init(kAtomFeatureWidth, 3, rng);
    worst = std::max(worst, max_fd_error({gcn.weight, gcn.bias}, [&] {
      return sum_all(global_max_pool(gcn_forward(gcn, batch), batch.offsets));
    }));

    GatLayer gat = GatLayer::init(kAtomFeatureWidth, 3, 2, rng);
    std::vector<Tensor> gat_params;
    for (const Tensor& w : gat.head_weights) gat_params.push_back(w);
    for (const Tensor& a : gat.head_attention) gat_params.push_back(a);
    worst = std::max(worst, max_fd_error(gat_params, [&] {
      return sum_all(global_max_pool(gat_forward(gat, batch), batch.offsets));
    }));

    DenseLayer dense = DenseLayer::init(5, 4, Activation::relu, rng);
    std::vector<double> xv(3 * 5);
    for (double& v : xv) v = rng.uniform(-1, 1);
    Tensor x = Tensor::matrix(3, 5, xv);
    worst = std::max(worst, max_fd_error({dense.weight, dense.bias}, [&] {
      return sum_all(dense_forward(dense, x));
    }));

    // softmax + cross-entropy composite over random logits
    std::vector<double> logits(4 * 2);
    for (double& v : logits) v = rng.uniform(-2, 2);
    Tensor z = Tensor::matrix(4, 2, logits, /*requires_grad=*/true);
    std::vector<std::size_t> labels;
    for (int i = 0; i < 4; ++i) labels.push_back(rng.below(2));
    worst = std::max(worst, max_fd_error({z}, [&] {
      Tensor p = softmax_rows(z);
      return scale(sum_all(log(pick(p, labels))), -0.25);
    }));
  }
  const double elapsed = seconds_since(start);
  REQUIRE(worst <= 1e-4, "max relative FD error " + std::to_string(worst));
  REQUIRE(elapsed < 60.0,
          "gradient suite took " + std::to_string(elapsed) + " s");
  std::cout << "      max relative error " << worst << ", " << elapsed
            << " s\n";
}

// --- criterion 2: permutation invariance -------------------------------

void criterion_permutation() {
  Rng rng(2024);
  GcnLayer gcn1 = GcnLayer::init(kAtomFeatureWidth, 16, rng);
  GcnLayer gcn2 = GcnLayer::init(16, 8, rng);
  GatLayer gat1 = GatLayer::init(kAtomFeatureWidth, 16, 3, rng);
  GatLayer gat2 = GatLayer::init(16, 8, 3, rng);

  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    MolGraph g = random_molgraph(rng, 3 + rng.below(28));
    std::vector<std::size_t> perm(g.num_atoms());
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    MolGraph h = permute_molgraph(g, perm);

    GraphBatch bg = single_graph_batch(g);
    GraphBatch bh = single_graph_batch(h);

    Tensor pg = global_max_pool(gcn_forward(gcn2, bg, gcn_forward(gcn1, bg)),
                                bg.offsets);
    Tensor ph = global_max_pool(gcn_forward(gcn2, bh, gcn_forward(gcn1, bh)),
                                bh.offsets);
    for (std::size_t j = 0; j < pg.size(); ++j)
      worst = std::max(worst, std::fabs(pg.values()[j] - ph.values()[j]));

    Tensor ag = global_max_pool(gat_forward(gat2, bg, gat_forward(gat1, bg)),
                                bg.offsets);
    Tensor ah = global_max_pool(gat_forward(gat2, bh, gat_forward(gat1, bh)),
                                bh.offsets);
    for (std::size_t j = 0; j < ag.size(); ++j)
      worst = std::max(worst, std::fabs(ag.values()[j] - ah.values()[j]));
  }
  REQUIRE(worst <= 1e-9,
          "pooled embeddings moved by " + std::to_string(worst));
  std::cout << "      max deviation " << worst << " over 100 graphs\n";
}

// --- criterion 3: metric oracles ----------------------------------------

double roc_auc_bruteforce(const std::vector<double>& scores,
                          const std::vector<int>& labels) {
  double correct = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] == 0) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) correct += 1.0;
      else if (scores[i] == scores[j]) correct += 0.5;
    }
  }
  return correct / static_cast<double>(pairs);
}

void criterion_metric_oracle() {
  Rng rng(3030);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + rng.below(49);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = static_cast<double>(rng.below(12)) / 12.0;
      labels[i] = static_cast<int>(rng.below(2));
    }
    labels[0] = 1;
    labels[n - 1] = 0;
    const double fast = roc_auc(scores, labels);
    const double slow = roc_auc_bruteforce(scores, labels);
    REQUIRE(std::fabs(fast - slow) <= 1e-12,
            "roc_auc disagrees with pair counting at trial " +
                std::to_string(trial));
  }

  for (int trial = 0; trial < 100; ++trial) {
    ConfusionCounts c{rng.below(40), rng.below(40), rng.below(40),
                      rng.below(40)};
    if (c.total() == 0) c.tp = 1;
    const double n = static_cast<double>(c.total());

    std::vector<double> scores;
    std::vector<int> labels;
    auto push = [&](std::size_t count, double score, int label) {
      for (std::size_t i = 0; i < count; ++i) {
        scores.push_back(score);
        labels.push_back(label);
      }
    };
    push(c.tp, 0.9, 1);
    push(c.fp, 0.9, 0);
    push(c.tn, 0.1, 0);
    push(c.fn, 0.1, 1);
    MetricReport r = threshold_metrics(scores, labels);

    REQUIRE(r.counts.tp == c.tp && r.counts.fp == c.fp &&
                r.counts.tn == c.tn && r.counts.fn == c.fn,
            "confusion counts mismatch");
    const double tpr = (c.tp + c.fn) == 0 ? 0.0 : c.tp / double(c.tp + c.fn);
    const double tnr = (c.tn + c.fp) == 0 ? 0.0 : c.tn / double(c.tn + c.fp);
    const double prec = (c.tp + c.fp) == 0 ? 0.0 : c.tp / double(c.tp + c.fp);
    REQUIRE(r.tpr == tpr && r.tnr == tnr, "tpr/tnr mismatch");
    REQUIRE(r.bacc == (tpr + tnr) / 2.0, "bacc mismatch");
    REQUIRE(r.prec == prec, "precision mismatch");

    const double po = (double(c.tp) + c.tn) / n;
    const double pe = ((c.tp + c.fp) / n) * ((c.tp + c.fn) / n) +
                      ((c.tn + c.fn) / n) * ((c.tn + c.fp) / n);
    bool degenerate = false;
    const double kappa = cohen_kappa(c, &degenerate);
    if (pe == 1.0)
      REQUIRE(degenerate && kappa == 0.0, "kappa degenerate rule");
    else
      REQUIRE(kappa == (po - pe) / (1.0 - pe), "kappa mismatch");
  }
  std::cout << "      500 ROC cases + 100 confusion matrices matched\n";
}

// --- criteria 4 and 5: synthetic learnability + order augmentation ------

struct LearnedModel {
  DeepDdsModel model;
  TrainReport report;
  double seconds = 0.0;
};

testing::PreparedSynthetic& synthetic_corpus() {
  static testing::PreparedSynthetic prep =
      testing::prepare_synthetic(424242, 2000, 500);
  return prep;
}

LearnedModel train_synthetic(EncoderKind kind) {
  auto& prep = synthetic_corpus();
  const auto start = Clock::now();
  DeepDdsModel model =
      init_model(testing::reduced_config(kind, 7), prep.data.gene_list);
  model.normalization = prep.stats;
  TrainConfig config;
  config.max_epochs = 200;
  config.patience = 25;
  config.seed = 7;
  auto [checkpoint, report] = fit(model, prep.train, prep.val, config);
  return LearnedModel{std::move(model), std::move(report),
                      seconds_since(start)};
}

std::optional<LearnedModel> g_gcn_run, g_gat_run;

void criterion_learnability() {
  g_gcn_run = train_synthetic(EncoderKind::gcn);
  g_gat_run = train_synthetic(EncoderKind::gat);
  for (const auto* run : {&*g_gcn_run, &*g_gat_run}) {
    REQUIRE(run->report.epochs.size() <= 200, "over 200 epochs");
    REQUIRE(run->seconds < 600.0,
            "training took " + std::to_string(run->seconds) + " s");
    REQUIRE(run->report.best_val_auc >= 0.95,
            "best val AUC " + std::to_string(run->report.best_val_auc));
  }
  std::cout << "      gcn auc " << g_gcn_run->report.best_val_auc << " ("
            << g_gcn_run->report.epochs.size() << " epochs, "
            << g_gcn_run->seconds << " s), gat auc "
            << g_gat_run->report.best_val_auc << " ("
            << g_gat_run->report.epochs.size() << " epochs, "
            << g_gat_run->seconds << " s)\n";
}

void criterion_order_augmentation() {
  REQUIRE(g_gcn_run && g_gat_run, "criterion 4 must run first");
  auto& prep = synthetic_corpus();
  double worst = 1.0;
  for (const auto* run : {&*g_gcn_run, &*g_gat_run}) {
    std::vector<SampleRef> forward_order = prep.val.samples;
    std::vector<SampleRef> swapped = prep.val.samples;
    for (SampleRef& s : swapped) std::swap(s.drug_a, s.drug_b);
    std::vector<double> ab =
        score_samples(run->model, forward_order, 128);
    std::vector<double> ba = score_samples(run->model, swapped, 128);
    worst = std::min(worst, pearson(ab, ba));
  }
  REQUIRE(worst >= 0.9, "slot-order Pearson " + std::to_string(worst));
  std::cout << "      min Pearson between slot orders " << worst << "\n";
}

// --- criterion 6: label pipeline ----------------------------------------

void criterion_label_pipeline() {
  std::vector<RawSynergy> rows;
  auto triple = [&](int k) {
    return std::tuple<std::string, std::string, std::string>(
        "a" + std::to_string(k), "b" + std::to_string(k),
        "c" + std::to_string(k % 7));
  };
  int next = 0;
  // 5 plain positives
  for (int i = 0; i < 5; ++i) {
    auto [a, b, c] = triple(next++);
    rows.push_back({a, b, c, 15.0});
  }
  // 5 plain negatives
  for (int i = 0; i < 5; ++i) {
    auto [a, b, c] = triple(next++);
    rows.push_back({a, b, c, -5.0});
  }
  // 5 dropped, including both boundary values
  for (int i = 0; i < 5; ++i) {
    auto [a, b, c] = triple(next++);
    rows.push_back({a, b, c, i == 0 ? 10.0 : (i == 1 ? 0.0 : 5.0)});
  }
  // 5 replicate triples averaging to exactly 10 -> dropped
  for (int i = 0; i < 5; ++i) {
    auto [a, b, c] = triple(next++);
    rows.push_back({a, b, c, 30.0});
    rows.push_back({b, a, c, 20.0});  // swapped slots, same combination
    rows.push_back({a, b, c, -20.0});
  }
  // 5 replicate triples averaging to 20 -> positive
  for (int i = 0; i < 5; ++i) {
    auto [a, b, c] = triple(next++);
    rows.push_back({a, b, c, 40.0});
    rows.push_back({a, b, c, 0.0});
  }
  // 5 replicate triples averaging to -10 -> negative
  for (int i = 0; i < 5; ++i) {
    auto [a, b, c] = triple(next++);
    rows.push_back({a, b, c, -30.0});
    rows.push_back({b, a, c, 10.0});
  }
  REQUIRE(rows.size() == 50, "fixture must have 50 rows");

  LabelSummary summary = label_records(rows);
  REQUIRE(summary.positives == 10, "positives " + std::to_string(summary.positives));
  REQUIRE(summary.negatives == 10, "negatives " + std::to_string(summary.negatives));
  REQUIRE(summary.dropped == 10, "dropped " + std::to_string(summary.dropped));
  REQUIRE(summary.records.size() == 20, "labeled record count");

  // threshold is strict: > 10 positive, < 0 negative
  LabelSummary eps = label_records({{"x", "y", "c", 10.0 + 1e-9},
                                    {"x", "z", "c", -1e-9},
                                    {"y", "z", "c", 10.0},
                                    {"p", "q", "c", 0.0}});
  REQUIRE(eps.positives == 1 && eps.negatives == 1 && eps.dropped == 2,
          "boundary handling");
  std::cout << "      50-row fixture: 10 positive / 10 negative / 10 dropped\n";
}

// --- criterion 7: grouped split soundness -------------------------------

void criterion_split_soundness() {
  std::vector<SynergyRecord> records;
  const char* drugs[] = {"d1", "d2", "d3", "d4", "d5"};
  const char* cells[] = {"c1", "c2", "c3", "c4", "c5", "c6"};
  std::map<std::string, std::string> tissue{{"c1", "breast"}, {"c2", "breast"},
                                            {"c3", "lung"},   {"c4", "lung"},
                                            {"c5", "colon"},  {"c6", "colon"}};
  int flip = 0;
  for (std::size_t a = 0; a < 5; ++a)
    for (std::size_t b = a + 1; b < 5; ++b)
      for (std::size_t c = 0; c < 6; ++c)
        records.push_back({drugs[a], drugs[b], cells[c],
                           (flip++ % 2) ? 20.0 : -20.0,
                           (flip % 2) ? 0 : 1});

  std::size_t checks = 0;
  {
    SplitPlan plan =
        make_splits(records, SplitProtocol::leave_combination, 0, nullptr, 1);
    for (const auto& fold : plan.folds) {
      std::set<std::pair<std::string, std::string>> held;
      for (std::size_t i : fold.test)
        held.insert(std::minmax(records[i].drug_a, records[i].drug_b));
      for (std::size_t i : fold.train) {
        REQUIRE(!held.count(std::minmax(records[i].drug_a, records[i].drug_b)),
                "combination leaked into train");
        ++checks;
      }
    }
  }
  {
    SplitPlan plan =
        make_splits(records, SplitProtocol::leave_drug, 0, nullptr, 1);
    for (const auto& fold : plan.folds) {
      std::set<std::string> held;
      for (std::size_t i : fold.test) {
        held.insert(records[i].drug_a);
        held.insert(records[i].drug_b);
      }
      // the held-out drug is the one common to every test record
      std::set<std::string> common = held;
      for (std::size_t i : fold.test) {
        std::set<std::string> here{records[i].drug_a, records[i].drug_b};
        std::set<std::string> kept;
        for (const std::string& d : common)
          if (here.count(d)) kept.insert(d);
        common = kept;
      }
      REQUIRE(common.size() == 1, "exactly one held-out drug per fold");
      for (std::size_t i : fold.train) {
        REQUIRE(!common.count(records[i].drug_a) &&
                    !common.count(records[i].drug_b),
                "drug leaked into train");
        ++checks;
      }
    }
  }
  {
    SplitPlan plan =
        make_splits(records, SplitProtocol::leave_cell_line, 0, nullptr, 1);
    for (const auto& fold : plan.folds) {
      std::set<std::string> held;
      for (std::size_t i : fold.test) held.insert(records[i].cell_id);
      REQUIRE(held.size() == 1, "one held-out cell per fold");
      for (std::size_t i : fold.train) {
        REQUIRE(!held.count(records[i].cell_id), "cell leaked into train");
        ++checks;
      }
    }
  }
  {
    SplitPlan plan =
        make_splits(records, SplitProtocol::leave_tissue, 0, &tissue, 1);
    REQUIRE(plan.folds.size() == 3, "one fold per tissue");
    for (const auto& fold : plan.folds) {
      std::set<std::string> held;
      for (std::size_t i : fold.test) held.insert(tissue.at(records[i].cell_id));
      REQUIRE(held.size() == 1, "one held-out tissue per fold");
      for (std::size_t i : fold.train) {
        REQUIRE(!held.count(tissue.at(records[i].cell_id)),
                "tissue leaked into train");
        ++checks;
      }
    }
  }
  std::cout << "      " << checks << " train-side records verified leak-free\n";
}

// --- criterion 8: determinism & checkpoint --------------------------------

void criterion_determinism() {
  auto prep = testing::prepare_synthetic(99, 300, 100);
  auto run = [&] {
    DeepDdsModel model = init_model(
        testing::reduced_config(EncoderKind::gcn, 13), prep.data.gene_list);
    model.normalization = prep.stats;
    TrainConfig config;
    config.max_epochs = 5;
    config.patience = 5;
    config.batch_size = 64;
    config.seed = 31;
    return fit(model, prep.train, prep.val, config);
  };
  auto [cp1, report1] = run();
  auto [cp2, report2] = run();
  REQUIRE(train_report_to_json(report1, false) ==
              train_report_to_json(report2, false),
          "reports differ across identical runs");
  REQUIRE(cp1.tensors.size() == cp2.tensors.size(), "tensor counts differ");
  for (std::size_t i = 0; i < cp1.tensors.size(); ++i)
    REQUIRE(cp1.tensors[i].values == cp2.tensors[i].values,
            "checkpoint payloads differ");

  // save -> load -> eval must be bit-identical to pre-save eval
  DeepDdsModel pre_save = model_from_checkpoint(cp1);
  const std::string path =
      (std::filesystem::temp_directory_path() / "dds_acceptance.ckpt").string();
  write_checkpoint(cp1, path);
  DeepDdsModel loaded = load_checkpoint(path);
  std::filesystem::remove(path);

  std::vector<double> before =
      score_samples(pre_save, prep.val.samples, 64);
  std::vector<double> after = score_samples(loaded, prep.val.samples, 64);
  REQUIRE(before.size() == after.size(), "score counts differ");
  for (std::size_t i = 0; i < before.size(); ++i)
    REQUIRE(before[i] == after[i], "eval scores differ after round-trip");
  std::cout << "      identical reports, payloads, and round-trip scores\n";
}

// --- criterion 9: conditional benchmark corpus ----------------------------

bool criterion_benchmark(bool& skipped) {
  const char* env = std::getenv("DDS_BENCHMARK_DIR");
  const std::filesystem::path dir = env != nullptr ? env : "data/oneil";
  const auto need = {"drugs.csv", "expression.csv", "genes.txt", "synergy.csv"};
  for (const char* name : need) {
    if (!std::filesystem::exists(dir / name)) {
      skipped = true;
      return true;
    }
  }

  auto drugs = load_drugs((dir / "drugs.csv").string());
  REQUIRE(drugs.size() == 36, "expected 36 drugs, got " +
                                  std::to_string(drugs.size()));
  ExpressionTable expression = load_expression_from_files(
      (dir / "expression.csv").string(), (dir / "genes.txt").string());
  REQUIRE(expression.genes.size() == 954,
          "expected a 954-gene intersection, got " +
              std::to_string(expression.genes.size()));
  LabelSummary summary = label_records(load_synergy((dir / "synergy.csv").string()));
  REQUIRE(summary.records.size() == 12415,
          "expected 12415 labeled triplets, got " +
              std::to_string(summary.records.size()));

  // 2000-sample subsampled smoke run: epoch-20 loss <= 50% of epoch-1
  Rng rng(17);
  std::vector<std::size_t> order(summary.records.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  std::vector<SynergyRecord> subsample;
  for (std::size_t i = 0; i < 2000; ++i)
    subsample.push_back(summary.records[order[i]]);

  std::set<std::string> cells;
  for (const SynergyRecord& r : subsample) cells.insert(r.cell_id);
  std::vector<CellLineProfile> train_profiles;
  for (const std::string& c : cells)
    train_profiles.push_back(expression.profiles.at(c));
  NormStats stats = fit_normalizer(train_profiles);
  std::map<std::string, CellLineProfile> normalized;
  for (const auto& [id, profile] : expression.profiles)
    normalized.emplace(id, apply_normalizer(stats, profile));

  std::vector<SynergyRecord> train_records(subsample.begin(),
                                           subsample.end() - 200);
  std::vector<SynergyRecord> val_records(subsample.end() - 200,
                                         subsample.end());
  ResolvedDataset train_set = resolve_dataset(train_records, drugs, normalized);
  ResolvedDataset val_set = resolve_dataset(val_records, drugs, normalized);

  DeepDdsModel model = init_model(
      testing::reduced_config(EncoderKind::gcn, 3), expression.genes);
  model.normalization = stats;
  TrainConfig config;
  config.max_epochs = 20;
  config.patience = 20;
  config.seed = 3;
  auto [checkpoint, report] = fit(model, train_set, val_set, config);
  REQUIRE(report.epochs.size() == 20, "smoke run must reach epoch 20");
  const double first = report.epochs.front().train_loss;
  const double at20 = report.epochs.back().train_loss;
  REQUIRE(at20 <= 0.5 * first,
          "epoch-20 loss " + std::to_string(at20) + " vs epoch-1 " +
              std::to_string(first));
  std::cout << "      corpus shape verified; loss " << first << " -> " << at20
            << "\n";
  return true;
}

// --- criterion 10: interpretability ---------------------------------------

void criterion_interpretability() {
  // symmetry + unit diagonal on real encoder embeddings
  DeepDdsModel model = init_model(
      testing::reduced_config(EncoderKind::gat, 5), {"G0", "G1"});
  Rng rng(55);
  for (int trial = 0; trial < 10; ++trial) {
    MolGraph drug = random_molgraph(rng, 4 + rng.below(10));
    AtomCorrelationMatrix m = intra_corr(atom_embeddings(model, drug), drug);
    for (std::size_t i = 0; i < m.rows; ++i) {
      REQUIRE(std::fabs(m.at(i, i) - 1.0) <= 1e-12, "diagonal not unit");
      for (std::size_t j = 0; j < m.cols; ++j) {
        REQUIRE(std::fabs(m.at(i, j) - m.at(j, i)) <= 1e-12, "asymmetry");
        REQUIRE(m.at(i, j) >= -1.0 - 1e-12 && m.at(i, j) <= 1.0 + 1e-12,
                "entry outside [-1, 1]");
      }
    }
  }

  // planted two-cluster embeddings reorder into contiguous blocks
  const std::size_t n = 14, width = 8;
  std::vector<double> prototype_a(width), prototype_b(width);
  for (std::size_t j = 0; j < width; ++j) {
    prototype_a[j] = (j < width / 2) ? 1.0 : -1.0;
    prototype_b[j] = (j % 2 == 0) ? 1.0 : -1.0;
  }
  std::vector<double> embeddings(n * width);
  std::vector<int> membership(n);
  for (std::size_t i = 0; i < n; ++i) {
    membership[i] = static_cast<int>(i % 2);  // interleaved on purpose
    const auto& prototype = membership[i] ? prototype_b : prototype_a;
    for (std::size_t j = 0; j < width; ++j)
      embeddings[i * width + j] = prototype[j] + rng.uniform(-0.05, 0.05);
  }
  MolGraph fake;
  for (std::size_t i = 0; i < n; ++i) {
    Atom atom;
    atom.element = "C";
    fake.atoms.push_back(atom);
  }
  fake.hydrogens_assigned = true;
  AtomCorrelationMatrix planted =
      intra_corr(Tensor::matrix(n, width, embeddings), fake);
  std::vector<std::size_t> order = cluster_order(planted);

  std::vector<std::size_t> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < n; ++i)
    REQUIRE(sorted[i] == i, "order is not a permutation");
  std::size_t switches = 0;
  for (std::size_t i = 1; i < n; ++i)
    switches += membership[order[i]] != membership[order[i - 1]];
  REQUIRE(switches == 1, "clusters are not contiguous (" +
                             std::to_string(switches) + " switches)");
  std::cout << "      matrices symmetric; planted clusters separated\n";
}

struct Criterion {
  std::string name;
  std::function<void(bool&)> run;
};

}  // namespace

int main() {
  std::vector<Criterion> criteria{
      {"gradient suite (GCN/GAT/dense/softmax-CE, 20 seeds, <=1e-4)",
       [](bool&) { criterion_gradients(); }},
      {"permutation invariance (100 graphs, both encoders, <=1e-9)",
       [](bool&) { criterion_permutation(); }},
      {"metric oracle (500 ROC cases to 1e-12, 100 exact confusions)",
       [](bool&) { criterion_metric_oracle(); }},
      {"synthetic learnability (val AUC >= 0.95, both encoders)",
       [](bool&) { criterion_learnability(); }},
      {"order-augmentation score correlation (Pearson >= 0.9)",
       [](bool&) { criterion_order_augmentation(); }},
      {"label pipeline (50-row fixture, exact counts, thresholds 10/0)",
       [](bool&) { criterion_label_pipeline(); }},
      {"split soundness (no leakage across four grouped protocols)",
       [](bool&) { criterion_split_soundness(); }},
      {"determinism & checkpoint round-trip (bit-identical)",
       [](bool&) { criterion_determinism(); }},
      {"benchmark corpus shape + smoke run (needs user-supplied data)",
       [](bool& skipped) { criterion_benchmark(skipped); }},
      {"interpretability (symmetric matrices, planted clusters)",
       [](bool&) { criterion_interpretability(); }},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = Clock::now();
    bool skipped = false;
    std::string error;
    try {
      criteria[i].run(skipped);
    } catch (const Failure& f) {
      error = f.message;
    } catch (const std::exception& e) {
      error = e.what();
    }
    const double elapsed = seconds_since(start);
    if (!error.empty()) {
      ++failures;
      std::cout << "[FAIL] " << (i + 1) << ". " << criteria[i].name << " — "
                << error << " (" << elapsed << " s)\n";
    } else if (skipped) {
      std::cout << "[SKIP] " << (i + 1) << ". " << criteria[i].name
                << " — benchmark files not present\n";
    } else {
      std::cout << "[PASS] " << (i + 1) << ". " << criteria[i].name << " ("
                << elapsed << " s)\n";
    }
  }
  std::cout << (failures == 0 ? "acceptance: all criteria passed"
                              : "acceptance: FAILURES present")
            << "\n";
  return failures;
}
