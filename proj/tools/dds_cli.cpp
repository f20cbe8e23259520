// SPDX-License-Identifier: Apache-2.0

// Command-line front end: featurize, split, train, eval, rank, interpret.
// Exit codes: 0 success, 2 domain/data error, 3 I/O error.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "dds/checkpoint.hpp"
#include "dds/data.hpp"
#include "dds/error.hpp"
#include "dds/interpret.hpp"
#include "dds/metrics.hpp"
#include "dds/net.hpp"
#include "dds/train.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitDomain = 2;
constexpr int kExitIo = 3;

struct GlobalOptions {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_overridden = false;
  std::size_t threads = 1;
  bool quiet = false;
};

// Full training run configuration; file keys mirror the field names and
// unknown keys are rejected.
struct RunConfig {
  dds::ModelConfig model;
  dds::TrainConfig train;
  std::string drugs_csv;
  std::string expression_csv;
  std::string genes_txt;
  std::string synergy_csv;
  std::string tissue_csv;
  std::string val_csv;
  std::string split_json;
  std::optional<std::size_t> fold;
  double val_fraction = 0.2;
  std::string checkpoint_out = "model.dds";
  std::string report_out = "train_report.json";
  std::string init_checkpoint_out;
};

json run_config_to_json(const RunConfig& config) {
  json doc{{"encoder", dds::encoder_kind_name(config.model.encoder)},
           {"gcn_hidden", config.model.gcn_hidden},
           {"gat_hidden", config.model.gat_hidden},
           {"gat_heads", config.model.gat_heads},
           {"mlp_hidden", config.model.mlp_hidden},
           {"fc_hidden", config.model.fc_hidden},
           {"dropout", config.model.dropout},
           {"learning_rate", config.train.learning_rate},
           {"lambda", config.train.lambda},
           {"batch_size", config.train.batch_size},
           {"max_epochs", config.train.max_epochs},
           {"patience", config.train.patience},
           {"seed", config.train.seed},
           {"order_augment", config.train.order_augment},
           {"adam_beta1", config.train.adam_beta1},
           {"adam_beta2", config.train.adam_beta2},
           {"adam_epsilon", config.train.adam_epsilon},
           {"drugs_csv", config.drugs_csv},
           {"expression_csv", config.expression_csv},
           {"genes_txt", config.genes_txt},
           {"synergy_csv", config.synergy_csv},
           {"val_fraction", config.val_fraction},
           {"checkpoint_out", config.checkpoint_out},
           {"report_out", config.report_out},
           {"init_checkpoint_out", config.init_checkpoint_out}};
  if (!config.tissue_csv.empty()) doc["tissue_csv"] = config.tissue_csv;
  if (!config.val_csv.empty()) doc["val_csv"] = config.val_csv;
  if (!config.split_json.empty()) doc["split_json"] = config.split_json;
  if (config.fold) doc["fold"] = *config.fold;
  return doc;
}

RunConfig parse_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw dds::Error(dds::ErrorCode::Io, "cannot open " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw dds::Error(dds::ErrorCode::BadConfig,
                     std::string("config is not valid JSON: ") + e.what());
  }

  static const std::set<std::string> known{
      "encoder",        "gcn_hidden",   "gat_hidden",   "gat_heads",
      "mlp_hidden",     "fc_hidden",    "dropout",      "learning_rate",
      "lambda",         "batch_size",   "max_epochs",   "patience",
      "seed",           "order_augment", "adam_beta1",  "adam_beta2",
      "adam_epsilon",   "drugs_csv",    "expression_csv", "genes_txt",
      "synergy_csv",    "tissue_csv",   "val_csv",      "split_json",
      "fold",           "val_fraction", "checkpoint_out", "report_out",
      "init_checkpoint_out"};
  for (const auto& [key, value] : doc.items())
    if (!known.count(key))
      throw dds::Error(dds::ErrorCode::BadConfig,
                       "unknown config key '" + key + "'");

  RunConfig config;
  try {
    if (doc.count("encoder"))
      config.model.encoder =
          dds::encoder_kind_from_name(doc["encoder"].get<std::string>());
    auto widths = [&doc](const char* key, std::vector<std::size_t>& out) {
      if (doc.count(key)) out = doc[key].get<std::vector<std::size_t>>();
    };
    widths("gcn_hidden", config.model.gcn_hidden);
    widths("gat_hidden", config.model.gat_hidden);
    widths("mlp_hidden", config.model.mlp_hidden);
    widths("fc_hidden", config.model.fc_hidden);
    if (doc.count("gat_heads"))
      config.model.gat_heads = doc["gat_heads"].get<std::size_t>();
    if (doc.count("dropout"))
      config.model.dropout = doc["dropout"].get<double>();
    if (doc.count("learning_rate"))
      config.train.learning_rate = doc["learning_rate"].get<double>();
    if (doc.count("lambda")) config.train.lambda = doc["lambda"].get<double>();
    if (doc.count("batch_size"))
      config.train.batch_size = doc["batch_size"].get<std::size_t>();
    if (doc.count("max_epochs"))
      config.train.max_epochs = doc["max_epochs"].get<std::size_t>();
    if (doc.count("patience"))
      config.train.patience = doc["patience"].get<std::size_t>();
    if (doc.count("seed"))
      config.train.seed = doc["seed"].get<std::uint64_t>();
    if (doc.count("order_augment"))
      config.train.order_augment = doc["order_augment"].get<bool>();
    if (doc.count("adam_beta1"))
      config.train.adam_beta1 = doc["adam_beta1"].get<double>();
    if (doc.count("adam_beta2"))
      config.train.adam_beta2 = doc["adam_beta2"].get<double>();
    if (doc.count("adam_epsilon"))
      config.train.adam_epsilon = doc["adam_epsilon"].get<double>();
    auto text = [&doc](const char* key, std::string& out) {
      if (doc.count(key)) out = doc[key].get<std::string>();
    };
    text("drugs_csv", config.drugs_csv);
    text("expression_csv", config.expression_csv);
    text("genes_txt", config.genes_txt);
    text("synergy_csv", config.synergy_csv);
    text("tissue_csv", config.tissue_csv);
    text("val_csv", config.val_csv);
    text("split_json", config.split_json);
    if (doc.count("fold")) config.fold = doc["fold"].get<std::size_t>();
    if (doc.count("val_fraction"))
      config.val_fraction = doc["val_fraction"].get<double>();
    text("checkpoint_out", config.checkpoint_out);
    text("report_out", config.report_out);
    text("init_checkpoint_out", config.init_checkpoint_out);
  } catch (const json::exception& e) {
    throw dds::Error(dds::ErrorCode::BadConfig,
                     std::string("bad config value: ") + e.what());
  }

  for (const auto& [name, value] :
       {std::pair<const char*, const std::string*>{"drugs_csv", &config.drugs_csv},
        {"expression_csv", &config.expression_csv},
        {"genes_txt", &config.genes_txt},
        {"synergy_csv", &config.synergy_csv}}) {
    if (value->empty())
      throw dds::Error(dds::ErrorCode::BadConfig,
                       std::string("config is missing required key '") + name +
                           "'");
  }
  if (config.val_fraction <= 0.0 || config.val_fraction >= 1.0)
    throw dds::Error(dds::ErrorCode::BadConfig,
                     "val_fraction must lie in (0, 1)");
  if (config.init_checkpoint_out.empty())
    config.init_checkpoint_out = config.checkpoint_out + ".init";
  config.model.seed = config.train.seed;
  return config;
}

std::string config_comment(const json& doc) {
  return "# config: " + doc.dump() + "\n";
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw dds::Error(dds::ErrorCode::Io, "cannot write " + path);
  out << content;
  if (!out) throw dds::Error(dds::ErrorCode::Io, "short write to " + path);
}

// --- featurize -------------------------------------------------------------

int cmd_featurize(const std::string& drugs_path, const std::string& out_path,
                  const GlobalOptions& global) {
  std::ifstream in(drugs_path);
  if (!in) {
    std::cerr << "error: cannot open " << drugs_path << "\n";
    return kExitIo;
  }
  in.close();

  // Row-by-row parse so every malformed SMILES is reported with its row.
  std::ostringstream out;
  out << config_comment(json{{"command", "featurize"},
                             {"drugs_csv", drugs_path},
                             {"out", out_path},
                             {"seed", global.seed}});
  out << "drug_id,atom";
  for (std::size_t i = 0; i < dds::kAtomFeatureWidth; ++i) out << ',' << i;
  out << '\n';

  bool any_error = false;
  {
    std::ifstream file(drugs_path);
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    std::size_t id_col = 0, smiles_col = 0;
    while (std::getline(file, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#') continue;
      std::vector<std::string> fields;
      std::string field;
      for (char c : line) {
        if (c == ',') {
          fields.push_back(field);
          field.clear();
        } else if (c != '\r') {
          field.push_back(c);
        }
      }
      fields.push_back(field);
      if (!header_seen) {
        header_seen = true;
        auto find = [&fields](const std::string& name) -> std::optional<std::size_t> {
          for (std::size_t i = 0; i < fields.size(); ++i)
            if (fields[i] == name) return i;
          return std::nullopt;
        };
        auto id = find("drug_id"), smiles = find("smiles");
        if (!id || !smiles) {
          std::cerr << "error: drugs file needs drug_id and smiles columns\n";
          return kExitDomain;
        }
        id_col = *id;
        smiles_col = *smiles;
        continue;
      }
      if (fields.size() <= std::max(id_col, smiles_col)) {
        std::cerr << "row " << lineno << ": too few columns\n";
        any_error = true;
        continue;
      }
      try {
        dds::MolGraph mol = dds::mol_from_smiles(fields[smiles_col]);
        dds::Tensor features = dds::featurize(mol);
        for (std::size_t a = 0; a < features.rows(); ++a) {
          out << fields[id_col] << ',' << a;
          for (std::size_t j = 0; j < features.cols(); ++j)
            out << ',' << features.at(a, j);
          out << '\n';
        }
      } catch (const dds::Error& e) {
        std::cerr << "row " << lineno << ": " << e.what() << "\n";
        any_error = true;
      }
    }
  }
  write_text_file(out_path, out.str());
  return any_error ? kExitDomain : kExitOk;
}

// --- split -------------------------------------------------------------

int cmd_split(const std::string& synergy_path, const std::string& out_path,
              const std::string& protocol_name, std::size_t k,
              const std::string& tissue_path, const GlobalOptions& global) {
  dds::LabelSummary summary =
      dds::label_records(dds::load_synergy(synergy_path));
  const dds::SplitProtocol protocol =
      dds::split_protocol_from_name(protocol_name);

  std::map<std::string, std::string> tissue;
  if (!tissue_path.empty()) tissue = dds::load_tissue_map(tissue_path);
  if (protocol == dds::SplitProtocol::leave_tissue && tissue_path.empty())
    throw dds::Error(dds::ErrorCode::DegenerateSplit,
                     "leave_tissue needs --tissue");

  dds::SplitPlan plan = dds::make_splits(
      summary.records, protocol, k,
      tissue_path.empty() ? nullptr : &tissue, global.seed);

  json doc = json::parse(dds::split_plan_to_json(plan));
  doc["config"] = json{{"command", "split"},
                       {"synergy_csv", synergy_path},
                       {"protocol", protocol_name},
                       {"k", k},
                       {"seed", global.seed},
                       {"records", summary.records.size()},
                       {"positives", summary.positives},
                       {"negatives", summary.negatives},
                       {"dropped", summary.dropped}};
  write_text_file(out_path, doc.dump(2) + "\n");
  if (!global.quiet)
    std::cerr << "split: " << plan.folds.size() << " folds over "
              << summary.records.size() << " records (" << summary.dropped
              << " dropped)\n";
  return kExitOk;
}

// --- train -------------------------------------------------------------

struct LoadedData {
  std::map<std::string, dds::MolGraph> drugs;
  dds::ExpressionTable expression;
  dds::LabelSummary summary;
};

LoadedData load_tables(const std::string& drugs_csv,
                       const std::string& expression_csv,
                       const std::vector<std::string>& gene_list,
                       const std::string& synergy_csv) {
  LoadedData data;
  data.drugs = dds::load_drugs(drugs_csv);
  data.expression = dds::load_expression(expression_csv, gene_list);
  data.summary = dds::label_records(dds::load_synergy(synergy_csv));
  return data;
}

int cmd_train(const std::string& config_path, const GlobalOptions& global) {
  RunConfig config = parse_run_config(config_path);
  if (global.seed_overridden) {
    config.train.seed = global.seed;
    config.model.seed = global.seed;
  }
  const json effective = run_config_to_json(config);

  LoadedData data =
      load_tables(config.drugs_csv, config.expression_csv,
                  dds::load_gene_list(config.genes_txt), config.synergy_csv);

  // train/val record split
  std::vector<dds::SynergyRecord> train_records, val_records;
  if (!config.val_csv.empty()) {
    train_records = data.summary.records;
    val_records = dds::label_records(dds::load_synergy(config.val_csv)).records;
  } else if (!config.split_json.empty()) {
    std::ifstream in(config.split_json);
    if (!in)
      throw dds::Error(dds::ErrorCode::Io, "cannot open " + config.split_json);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    dds::SplitPlan plan = dds::split_plan_from_json(text);
    const std::size_t fold = config.fold.value_or(0);
    if (fold >= plan.folds.size())
      throw dds::Error(dds::ErrorCode::BadConfig, "fold index out of range");
    for (std::size_t i : plan.folds[fold].train)
      train_records.push_back(data.summary.records.at(i));
    for (std::size_t i : plan.folds[fold].test)
      val_records.push_back(data.summary.records.at(i));
  } else {
    std::vector<std::size_t> order(data.summary.records.size());
    std::iota(order.begin(), order.end(), 0);
    dds::Rng rng(dds::Rng::mix(config.train.seed, 0x7a11));
    rng.shuffle(order);
    const std::size_t val_count = std::max<std::size_t>(
        1, static_cast<std::size_t>(
               std::llround(config.val_fraction *
                            static_cast<double>(order.size()))));
    for (std::size_t i = 0; i < order.size(); ++i)
      (i < val_count ? val_records : train_records)
          .push_back(data.summary.records[order[i]]);
  }

  // normalizer statistics from training cells only
  std::set<std::string> train_cells;
  for (const dds::SynergyRecord& r : train_records) train_cells.insert(r.cell_id);
  std::vector<dds::CellLineProfile> train_profiles;
  for (const std::string& cell : train_cells) {
    auto it = data.expression.profiles.find(cell);
    if (it == data.expression.profiles.end())
      throw dds::Error(dds::ErrorCode::UnknownCell,
                       "cell '" + cell + "' not in expression table");
    train_profiles.push_back(it->second);
  }
  dds::NormStats stats = dds::fit_normalizer(train_profiles);
  std::map<std::string, dds::CellLineProfile> normalized;
  for (const auto& [id, profile] : data.expression.profiles)
    normalized.emplace(id, dds::apply_normalizer(stats, profile));

  dds::DeepDdsModel model =
      dds::init_model(config.model, data.expression.genes);
  model.normalization = stats;
  dds::save_checkpoint(model, config.init_checkpoint_out, config.train.seed);

  dds::ResolvedDataset train_set =
      dds::resolve_dataset(train_records, data.drugs, normalized);
  dds::ResolvedDataset val_set =
      dds::resolve_dataset(val_records, data.drugs, normalized);

  if (!global.quiet)
    std::cerr << "train: " << train_set.samples.size() << " train / "
              << val_set.samples.size() << " val samples, "
              << data.summary.dropped << " mid-range records dropped\n";

  auto [checkpoint, report] =
      dds::fit(model, train_set, val_set, config.train,
               global.quiet ? nullptr : &std::cerr);
  dds::write_checkpoint(checkpoint, config.checkpoint_out);

  json report_doc = json::parse(
      dds::train_report_to_json(report, /*include_wall_seconds=*/false));
  report_doc["config"] = effective;
  report_doc["label_counts"] = json{{"positives", data.summary.positives},
                                    {"negatives", data.summary.negatives},
                                    {"dropped", data.summary.dropped}};
  write_text_file(config.report_out, report_doc.dump(2) + "\n");
  if (!global.quiet)
    std::cerr << "train: best epoch " << report.best_epoch << " val_auc "
              << report.best_val_auc << " wall " << report.wall_seconds
              << "s\n";
  return kExitOk;
}

// --- eval -------------------------------------------------------------

int cmd_eval(const std::string& checkpoint_path, const std::string& drugs_csv,
             const std::string& expression_csv, const std::string& synergy_csv,
             const std::string& split_path, std::optional<std::size_t> fold,
             const std::string& out_path, const GlobalOptions& global) {
  dds::DeepDdsModel model = dds::load_checkpoint(checkpoint_path);
  LoadedData data =
      load_tables(drugs_csv, expression_csv, model.gene_list, synergy_csv);
  if (data.expression.genes != model.gene_list)
    throw dds::Error(dds::ErrorCode::GeneMismatch,
                     "expression table does not cover the checkpoint gene list");

  std::vector<dds::SynergyRecord> records;
  if (!split_path.empty()) {
    std::ifstream in(split_path);
    if (!in) throw dds::Error(dds::ErrorCode::Io, "cannot open " + split_path);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    dds::SplitPlan plan = dds::split_plan_from_json(text);
    const std::size_t f = fold.value_or(0);
    if (f >= plan.folds.size())
      throw dds::Error(dds::ErrorCode::BadConfig, "fold index out of range");
    for (std::size_t i : plan.folds[f].test)
      records.push_back(data.summary.records.at(i));
  } else {
    records = data.summary.records;
  }

  std::map<std::string, dds::CellLineProfile> normalized;
  for (const auto& [id, profile] : data.expression.profiles)
    normalized.emplace(id, dds::apply_normalizer(model.normalization, profile));
  dds::ResolvedDataset dataset =
      dds::resolve_dataset(records, data.drugs, normalized);

  std::vector<double> scores = dds::score_samples(
      model, std::span<const dds::SampleRef>(dataset.samples), 128);
  dds::MetricReport metrics = dds::evaluate(scores, dataset.labels);

  json doc = json::parse(dds::metric_report_to_json(metrics));
  doc["config"] = json{{"command", "eval"},
                       {"checkpoint", checkpoint_path},
                       {"drugs_csv", drugs_csv},
                       {"expression_csv", expression_csv},
                       {"synergy_csv", synergy_csv},
                       {"split", split_path},
                       {"fold", fold.value_or(0)},
                       {"samples", dataset.samples.size()},
                       {"seed", global.seed}};
  write_text_file(out_path, doc.dump(2) + "\n");
  if (!global.quiet)
    std::cerr << "eval: roc_auc " << metrics.roc_auc << " over "
              << dataset.samples.size() << " samples\n";
  return kExitOk;
}

// --- rank -------------------------------------------------------------

int cmd_rank(const std::string& checkpoint_path, const std::string& drugs_csv,
             const std::string& expression_csv,
             const std::string& candidates_csv, const std::string& cell_id,
             std::size_t top_k, const std::string& out_path,
             const GlobalOptions& global) {
  dds::DeepDdsModel model = dds::load_checkpoint(checkpoint_path);
  auto drugs = dds::load_drugs(drugs_csv);
  dds::ExpressionTable expression =
      dds::load_expression(expression_csv, model.gene_list);
  if (expression.genes != model.gene_list)
    throw dds::Error(dds::ErrorCode::GeneMismatch,
                     "expression table does not cover the checkpoint gene list");
  auto cell_it = expression.profiles.find(cell_id);
  if (cell_it == expression.profiles.end())
    throw dds::Error(dds::ErrorCode::UnknownCell,
                     "cell '" + cell_id + "' not in expression table");
  const dds::CellLineProfile cell =
      dds::apply_normalizer(model.normalization, cell_it->second);

  const auto pairs = dds::load_pairs(candidates_csv);
  for (const auto& [a, b] : pairs) {
    if (!drugs.count(a))
      throw dds::Error(dds::ErrorCode::UnknownDrug, "drug '" + a + "' unknown");
    if (!drugs.count(b))
      throw dds::Error(dds::ErrorCode::UnknownDrug, "drug '" + b + "' unknown");
  }

  // Both slot orders are scored and averaged.
  std::vector<dds::SampleRef> samples;
  samples.reserve(pairs.size() * 2);
  for (const auto& [a, b] : pairs) {
    samples.push_back({&drugs.at(a), &drugs.at(b), &cell});
    samples.push_back({&drugs.at(b), &drugs.at(a), &cell});
  }

  std::vector<double> scores(samples.size());
  const std::size_t threads =
      std::max<std::size_t>(1, std::min(global.threads, samples.size()));
  if (threads == 1) {
    scores = dds::score_samples(
        model, std::span<const dds::SampleRef>(samples), 128);
  } else {
    std::vector<std::thread> workers;
    const std::size_t chunk = (samples.size() + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
      workers.emplace_back([&, t] {
        const std::size_t begin = t * chunk;
        const std::size_t end = std::min(begin + chunk, samples.size());
        if (begin >= end) return;
        std::vector<double> part = dds::score_samples(
            model,
            std::span<const dds::SampleRef>(samples.data() + begin,
                                            end - begin),
            128);
        std::copy(part.begin(), part.end(), scores.begin() + begin);
      });
    }
    for (std::thread& w : workers) w.join();
  }

  struct Ranked {
    std::string a, b;
    double score;
  };
  std::vector<Ranked> ranked;
  for (std::size_t i = 0; i < pairs.size(); ++i)
    ranked.push_back(
        {pairs[i].first, pairs[i].second,
         0.5 * (scores[2 * i] + scores[2 * i + 1])});
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const Ranked& x, const Ranked& y) {
                     if (x.score != y.score) return x.score > y.score;
                     return std::tie(x.a, x.b) < std::tie(y.a, y.b);
                   });
  if (top_k > 0 && top_k < ranked.size()) ranked.resize(top_k);

  std::ostringstream out;
  out << config_comment(json{{"command", "rank"},
                             {"checkpoint", checkpoint_path},
                             {"candidates_csv", candidates_csv},
                             {"cell", cell_id},
                             {"top_k", top_k},
                             {"pairs", pairs.size()},
                             {"seed", global.seed}});
  out << "drug_a,drug_b,cell,score\n";
  out.precision(17);
  for (const Ranked& r : ranked)
    out << r.a << ',' << r.b << ',' << cell_id << ',' << r.score << '\n';
  write_text_file(out_path, out.str());
  if (!global.quiet)
    std::cerr << "rank: scored " << pairs.size() << " pairs on " << cell_id
              << "\n";
  return kExitOk;
}

// --- interpret -------------------------------------------------------------

int cmd_interpret(const std::string& checkpoint_path,
                  const std::string& drugs_csv, const std::string& drug_a,
                  const std::string& drug_b, const std::string& outdir,
                  const GlobalOptions& global) {
  dds::DeepDdsModel model = dds::load_checkpoint(checkpoint_path);
  auto drugs = dds::load_drugs(drugs_csv);
  for (const std::string& id : {drug_a, drug_b})
    if (!drugs.count(id))
      throw dds::Error(dds::ErrorCode::UnknownDrug, "drug '" + id + "' unknown");

  std::filesystem::create_directories(outdir);
  const json config{{"command", "interpret"},
                    {"checkpoint", checkpoint_path},
                    {"drug_a", drug_a},
                    {"drug_b", drug_b},
                    {"seed", global.seed}};

  dds::Tensor emb_a = dds::atom_embeddings(model, drugs.at(drug_a));
  dds::Tensor emb_b = dds::atom_embeddings(model, drugs.at(drug_b));
  dds::AtomCorrelationMatrix intra_a = dds::intra_corr(emb_a, drugs.at(drug_a));
  dds::AtomCorrelationMatrix intra_b = dds::intra_corr(emb_b, drugs.at(drug_b));
  dds::AtomCorrelationMatrix inter =
      dds::inter_corr(emb_a, drugs.at(drug_a), emb_b, drugs.at(drug_b));

  auto out_file = [&outdir](const std::string& name) {
    return (std::filesystem::path(outdir) / name).string();
  };
  const std::string comment = config_comment(config);
  write_text_file(out_file("intra_" + drug_a + ".csv"),
                  comment + dds::correlation_to_csv(intra_a));
  write_text_file(out_file("intra_" + drug_b + ".csv"),
                  comment + dds::correlation_to_csv(intra_b));
  write_text_file(out_file("inter_" + drug_a + "_" + drug_b + ".csv"),
                  comment + dds::correlation_to_csv(inter));

  json ordering{{"config", config},
                {"drug_a", drug_a},
                {"drug_b", drug_b},
                {"order_a", dds::cluster_order(intra_a)},
                {"order_b", dds::cluster_order(intra_b)},
                {"masked_a", std::vector<bool>(intra_a.row_masked.begin(),
                                               intra_a.row_masked.end())},
                {"masked_b", std::vector<bool>(intra_b.row_masked.begin(),
                                               intra_b.row_masked.end())}};
  write_text_file(out_file("ordering.json"), ordering.dump(2) + "\n");
  if (!global.quiet)
    std::cerr << "interpret: wrote 3 matrices + ordering to " << outdir << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Drug-pair synergy prediction over molecular graphs and expression "
      "profiles"};
  app.require_subcommand(1);

  GlobalOptions global;
  app.add_option("--config", global.config, "Run config JSON (used by train)");
  app.add_option("--seed", global.seed, "Seed override")
      ->each([&global](const std::string&) { global.seed_overridden = true; });
  app.add_option("--threads", global.threads, "Worker threads for scoring");
  app.add_flag("--quiet", global.quiet, "Suppress progress output");

  // featurize
  std::string fz_drugs, fz_out;
  CLI::App* featurize = app.add_subcommand(
      "featurize", "Write per-atom feature rows for every drug");
  featurize->add_option("drugs", fz_drugs, "drugs.csv (drug_id,smiles)")
      ->required();
  featurize->add_option("out", fz_out, "output CSV")->required();

  // split
  std::string sp_synergy, sp_out, sp_protocol = "kfold", sp_tissue;
  std::size_t sp_k = 5;
  CLI::App* split = app.add_subcommand("split", "Generate a split plan");
  split->add_option("synergy", sp_synergy, "synergy.csv")->required();
  split->add_option("out", sp_out, "output JSON")->required();
  split->add_option("--protocol", sp_protocol,
                    "kfold|leave_combination|leave_drug|leave_cell_line|"
                    "leave_tissue");
  split->add_option("--k", sp_k, "fold count for kfold");
  split->add_option("--tissue", sp_tissue, "tissue.csv (cell_id,tissue)");

  // train
  std::string tr_config;
  CLI::App* train = app.add_subcommand("train", "Train a model from a config");
  train->add_option("--config", tr_config, "run config JSON");

  // eval
  std::string ev_checkpoint, ev_drugs, ev_expression, ev_synergy, ev_split,
      ev_out = "metrics.json";
  std::optional<std::size_t> ev_fold;
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval->add_option("--checkpoint", ev_checkpoint)->required();
  eval->add_option("--drugs", ev_drugs)->required();
  eval->add_option("--expression", ev_expression)->required();
  eval->add_option("--synergy", ev_synergy)->required();
  eval->add_option("--split", ev_split, "split plan JSON; evaluates a test fold");
  eval->add_option("--fold", ev_fold, "fold index (default 0)");
  eval->add_option("--out", ev_out);

  // rank
  std::string rk_checkpoint, rk_drugs, rk_expression, rk_candidates, rk_cell,
      rk_out = "ranked.csv";
  std::size_t rk_top_k = 0;
  CLI::App* rank = app.add_subcommand(
      "rank", "Score candidate drug pairs on one cell line");
  rank->add_option("--checkpoint", rk_checkpoint)->required();
  rank->add_option("--drugs", rk_drugs)->required();
  rank->add_option("--expression", rk_expression)->required();
  rank->add_option("--candidates", rk_candidates, "CSV drug_a,drug_b")
      ->required();
  rank->add_option("--cell", rk_cell)->required();
  rank->add_option("--top-k", rk_top_k, "0 keeps the full list");
  rank->add_option("--out", rk_out);

  // interpret
  std::string in_checkpoint, in_drugs, in_drug_a, in_drug_b, in_outdir;
  CLI::App* interpret = app.add_subcommand(
      "interpret", "Atom correlation matrices for one drug pair");
  interpret->add_option("--checkpoint", in_checkpoint)->required();
  interpret->add_option("--drugs", in_drugs)->required();
  interpret->add_option("--drug-a", in_drug_a)->required();
  interpret->add_option("--drug-b", in_drug_b)->required();
  interpret->add_option("--outdir", in_outdir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitDomain;
  }

  try {
    if (featurize->parsed()) return cmd_featurize(fz_drugs, fz_out, global);
    if (split->parsed())
      return cmd_split(sp_synergy, sp_out, sp_protocol, sp_k, sp_tissue, global);
    if (train->parsed()) {
      const std::string& config_path =
          tr_config.empty() ? global.config : tr_config;
      if (config_path.empty())
        throw dds::Error(dds::ErrorCode::BadConfig,
                         "train needs --config (global or subcommand)");
      return cmd_train(config_path, global);
    }
    if (eval->parsed())
      return cmd_eval(ev_checkpoint, ev_drugs, ev_expression, ev_synergy,
                      ev_split, ev_fold, ev_out, global);
    if (rank->parsed())
      return cmd_rank(rk_checkpoint, rk_drugs, rk_expression, rk_candidates,
                      rk_cell, rk_top_k, rk_out, global);
    if (interpret->parsed())
      return cmd_interpret(in_checkpoint, in_drugs, in_drug_a, in_drug_b,
                           in_outdir, global);
  } catch (const dds::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == dds::ErrorCode::Io ? kExitIo : kExitDomain;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDomain;
  }
  return kExitDomain;
}
