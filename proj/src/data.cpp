// SPDX-License-Identifier: Apache-2.0

#include "dds/data.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "csv_util.hpp"
#include "dds/error.hpp"
#include "dds/rng.hpp"

namespace dds {

namespace {

using nlohmann::json;

std::size_t require_column(const csv::Table& table, const std::string& name,
                           const std::string& path) {
  for (std::size_t i = 0; i < table.header.size(); ++i)
    if (table.header[i] == name) return i;
  throw Error(ErrorCode::MissingColumn,
              "column '" + name + "' missing in " + path);
}

// Unordered drug pair plus cell line, the identity of one combination.
std::string triple_key(const std::string& a, const std::string& b,
                       const std::string& cell) {
  const std::string& lo = std::min(a, b);
  const std::string& hi = std::max(a, b);
  return lo + "\x1f" + hi + "\x1f" + cell;
}

}  // namespace

const char* split_protocol_name(SplitProtocol protocol) {
  switch (protocol) {
    case SplitProtocol::kfold: return "kfold";
    case SplitProtocol::leave_combination: return "leave_combination";
    case SplitProtocol::leave_drug: return "leave_drug";
    case SplitProtocol::leave_cell_line: return "leave_cell_line";
    case SplitProtocol::leave_tissue: return "leave_tissue";
  }
  return "kfold";
}

SplitProtocol split_protocol_from_name(const std::string& name) {
  if (name == "kfold") return SplitProtocol::kfold;
  if (name == "leave_combination") return SplitProtocol::leave_combination;
  if (name == "leave_drug") return SplitProtocol::leave_drug;
  if (name == "leave_cell_line") return SplitProtocol::leave_cell_line;
  if (name == "leave_tissue") return SplitProtocol::leave_tissue;
  throw Error(ErrorCode::BadConfig, "unknown split protocol '" + name + "'");
}

std::map<std::string, MolGraph> load_drugs(const std::string& path) {
  csv::Table table = csv::read_table(path);
  const std::size_t id_col = require_column(table, "drug_id", path);
  const std::size_t smiles_col = require_column(table, "smiles", path);
  std::map<std::string, MolGraph> drugs;
  for (const csv::Row& row : table.rows) {
    if (row.fields.size() <= std::max(id_col, smiles_col))
      throw Error(ErrorCode::MissingColumn, "short row in " + path, row.line);
    const std::string& id = row.fields[id_col];
    if (drugs.count(id))
      throw Error(ErrorCode::DuplicateDrugId, "duplicate drug id '" + id + "'",
                  row.line);
    try {
      drugs.emplace(id, mol_from_smiles(row.fields[smiles_col]));
    } catch (const Error& e) {
      throw Error(ErrorCode::ParseError,
                  std::string("drug '") + id + "': " + e.what(), row.line);
    }
  }
  return drugs;
}

std::vector<std::string> load_gene_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::vector<std::string> genes;
  std::string line;
  while (std::getline(in, line)) {
    const std::string gene = csv::trim(line);
    if (!gene.empty() && gene[0] != '#') genes.push_back(gene);
  }
  return genes;
}

ExpressionTable load_expression(const std::string& path,
                                const std::vector<std::string>& gene_list) {
  csv::Table table = csv::read_table(path);
  const std::size_t cell_col = require_column(table, "cell_id", path);

  std::unordered_map<std::string, std::size_t> header_index;
  for (std::size_t i = 0; i < table.header.size(); ++i)
    if (i != cell_col) header_index.emplace(table.header[i], i);

  ExpressionTable out;
  std::vector<std::size_t> columns;
  for (const std::string& gene : gene_list) {
    auto it = header_index.find(gene);
    if (it != header_index.end()) {
      out.genes.push_back(gene);
      columns.push_back(it->second);
    }
  }
  if (out.genes.empty())
    throw Error(ErrorCode::EmptyIntersection,
                "no genes shared between " + path + " and the gene list");

  for (const csv::Row& row : table.rows) {
    if (row.fields.size() < table.header.size())
      throw Error(ErrorCode::MissingValue, "short row in " + path, row.line);
    CellLineProfile profile;
    profile.cell_id = row.fields[cell_col];
    if (out.profiles.count(profile.cell_id))
      throw Error(ErrorCode::DuplicateCellId,
                  "duplicate cell id '" + profile.cell_id + "'", row.line);
    profile.values.reserve(columns.size());
    for (std::size_t col : columns)
      profile.values.push_back(csv::parse_double(row.fields[col], row.line));
    out.profiles.emplace(profile.cell_id, std::move(profile));
  }
  return out;
}

ExpressionTable load_expression_from_files(const std::string& path,
                                           const std::string& gene_list_path) {
  return load_expression(path, load_gene_list(gene_list_path));
}

std::vector<RawSynergy> load_synergy(const std::string& path) {
  csv::Table table = csv::read_table(path);
  const std::size_t a_col = require_column(table, "drug_a", path);
  const std::size_t b_col = require_column(table, "drug_b", path);
  const std::size_t cell_col = require_column(table, "cell_id", path);
  const std::size_t loewe_col = require_column(table, "loewe", path);
  std::vector<RawSynergy> rows;
  rows.reserve(table.rows.size());
  for (const csv::Row& row : table.rows) {
    if (row.fields.size() < table.header.size())
      throw Error(ErrorCode::MissingValue, "short row in " + path, row.line);
    rows.push_back(RawSynergy{row.fields[a_col], row.fields[b_col],
                              row.fields[cell_col],
                              csv::parse_double(row.fields[loewe_col], row.line)});
  }
  return rows;
}

std::map<std::string, std::string> load_tissue_map(const std::string& path) {
  csv::Table table = csv::read_table(path);
  const std::size_t cell_col = require_column(table, "cell_id", path);
  const std::size_t tissue_col = require_column(table, "tissue", path);
  std::map<std::string, std::string> map;
  for (const csv::Row& row : table.rows) {
    if (row.fields.size() <= std::max(cell_col, tissue_col))
      throw Error(ErrorCode::MissingValue, "short row in " + path, row.line);
    map[row.fields[cell_col]] = row.fields[tissue_col];
  }
  return map;
}

std::vector<std::pair<std::string, std::string>> load_pairs(
    const std::string& path) {
  csv::Table table = csv::read_table(path);
  const std::size_t a_col = require_column(table, "drug_a", path);
  const std::size_t b_col = require_column(table, "drug_b", path);
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const csv::Row& row : table.rows) {
    if (row.fields.size() <= std::max(a_col, b_col))
      throw Error(ErrorCode::MissingValue, "short row in " + path, row.line);
    pairs.emplace_back(row.fields[a_col], row.fields[b_col]);
  }
  return pairs;
}

LabelSummary label_records(const std::vector<RawSynergy>& raw) {
  std::vector<std::string> order;
  std::unordered_map<std::string, std::pair<double, std::size_t>> sums;
  std::unordered_map<std::string, const RawSynergy*> first_seen;

  for (const RawSynergy& row : raw) {
    if (row.drug_a == row.drug_b)
      throw Error(ErrorCode::SelfCombination,
                  "drug combined with itself: '" + row.drug_a + "'");
    const std::string key = triple_key(row.drug_a, row.drug_b, row.cell_id);
    auto [it, inserted] = sums.emplace(key, std::make_pair(0.0, 0));
    if (inserted) {
      order.push_back(key);
      first_seen.emplace(key, &row);
    }
    it->second.first += row.loewe;
    it->second.second += 1;
  }

  LabelSummary summary;
  for (const std::string& key : order) {
    const auto& [total, count] = sums.at(key);
    const double mean_score = total / static_cast<double>(count);
    const RawSynergy& origin = *first_seen.at(key);
    SynergyRecord record{origin.drug_a, origin.drug_b, origin.cell_id,
                         mean_score, std::nullopt};
    if (mean_score > 10.0) {
      record.label = 1;
      ++summary.positives;
    } else if (mean_score < 0.0) {
      record.label = 0;
      ++summary.negatives;
    } else {
      ++summary.dropped;
      continue;
    }
    summary.records.push_back(std::move(record));
  }
  return summary;
}

NormStats fit_normalizer(const std::vector<CellLineProfile>& train_profiles) {
  if (train_profiles.size() < 2)
    throw Error(ErrorCode::TooFewProfiles,
                "normalizer needs at least two training profiles");
  const std::size_t width = train_profiles[0].values.size();
  for (const CellLineProfile& p : train_profiles)
    if (p.values.size() != width)
      throw Error(ErrorCode::GeneMismatch,
                  "profile widths disagree while fitting normalizer");

  const double n = static_cast<double>(train_profiles.size());
  NormStats stats;
  stats.mean.assign(width, 0.0);
  stats.stddev.assign(width, 0.0);
  for (const CellLineProfile& p : train_profiles)
    for (std::size_t j = 0; j < width; ++j) stats.mean[j] += p.values[j];
  for (double& m : stats.mean) m /= n;
  for (const CellLineProfile& p : train_profiles)
    for (std::size_t j = 0; j < width; ++j) {
      const double d = p.values[j] - stats.mean[j];
      stats.stddev[j] += d * d;
    }
  for (double& s : stats.stddev) s = std::sqrt(s / n);
  return stats;
}

CellLineProfile apply_normalizer(const NormStats& stats,
                                 const CellLineProfile& profile) {
  if (profile.normalized)
    throw Error(ErrorCode::AlreadyNormalized,
                "profile '" + profile.cell_id + "' is already normalized");
  if (profile.values.size() != stats.mean.size())
    throw Error(ErrorCode::GeneMismatch,
                "profile width does not match normalizer statistics");
  CellLineProfile out;
  out.cell_id = profile.cell_id;
  out.normalized = true;
  out.values.resize(profile.values.size());
  for (std::size_t j = 0; j < profile.values.size(); ++j) {
    out.values[j] = stats.stddev[j] < 1e-8
                        ? 0.0
                        : (profile.values[j] - stats.mean[j]) / stats.stddev[j];
  }
  return out;
}

namespace {

// Grouped protocols hold each distinct key out in turn; keys are taken
// in first-appearance order.
SplitPlan grouped_split(const std::vector<SynergyRecord>& records,
                        SplitProtocol protocol, std::uint64_t seed,
                        const std::function<std::vector<std::string>(
                            const SynergyRecord&)>& keys_of) {
  std::vector<std::string> key_order;
  std::set<std::string> seen;
  std::vector<std::vector<std::string>> record_keys(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    record_keys[i] = keys_of(records[i]);
    for (const std::string& key : record_keys[i])
      if (seen.insert(key).second) key_order.push_back(key);
  }

  SplitPlan plan;
  plan.protocol = protocol;
  plan.seed = seed;
  for (const std::string& held_out : key_order) {
    SplitPlan::Fold fold;
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto& keys = record_keys[i];
      if (std::find(keys.begin(), keys.end(), held_out) != keys.end())
        fold.test.push_back(i);
      else
        fold.train.push_back(i);
    }
    if (fold.train.empty() || fold.test.empty())
      throw Error(ErrorCode::DegenerateSplit,
                  "holding out '" + held_out + "' empties a side");
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

}  // namespace

SplitPlan make_splits(const std::vector<SynergyRecord>& records,
                      SplitProtocol protocol, std::size_t k,
                      const std::map<std::string, std::string>* tissue_map,
                      std::uint64_t seed) {
  if (records.empty())
    throw Error(ErrorCode::DegenerateSplit, "no records to split");

  switch (protocol) {
    case SplitProtocol::kfold: {
      if (k < 2 || k > records.size())
        throw Error(ErrorCode::DegenerateSplit,
                    "k must be in [2, record count]");
      std::vector<std::size_t> order(records.size());
      std::iota(order.begin(), order.end(), 0);
      Rng rng(seed);
      rng.shuffle(order);

      SplitPlan plan;
      plan.protocol = protocol;
      plan.seed = seed;
      const std::size_t base = records.size() / k;
      const std::size_t extra = records.size() % k;
      std::size_t at = 0;
      for (std::size_t f = 0; f < k; ++f) {
        const std::size_t len = base + (f < extra ? 1 : 0);
        SplitPlan::Fold fold;
        fold.test.assign(order.begin() + at, order.begin() + at + len);
        for (std::size_t i = 0; i < at; ++i) fold.train.push_back(order[i]);
        for (std::size_t i = at + len; i < order.size(); ++i)
          fold.train.push_back(order[i]);
        std::sort(fold.test.begin(), fold.test.end());
        std::sort(fold.train.begin(), fold.train.end());
        plan.folds.push_back(std::move(fold));
        at += len;
      }
      return plan;
    }
    case SplitProtocol::leave_combination:
      return grouped_split(records, protocol, seed,
                           [](const SynergyRecord& r) {
                             return std::vector<std::string>{triple_key(
                                 r.drug_a, r.drug_b, "")};
                           });
    case SplitProtocol::leave_drug:
      return grouped_split(records, protocol, seed,
                           [](const SynergyRecord& r) {
                             return std::vector<std::string>{r.drug_a,
                                                             r.drug_b};
                           });
    case SplitProtocol::leave_cell_line:
      return grouped_split(records, protocol, seed,
                           [](const SynergyRecord& r) {
                             return std::vector<std::string>{r.cell_id};
                           });
    case SplitProtocol::leave_tissue: {
      if (tissue_map == nullptr)
        throw Error(ErrorCode::UnknownTissue, "no tissue map provided");
      return grouped_split(
          records, protocol, seed, [tissue_map](const SynergyRecord& r) {
            auto it = tissue_map->find(r.cell_id);
            if (it == tissue_map->end())
              throw Error(ErrorCode::UnknownTissue,
                          "cell '" + r.cell_id + "' has no tissue entry");
            return std::vector<std::string>{it->second};
          });
    }
  }
  throw Error(ErrorCode::BadConfig, "unhandled split protocol");
}

std::string split_plan_to_json(const SplitPlan& plan) {
  json folds = json::array();
  for (const SplitPlan::Fold& fold : plan.folds)
    folds.push_back({{"train", fold.train}, {"test", fold.test}});
  json doc{{"protocol", split_protocol_name(plan.protocol)},
           {"seed", plan.seed},
           {"folds", std::move(folds)}};
  return doc.dump(2);
}

SplitPlan split_plan_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("bad split JSON: ") + e.what());
  }
  SplitPlan plan;
  try {
    plan.protocol = split_protocol_from_name(doc.at("protocol").get<std::string>());
    plan.seed = doc.at("seed").get<std::uint64_t>();
    for (const json& fold_doc : doc.at("folds")) {
      SplitPlan::Fold fold;
      fold.train = fold_doc.at("train").get<std::vector<std::size_t>>();
      fold.test = fold_doc.at("test").get<std::vector<std::size_t>>();
      plan.folds.push_back(std::move(fold));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("bad split JSON: ") + e.what());
  }
  return plan;
}

std::vector<std::vector<BatchSample>> make_batches(std::size_t num_records,
                                                   bool order_augment,
                                                   std::size_t batch_size,
                                                   std::uint64_t seed) {
  if (batch_size == 0)
    throw Error(ErrorCode::BadConfig, "batch_size must be >= 1");
  std::vector<BatchSample> samples;
  samples.reserve(num_records * (order_augment ? 2 : 1));
  for (std::size_t i = 0; i < num_records; ++i) {
    samples.push_back(BatchSample{i, false});
    if (order_augment) samples.push_back(BatchSample{i, true});
  }
  Rng rng(seed);
  rng.shuffle(samples);

  std::vector<std::vector<BatchSample>> batches;
  for (std::size_t at = 0; at < samples.size(); at += batch_size) {
    const std::size_t len = std::min(batch_size, samples.size() - at);
    batches.emplace_back(samples.begin() + at, samples.begin() + at + len);
  }
  return batches;
}

ResolvedDataset resolve_dataset(
    const std::vector<SynergyRecord>& records,
    const std::map<std::string, MolGraph>& drugs,
    const std::map<std::string, CellLineProfile>& profiles) {
  ResolvedDataset out;
  for (const SynergyRecord& record : records) {
    auto a = drugs.find(record.drug_a);
    if (a == drugs.end())
      throw Error(ErrorCode::UnknownDrug,
                  "drug '" + record.drug_a + "' not in drug table");
    auto b = drugs.find(record.drug_b);
    if (b == drugs.end())
      throw Error(ErrorCode::UnknownDrug,
                  "drug '" + record.drug_b + "' not in drug table");
    auto cell = profiles.find(record.cell_id);
    if (cell == profiles.end())
      throw Error(ErrorCode::UnknownCell,
                  "cell '" + record.cell_id + "' not in expression table");
    if (!record.label)
      throw Error(ErrorCode::LengthMismatch,
                  "unlabeled record in resolved dataset");
    out.samples.push_back(SampleRef{&a->second, &b->second, &cell->second});
    out.labels.push_back(*record.label);
  }
  return out;
}

}  // namespace dds
