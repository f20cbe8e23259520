// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dds/chem.hpp"

namespace dds {

struct CellLineProfile {
  std::string cell_id;
  std::vector<double> values;  // aligned to the effective gene list
  bool normalized = false;
};

struct SynergyRecord {
  std::string drug_a;
  std::string drug_b;
  std::string cell_id;
  double loewe = 0.0;
  std::optional<int> label;  // 1 iff loewe > 10, 0 iff loewe < 0
};

struct RawSynergy {
  std::string drug_a;
  std::string drug_b;
  std::string cell_id;
  double loewe = 0.0;
};

struct LabelSummary {
  std::vector<SynergyRecord> records;  // labeled, replicate-averaged
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::size_t dropped = 0;  // mid-range [0, 10] scores
};

struct NormStats {
  std::vector<double> mean;
  std::vector<double> stddev;  // population form
};

enum class SplitProtocol {
  kfold,
  leave_combination,
  leave_drug,
  leave_cell_line,
  leave_tissue,
};

const char* split_protocol_name(SplitProtocol protocol);
SplitProtocol split_protocol_from_name(const std::string& name);

struct SplitPlan {
  struct Fold {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
  };
  SplitProtocol protocol = SplitProtocol::kfold;
  std::uint64_t seed = 0;
  std::vector<Fold> folds;
};

// CSV `drug_id,smiles`; graphs come back parsed with hydrogens assigned.
std::map<std::string, MolGraph> load_drugs(const std::string& path);

std::vector<std::string> load_gene_list(const std::string& path);

struct ExpressionTable {
  std::vector<std::string> genes;  // effective ordered intersection
  std::map<std::string, CellLineProfile> profiles;
};

// CSV `cell_id,<gene>...` in TPM. Columns are restricted to the
// intersection with `gene_list`, ordered by gene-list order; a cell with
// a missing value in any intersected column is an error.
ExpressionTable load_expression(const std::string& path,
                                const std::vector<std::string>& gene_list);
ExpressionTable load_expression_from_files(const std::string& path,
                                           const std::string& gene_list_path);

// CSV `drug_a,drug_b,cell_id,loewe`.
std::vector<RawSynergy> load_synergy(const std::string& path);

// CSV `cell_id,tissue`.
std::map<std::string, std::string> load_tissue_map(const std::string& path);

// CSV `drug_a,drug_b` (candidate pairs for ranking).
std::vector<std::pair<std::string, std::string>> load_pairs(
    const std::string& path);

// Replicates of one unordered (pair, cell) triple are averaged first,
// then thresholded: loewe > 10 -> 1, loewe < 0 -> 0, otherwise dropped.
// Output order follows first appearance of each triple.
LabelSummary label_records(const std::vector<RawSynergy>& raw);

// Per-gene z-score statistics from training profiles only.
NormStats fit_normalizer(const std::vector<CellLineProfile>& train_profiles);
CellLineProfile apply_normalizer(const NormStats& stats,
                                 const CellLineProfile& profile);

SplitPlan make_splits(const std::vector<SynergyRecord>& records,
                      SplitProtocol protocol, std::size_t k,
                      const std::map<std::string, std::string>* tissue_map,
                      std::uint64_t seed);

std::string split_plan_to_json(const SplitPlan& plan);
SplitPlan split_plan_from_json(const std::string& text);

struct BatchSample {
  std::size_t record = 0;
  bool swapped = false;  // drug slots exchanged (order augmentation)
};

// Seeded shuffle of all samples (each record twice with swapped slots
// when augmenting), chunked by batch_size; the final short batch is kept.
std::vector<std::vector<BatchSample>> make_batches(std::size_t num_records,
                                                   bool order_augment,
                                                   std::size_t batch_size,
                                                   std::uint64_t seed);

struct SampleRef {
  const MolGraph* drug_a = nullptr;
  const MolGraph* drug_b = nullptr;
  const CellLineProfile* cell = nullptr;
};

struct ResolvedDataset {
  std::vector<SampleRef> samples;
  std::vector<int> labels;
};

// Looks every record's drugs and cell up in the given tables; throws
// UnknownDrug / UnknownCell naming the missing id.
ResolvedDataset resolve_dataset(
    const std::vector<SynergyRecord>& records,
    const std::map<std::string, MolGraph>& drugs,
    const std::map<std::string, CellLineProfile>& profiles);

}  // namespace dds
