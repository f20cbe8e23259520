// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace dds {

// One flat code space for every domain error the toolkit can raise.
// CLI exit-code policy: Io maps to 3, everything else to 2.
enum class ErrorCode {
  // SMILES parsing
  EmptyInput,
  UnbalancedParenthesis,
  UnclosedRingBond,
  UnknownElement,
  MultiFragmentInput,
  BadBracketAtom,
  InvalidRingBond,
  DanglingBond,
  UnexpectedToken,
  HydrogensAlreadyAssigned,
  HydrogensNotAssigned,

  // tensor engine
  ShapeMismatch,
  NotScalar,
  EmptyReduction,

  // graph layers / batching
  EmptyBatch,
  EmptyGraph,
  WidthMismatch,

  // model / checkpoint
  InvalidWidth,
  GeneMismatch,
  LengthMismatch,
  Io,
  BadMagic,
  VersionMismatch,
  CorruptTensor,

  // data pipeline
  DuplicateDrugId,
  ParseError,
  MissingColumn,
  EmptyIntersection,
  MissingValue,
  DuplicateCellId,
  SelfCombination,
  TooFewProfiles,
  AlreadyNormalized,
  UnknownTissue,
  DegenerateSplit,

  // training
  EmptyTrainSet,
  NonFiniteLoss,

  // metrics
  SingleClass,
  NoPositives,
  ZeroVariance,

  // config / cli
  UnknownCell,
  UnknownDrug,
  BadConfig,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " +
                           message),
        code_(code) {}

  // `position` is a byte offset for parser errors and a 1-based row
  // number for tabular-file errors.
  Error(ErrorCode code, std::string message, std::size_t position)
      : std::runtime_error(std::string(error_code_name(code)) + ": " +
                           message + " (at " + std::to_string(position) + ")"),
        code_(code),
        position_(position) {}

  ErrorCode code() const { return code_; }
  std::optional<std::size_t> position() const { return position_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> position_;
};

}  // namespace dds
