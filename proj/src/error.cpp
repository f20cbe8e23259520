// SPDX-License-Identifier: Apache-2.0

#include "dds/error.hpp"

namespace dds {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::UnbalancedParenthesis: return "UnbalancedParenthesis";
    case ErrorCode::UnclosedRingBond: return "UnclosedRingBond";
    case ErrorCode::UnknownElement: return "UnknownElement";
    case ErrorCode::MultiFragmentInput: return "MultiFragmentInput";
    case ErrorCode::BadBracketAtom: return "BadBracketAtom";
    case ErrorCode::InvalidRingBond: return "InvalidRingBond";
    case ErrorCode::DanglingBond: return "DanglingBond";
    case ErrorCode::UnexpectedToken: return "UnexpectedToken";
    case ErrorCode::HydrogensAlreadyAssigned: return "HydrogensAlreadyAssigned";
    case ErrorCode::HydrogensNotAssigned: return "HydrogensNotAssigned";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NotScalar: return "NotScalar";
    case ErrorCode::EmptyReduction: return "EmptyReduction";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::EmptyGraph: return "EmptyGraph";
    case ErrorCode::WidthMismatch: return "WidthMismatch";
    case ErrorCode::InvalidWidth: return "InvalidWidth";
    case ErrorCode::GeneMismatch: return "GeneMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::Io: return "Io";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptTensor: return "CorruptTensor";
    case ErrorCode::DuplicateDrugId: return "DuplicateDrugId";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::EmptyIntersection: return "EmptyIntersection";
    case ErrorCode::MissingValue: return "MissingValue";
    case ErrorCode::DuplicateCellId: return "DuplicateCellId";
    case ErrorCode::SelfCombination: return "SelfCombination";
    case ErrorCode::TooFewProfiles: return "TooFewProfiles";
    case ErrorCode::AlreadyNormalized: return "AlreadyNormalized";
    case ErrorCode::UnknownTissue: return "UnknownTissue";
    case ErrorCode::DegenerateSplit: return "DegenerateSplit";
    case ErrorCode::EmptyTrainSet: return "EmptyTrainSet";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::NoPositives: return "NoPositives";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::UnknownCell: return "UnknownCell";
    case ErrorCode::UnknownDrug: return "UnknownDrug";
    case ErrorCode::BadConfig: return "BadConfig";
  }
  return "UnknownError";
}

}  // namespace dds
