#include "geofair/error.hpp"

namespace geofair {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::RowInvalid: return "RowInvalid";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::SingleState: return "SingleState";
    case ErrorCode::TooFewStates: return "TooFewStates";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::ConstantTarget: return "ConstantTarget";
    case ErrorCode::AllTreatment: return "AllTreatment";
    case ErrorCode::AllControl: return "AllControl";
    case ErrorCode::MissingFeature: return "MissingFeature";
    case ErrorCode::MissingTarget: return "MissingTarget";
    case ErrorCode::RefusesTrainTestOverlap: return "RefusesTrainTestOverlap";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ModelFormat: return "ModelFormat";
  }
  return "Unknown";
}

}  // namespace geofair
