#include "sll/errors.hpp"

namespace sll {

const char* error_name(ErrorCode c) noexcept {
  switch (c) {
    case ErrorCode::Ok: return "Ok";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::CoincidentPoints: return "CoincidentPoints";
    case ErrorCode::NonZeroMean: return "NonZeroMean";
    case ErrorCode::StepTooLarge: return "StepTooLarge";
    case ErrorCode::OnNodalLine: return "OnNodalLine";
    case ErrorCode::AtSingularPoint: return "AtSingularPoint";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::SOutOfBox: return "SOutOfBox";
    case ErrorCode::BallNotInDomain: return "BallNotInDomain";
    case ErrorCode::NotCritical: return "NotCritical";
    case ErrorCode::NoneFound: return "NoneFound";
    case ErrorCode::DomainEscape: return "DomainEscape";
    case ErrorCode::TopologyMismatch: return "TopologyMismatch";
    case ErrorCode::NoFeasibleSplit: return "NoFeasibleSplit";
    case ErrorCode::SetupInfeasible: return "SetupInfeasible";
    case ErrorCode::ScaleTooLarge: return "ScaleTooLarge";
    case ErrorCode::BallsOverlap: return "BallsOverlap";
    case ErrorCode::DomainX: return "DomainX";
    case ErrorCode::NormalizationFailed: return "NormalizationFailed";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SemanticError: return "SemanticError";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

}  // namespace sll
