#pragma once

#include <stdexcept>
#include <string>

namespace sll {

enum class ErrorCode : int {
  Ok = 0,
  InvalidArgument = 1,
  CoincidentPoints = 2,
  NonZeroMean = 3,
  StepTooLarge = 4,
  OnNodalLine = 5,
  AtSingularPoint = 6,
  GridTooCoarse = 7,
  OutOfDomain = 8,
  SOutOfBox = 9,
  BallNotInDomain = 10,
  NotCritical = 11,
  NoneFound = 12,
  DomainEscape = 13,
  TopologyMismatch = 14,
  NoFeasibleSplit = 15,
  SetupInfeasible = 16,
  ScaleTooLarge = 17,
  BallsOverlap = 18,
  DomainX = 19,
  NormalizationFailed = 20,
  ParseError = 21,
  SemanticError = 22,
  Io = 23,
  Internal = 99,
};

const char* error_name(ErrorCode c) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode c, const std::string& msg) { throw Error(c, msg); }

}  // namespace sll
