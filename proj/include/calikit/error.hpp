#pragma once

#include <stdexcept>
#include <string>

namespace calikit {

// Error kinds carried by every calikit exception. Usage errors (bad flags)
// are handled by the CLI layer; everything here is an input/data error.
enum class ErrorKind {
  MalformedLine,
  ConfidenceOutOfRange,
  DuplicateId,
  EmptyLog,
  EmptyCandidates,
  DuplicateCandidate,
  TooManyCandidates,
  InconsistentCheckpointCount,
  EmptyTrace,
  NonPositiveTemperature,
  DegenerateClass,
  MissingDevSet,
  InsufficientClassMembers,
  SingleClassTrainingSet,
  TooFewRecords,
  DimensionMismatch,
  WrongConfidenceModel,
};

const char* error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace calikit
