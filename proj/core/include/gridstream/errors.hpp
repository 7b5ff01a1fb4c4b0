#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace gridstream {

// Root of every error the library throws. Callers that only need "did it
// work" can catch this; the CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// grid_model
class GeometryError : public Error {
 public:
  using Error::Error;
};

// dataset_lineage
class MissingBlockError : public Error {
 public:
  using Error::Error;
};
class UnknownOperatorError : public Error {
 public:
  using Error::Error;
};
class TypeError : public Error {
 public:
  using Error::Error;
};
class UnrecoverablePartitionError : public Error {
 public:
  using Error::Error;
};

class JobFailedError : public Error {
 public:
  JobFailedError(std::uint64_t job, std::uint64_t stage, const std::string& what)
      : Error(what), job_(job), stage_(stage) {}
  std::uint64_t job() const noexcept { return job_; }
  std::uint64_t stage() const noexcept { return stage_; }

 private:
  std::uint64_t job_;
  std::uint64_t stage_;
};

// blockstore
class StoreUnavailableError : public Error {
 public:
  using Error::Error;
};
class BlockUnavailableError : public Error {
 public:
  using Error::Error;
};
class UnknownNodeError : public Error {
 public:
  using Error::Error;
};
class IntegrityError : public Error {
 public:
  using Error::Error;
};

// cluster
class NotStartedError : public Error {
 public:
  using Error::Error;
};
class UnknownJobError : public Error {
 public:
  using Error::Error;
};

// streaming
class ConfigError : public Error {
 public:
  using Error::Error;
};
class InsufficientResourcesError : public Error {
 public:
  using Error::Error;
};
class StreamClosedError : public Error {
 public:
  using Error::Error;
};
class CheckpointError : public Error {
 public:
  using Error::Error;
};
class StartFreshError : public Error {
 public:
  using Error::Error;
};

// analytics
class VariableAbsentError : public Error {
 public:
  explicit VariableAbsentError(std::string variable);
  const std::string& variable() const noexcept { return variable_; }

 private:
  std::string variable_;
};

// ingest
class FormatError : public Error {
 public:
  using Error::Error;
};
class TruncationError : public FormatError {
 public:
  TruncationError(std::size_t offset, const std::string& what);
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};
class DuplicateVariableError : public Error {
 public:
  using Error::Error;
};
class FilenameError : public Error {
 public:
  FilenameError(std::string component, const std::string& what);
  const std::string& component() const noexcept { return component_; }

 private:
  std::string component_;
};
class MergeError : public Error {
 public:
  using Error::Error;
};
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace gridstream
