#pragma once

#include <stdexcept>
#include <string>

namespace driftlab {

// Root of the library error hierarchy.  Callers that need coarse handling
// catch one of the two branches: ConfigError means the request itself is
// malformed (CLI exit code 2), DataError means the inputs cannot support the
// requested computation (CLI exit code 3).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

// --- configuration problems ------------------------------------------------

class MissingParam final : public ConfigError {
 public:
  explicit MissingParam(const std::string& what) : ConfigError("missing parameter: " + what) {}
};

class BadParam final : public ConfigError {
 public:
  explicit BadParam(const std::string& what) : ConfigError("bad parameter: " + what) {}
};

class BadSpec final : public ConfigError {
 public:
  explicit BadSpec(const std::string& what) : ConfigError("bad generator spec: " + what) {}
};

class BadConfig final : public ConfigError {
 public:
  explicit BadConfig(const std::string& what) : ConfigError("bad config: " + what) {}
};

class EmptyGrid final : public ConfigError {
 public:
  explicit EmptyGrid(const std::string& what) : ConfigError("empty grid: " + what) {}
};

// --- data problems -----------------------------------------------------------

class SeriesTooShort final : public DataError {
 public:
  explicit SeriesTooShort(const std::string& what) : DataError("series too short: " + what) {}
};

class NonFiniteValue final : public DataError {
 public:
  explicit NonFiniteValue(const std::string& what) : DataError("non-finite value: " + what) {}
};

// A regime design matrix lost full column rank; the offending split must be
// skipped rather than solved.
class RankDeficient final : public DataError {
 public:
  explicit RankDeficient(const std::string& what) : DataError("rank deficient: " + what) {}
};

// The trimming constraint left no candidate threshold to score.
class NoAdmissibleSplit final : public DataError {
 public:
  explicit NoAdmissibleSplit(const std::string& what) : DataError("no admissible split: " + what) {}
};

class DomainError final : public DataError {
 public:
  explicit DomainError(const std::string& what) : DataError("domain error: " + what) {}
};

class EmptySegment final : public DataError {
 public:
  explicit EmptySegment(const std::string& what) : DataError("empty segment: " + what) {}
};

class DegenerateZero final : public DataError {
 public:
  explicit DegenerateZero(const std::string& what) : DataError("degenerate zero: " + what) {}
};

class DimensionMismatch final : public DataError {
 public:
  explicit DimensionMismatch(const std::string& what) : DataError("dimension mismatch: " + what) {}
};

class KindMismatch final : public DataError {
 public:
  explicit KindMismatch(const std::string& what) : DataError("kind mismatch: " + what) {}
};

class EmptyBatch final : public DataError {
 public:
  explicit EmptyBatch(const std::string& what) : DataError("empty batch: " + what) {}
};

class ParseError final : public DataError {
 public:
  explicit ParseError(const std::string& what) : DataError("parse error: " + what) {}
};

class MissingColumn final : public DataError {
 public:
  explicit MissingColumn(const std::string& what) : DataError("missing column: " + what) {}
};

class IoError final : public DataError {
 public:
  explicit IoError(const std::string& what) : DataError("io error: " + what) {}
};

}  // namespace driftlab
