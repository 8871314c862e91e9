#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mixroute {

// Every failure raised by the library derives from Error, so callers that do
// not care about the specific kind can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error { public: using Error::Error; };
class NegativeTokens : public Error { public: using Error::Error; };
class DuplicateId : public Error { public: using Error::Error; };
class UnknownId : public Error { public: using Error::Error; };
class ZeroVector : public Error { public: using Error::Error; };
class EmptyBatch : public Error { public: using Error::Error; };
class TooFewDomains : public Error { public: using Error::Error; };
class NoActiveCandidates : public Error { public: using Error::Error; };
class WidthMismatch : public Error { public: using Error::Error; };
class IndexOutOfRange : public Error { public: using Error::Error; };
class MissingGroundTruth : public Error { public: using Error::Error; };
class InsufficientDomains : public Error { public: using Error::Error; };
class KTooLarge : public Error { public: using Error::Error; };
class UnknownReference : public Error { public: using Error::Error; };
class EmptyInput : public Error { public: using Error::Error; };
class ConfigError : public Error { public: using Error::Error; };

// Dataset and file errors carry the 1-based line they refer to (0 if the
// error is not tied to a line).
class RowError : public Error {
 public:
  RowError(std::size_t row, const std::string& what)
      : Error(row ? "row " + std::to_string(row) + ": " + what : what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class ParseError : public RowError { public: using RowError::RowError; };
class SchemaError : public RowError { public: using RowError::RowError; };
class RangeError : public RowError { public: using RowError::RowError; };

}  // namespace mixroute
