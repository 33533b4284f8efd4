#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace segbias {

/// Raised by the mask/probability-map readers. `offset` is a byte offset into
/// the file for header and payload problems, and a pixel index for value
/// problems (NaN, out of range).
class ParseError : public std::runtime_error {
 public:
  enum class Kind {
    kMalformedHeader,
    kUnsupportedMaxval,
    kTruncatedPayload,
    kTrailingData,
    kSizeMismatch,
    kNotANumber,
    kOutOfRange,
  };

  ParseError(Kind kind, std::size_t offset, const std::string& what)
      : std::runtime_error(what), kind_(kind), offset_(offset) {}

  Kind kind() const noexcept { return kind_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  Kind kind_;
  std::size_t offset_;
};

std::string_view to_string(ParseError::Kind kind);

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Manifest and sampling failures. `line` is 1-based and 0 when the problem
/// is not tied to one line of a JSON-lines file.
class ManifestError : public std::runtime_error {
 public:
  enum class Kind {
    kMalformedLine,
    kMissingField,
    kInvalidField,
    kDuplicateId,
    kInvariantViolation,
    kPatientLeak,
    kInsufficientNegatives,
    kPositiveInPool,
    kNoPositives,
    kUnreadableMask,
  };

  ManifestError(Kind kind, std::size_t line, const std::string& what)
      : std::runtime_error(what), kind_(kind), line_(line) {}

  Kind kind() const noexcept { return kind_; }
  std::size_t line() const noexcept { return line_; }

 private:
  Kind kind_;
  std::size_t line_;
};

std::string_view to_string(ManifestError::Kind kind);

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace segbias
