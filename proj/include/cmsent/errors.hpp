#pragma once

#include <stdexcept>
#include <string>

namespace cmsent {

/// Base for problems caused by user-supplied input or artifacts.
/// The CLI maps these to exit code 2; everything else exits 1.
struct UserInputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FileError : UserInputError {
  using UserInputError::UserInputError;
};

struct TsvFormatError : UserInputError {
  using UserInputError::UserInputError;
};

struct LabelParseError : UserInputError {
  using UserInputError::UserInputError;
};

struct ConfigError : UserInputError {
  using UserInputError::UserInputError;
};

struct WordlistError : UserInputError {
  using UserInputError::UserInputError;
};

/// Base for malformed serialized artifacts (vector files, checkpoints).
struct FormatError : UserInputError {
  using UserInputError::UserInputError;
};

struct VersionError : FormatError {
  using FormatError::FormatError;
};

// A corrupted magic is reported as a VersionError subtype so callers can
// either distinguish it or treat it as a version problem.
struct BadMagicError : VersionError {
  using VersionError::VersionError;
};

struct TruncationError : FormatError {
  using FormatError::FormatError;
};

struct DimensionError : FormatError {
  using FormatError::FormatError;
};

struct HashMismatchError : FormatError {
  using FormatError::FormatError;
};

/// Non-finite values or other numeric failures during training/inference.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace cmsent
