#pragma once

#include <stdexcept>
#include <string>

namespace echeat {

/// Base for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes do not conform for the requested operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A value violates a domain invariant (bad score, bad IP, bad manifest...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Row/column-located failure while reading an input file.
class LoadError : public Error {
 public:
  LoadError(const std::string& file, std::size_t row, const std::string& column,
            const std::string& what)
      : Error(file + ":" + std::to_string(row) + ": column '" + column + "': " + what),
        row_(row),
        column_(column) {}
  explicit LoadError(const std::string& what) : Error(what) {}

  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::size_t row_ = 0;
  std::string column_;
};

/// No question set is available that satisfies the distinct-set rule.
class PoolExhaustedError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint container could not be read back.
class CheckpointError : public Error {
 public:
  enum class Kind { io, bad_magic, bad_version, truncated, bad_header, shape_mismatch };

  CheckpointError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace echeat
