#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace biasalert {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A persisted file does not follow its schema. `line()` is 1-based.
class SchemaError : public Error {
 public:
  SchemaError(std::size_t line, const std::string& message)
      : Error("line " + std::to_string(line) + ": " + message), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A remote backend could not be reached after all configured retries.
class BackendUnavailable : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Query issued with a different embedder than the index was built with.
class EmbedderMismatch : public Error {
 public:
  using Error::Error;
};

/// Index and knowledge base versions disagree.
class IndexMismatch : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

/// A biased gold label is missing its social group or attribute.
class MissingAttribution : public Error {
 public:
  using Error::Error;
};

class MissingColumn : public Error {
 public:
  using Error::Error;
};

}  // namespace biasalert
