#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace globalrag {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input record; carries the 1-based line number when known.
class ParseError : public Error {
public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

class IngestionError : public Error {
public:
  using Error::Error;
};

class PredicateError : public Error {
public:
  using Error::Error;
};

class IndexBuildError : public Error {
public:
  IndexBuildError(std::string doc_id, const std::string& what)
      : Error("document '" + doc_id + "': " + what), doc_id_(std::move(doc_id)) {}
  [[nodiscard]] const std::string& doc_id() const noexcept { return doc_id_; }

private:
  std::string doc_id_;
};

class RetrievalError : public Error {
public:
  using Error::Error;
};

class TransportError : public Error {
public:
  using Error::Error;
};

class ProtocolError : public Error {
public:
  using Error::Error;
};

class MockMissError : public Error {
public:
  explicit MockMissError(std::string hash)
      : Error("mock backend has no script entry for request " + hash), hash_(std::move(hash)) {}
  [[nodiscard]] const std::string& hash() const noexcept { return hash_; }

private:
  std::string hash_;
};

class EmptyInputError : public Error {
public:
  using Error::Error;
};

class UnitError : public Error {
public:
  using Error::Error;
};

class ValueTypeError : public Error {
public:
  using Error::Error;
};

class ClassificationError : public Error {
public:
  using Error::Error;
};

class SamplingError : public Error {
public:
  using Error::Error;
};

class DegenerateTrajectoryError : public Error {
public:
  using Error::Error;
};

class SaveError : public Error {
public:
  using Error::Error;
};

class InputError : public Error {
public:
  using Error::Error;
};

class JoinError : public Error {
public:
  JoinError(std::vector<std::string> orphans, const std::string& what)
      : Error(what), orphans_(std::move(orphans)) {}
  [[nodiscard]] const std::vector<std::string>& orphans() const noexcept { return orphans_; }

private:
  std::vector<std::string> orphans_;
};

}  // namespace globalrag
