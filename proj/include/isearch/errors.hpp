#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace isearch {

enum class ErrorKind {
  InvalidInput,
  ZeroColumn,
  InvalidSpec,
  Unconverged,
  SizeLimit,
  RankDeficient,
  IsolatedNode,
  Io,
};

const char* to_string(ErrorKind kind);

// Base of every error raised by the library. `kind()` is stable and is what
// the CLI reports in its machine-readable error output.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InvalidInput : public Error {
 public:
  explicit InvalidInput(const std::string& what)
      : Error(ErrorKind::InvalidInput, what) {}
};

class ZeroColumn : public Error {
 public:
  explicit ZeroColumn(std::size_t index)
      : Error(ErrorKind::ZeroColumn,
              "column " + std::to_string(index) + " has (near) zero norm"),
        index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

// `field` names the offending ModelSpec/config field so the CLI can report it.
class InvalidSpec : public Error {
 public:
  InvalidSpec(std::string field, const std::string& what)
      : Error(ErrorKind::InvalidSpec, field + ": " + what),
        field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class SizeLimit : public Error {
 public:
  explicit SizeLimit(const std::string& what)
      : Error(ErrorKind::SizeLimit, what) {}
};

class RankDeficient : public Error {
 public:
  RankDeficient(int requested, int achieved)
      : Error(ErrorKind::RankDeficient,
              "requested rank " + std::to_string(requested) +
                  " but only " + std::to_string(achieved) +
                  " independent columns were found"),
        requested_(requested),
        achieved_(achieved) {}

  int requested() const noexcept { return requested_; }
  int achieved() const noexcept { return achieved_; }

 private:
  int requested_;
  int achieved_;
};

class IsolatedNode : public Error {
 public:
  explicit IsolatedNode(std::size_t index)
      : Error(ErrorKind::IsolatedNode,
              "node " + std::to_string(index) + " has zero degree"),
        index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

}  // namespace isearch
