#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace qta {

// Base for every failure the pipeline reports to the user. Argument
// violations use std::invalid_argument instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IngestError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class CacheMissError : public Error {
 public:
  explicit CacheMissError(std::string digest)
      : Error("cache miss: " + digest), digest_(std::move(digest)) {}
  const std::string& digest() const noexcept { return digest_; }

 private:
  std::string digest_;
};

// Model output that does not contain the JSON a stage asked for. The raw
// text travels with the error so it can be written to the audit trail.
class MalformedOutputError : public Error {
 public:
  MalformedOutputError(const std::string& what, std::string raw_text)
      : Error(what), raw_text_(std::move(raw_text)) {}
  const std::string& raw_text() const noexcept { return raw_text_; }

 private:
  std::string raw_text_;
};

class StageError : public Error {
 public:
  using Error::Error;
};

// A stage was requested before its predecessor completed, or the project is
// otherwise not in a state that allows the request.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

}  // namespace qta
