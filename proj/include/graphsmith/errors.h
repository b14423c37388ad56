#pragma once

#include <stdexcept>
#include <string>

namespace graphsmith {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CycleError : public Error {
 public:
  using Error::Error;
};

// Malformed graph JSON; the message starts with the JSON path of the field.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

class DuplicateOp : public Error {
 public:
  using Error::Error;
};

class UnknownOp : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

// A template was forced to ground form before its index/range symbols were
// assigned. Always a bug in an OpSpec or in the solver.
class OrderViolation : public Error {
 public:
  using Error::Error;
};

// Propagation emptied a committed domain. Fatal: the op's constraint set is
// not globally consistent under the instantiation order.
class EmptyDomain : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class UnsupportedOp : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class BackendLaunchError : public Error {
 public:
  using Error::Error;
};

class EmptyCorpus : public Error {
 public:
  using Error::Error;
};

}  // namespace graphsmith
