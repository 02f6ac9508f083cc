#pragma once

#include <stdexcept>
#include <string>

namespace lace {

// Root of every error the library raises. Callers that only need to
// distinguish "our failure" from anything else catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// Mathematical precondition violated (empty reduction, empty mask, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// API misuse that does not depend on data, e.g. seeding backward with a
// non-scalar.
class ContractError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class VocabError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace lace
