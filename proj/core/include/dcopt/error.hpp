#pragma once

#include <stdexcept>
#include <string>

namespace dcopt {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A parameter or argument outside its documented domain.
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

// A document could not be parsed. `location()` names where: a JSON pointer,
// a byte offset or a line number depending on the format.
class ParseError : public Error {
 public:
  ParseError(std::string location, const std::string& what)
      : Error(location.empty() ? what : location + ": " + what),
        location_(std::move(location)) {}

  const std::string& location() const noexcept { return location_; }

 private:
  std::string location_;
};

// A variable was looked up in a sample or model that does not define it.
class MissingVariable : public Error {
 public:
  using Error::Error;
};

// The model uses a feature the QUBO conversion cannot express exactly.
class UnsupportedModel : public Error {
 public:
  using Error::Error;
};

// A VM placement that breaks server capacity or is incomplete.
class InfeasiblePlacement : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace dcopt
