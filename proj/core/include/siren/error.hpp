#pragma once

#include <stdexcept>
#include <string>

namespace siren {

// Bad argument or violated precondition.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Graph structure is not a DAG (cycle) or is otherwise malformed.
class StructuralError : public std::runtime_error {
 public:
  StructuralError(const std::string& what, std::size_t node)
      : std::runtime_error(what), node_(node) {}
  std::size_t node() const { return node_; }

 private:
  std::size_t node_;
};

// Loss went non-finite while fitting a network.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite value or unusable numeric state outside of training.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A component required by the requested operation is missing.
class ConfigurationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The diagnostic needs a closed-form density the model does not have.
class UnsupportedDiagnostic : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file: CSV, JSON, schema mismatch.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A benchmark generator could not produce a valid case.
class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace siren
