#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hsfusion {

// Parameter outside its mathematical domain (non-positive scale, eta = 0, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Operation on an object in an unusable state (empty sample set, ...).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite value produced inside a Gibbs sweep.
class SamplerError : public std::runtime_error {
 public:
  SamplerError(std::size_t iteration, const std::string& what)
      : std::runtime_error("iteration " + std::to_string(iteration) + ": " + what),
        iteration_(iteration) {}

  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

// Graph is disconnected; carries one vertex (1-based) not reachable from the root.
class GraphError : public std::runtime_error {
 public:
  GraphError(std::size_t unreachable_vertex, const std::string& what)
      : std::runtime_error(what), vertex_(unreachable_vertex) {}

  std::size_t unreachable_vertex() const noexcept { return vertex_; }

 private:
  std::size_t vertex_;
};

namespace detail {

inline void require_positive(double value, const char* name) {
  if (!(value > 0.0)) {
    throw DomainError(std::string(name) + " must be positive, got " + std::to_string(value));
  }
}

}  // namespace detail
}  // namespace hsfusion
