#pragma once

#include <stdexcept>
#include <string>

namespace gfflab {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Malformed graphs, triangulations, vertex sets or arguments.
class InvalidInput : public Error {
public:
  using Error::Error;
};

// Requests exceeding configured caps (vertex counts, matching order, dense size).
class ResourceError : public Error {
public:
  using Error::Error;
};

// Factorization failures, singular or indefinite forms.
class NumericalError : public Error {
public:
  using Error::Error;
};

// Operation is valid in general but not on this graph (e.g. random walks
// with signed weights).
class UnsupportedGraph : public Error {
public:
  using Error::Error;
};

} // namespace gfflab
