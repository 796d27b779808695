#pragma once

#include <stdexcept>
#include <string>

namespace fsm {

/// An enumeration or brute-force sum would exceed its configured bound.
class SizeGuardError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Operands live on ground sets of different sizes.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument violates a mathematical precondition (crossing input, non-comparable pair, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed text or JSON input.
class ParseError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace fsm
