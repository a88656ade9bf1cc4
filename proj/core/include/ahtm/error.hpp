#pragma once

#include <stdexcept>
#include <string>

namespace ahtm {

// Precondition broken by the caller (width mismatch, empty table, bad score).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Scalar outside the configured encoder range with clipping disabled.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Non-finite or otherwise unusable raw input.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// CAM row address outside the array or pointing at an invalid row.
class AddressError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Anomaly score requested against an empty actual SDR.
class UndefinedScore : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ahtm
