#pragma once

#include <stdexcept>
#include <string>

namespace refinet {

// Input outside the domain of a map (digit map on x ∉ [0,1], bad digit, ...).
class domain_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Shape or dimension mismatch, malformed object.
class structural_error : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A documented precondition of a builder does not hold.
class precondition_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unreadable or ill-formed input file.
class parse_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace refinet
