#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lne {

/// Precondition or argument violation.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Allocation failure; carries an estimate of the bytes the call needed.
class ResourceError : public std::runtime_error {
 public:
  ResourceError(const std::string& what, std::size_t required_bytes)
      : std::runtime_error(what + " (requires ~" + std::to_string(required_bytes) + " bytes)"),
        required_bytes_(required_bytes) {}
  std::size_t required_bytes() const { return required_bytes_; }

 private:
  std::size_t required_bytes_;
};

/// The sparsifier hash table ran past its load limit.
class TableFullError : public std::runtime_error {
 public:
  TableFullError(std::size_t capacity, double suggested_factor)
      : std::runtime_error("sparsifier table full at capacity " + std::to_string(capacity) +
                           "; rerun with table_capacity_factor >= " +
                           std::to_string(suggested_factor)),
        capacity_(capacity),
        suggested_factor_(suggested_factor) {}
  std::size_t capacity() const { return capacity_; }
  double suggested_factor() const { return suggested_factor_; }

 private:
  std::size_t capacity_;
  double suggested_factor_;
};

/// Malformed input file (parse error, bad magic, truncated payload).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lne
