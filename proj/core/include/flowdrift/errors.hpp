#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace flowdrift {

// An input record failed validation; index is the 0-based record position.
class RecordError : public std::runtime_error {
 public:
  RecordError(std::size_t index, const std::string& what)
      : std::runtime_error("record " + std::to_string(index) + ": " + what),
        index_(index) {}

  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

// File-level problem: missing column, unparsable field, bad header.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace flowdrift
