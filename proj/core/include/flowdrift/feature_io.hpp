#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "flowdrift/features.hpp"

namespace flowdrift {

// Native feature CSV. Header: f01..f28,label,attack_type,origin.
// Values are decimal with '.' separator, 9 significant digits.
void write_feature_csv(std::span<const LabeledSample> samples,
                       const std::string& path);
std::vector<LabeledSample> read_feature_csv(const std::string& path);

// Adapts third-party flow CSVs. Entries map an external column name to a
// target: f01..f28, label, attack_type or origin. Unmapped external columns
// are ignored; unmapped features read as 0.
// File format: one "external_name=target" per line, '#' comments.
class ColumnMapping {
 public:
  ColumnMapping() = default;
  explicit ColumnMapping(std::map<std::string, std::string> entries);

  static ColumnMapping from_file(const std::string& path);

  const std::map<std::string, std::string>& entries() const {
    return entries_;
  }

 private:
  std::map<std::string, std::string> entries_;
};

std::vector<LabeledSample> read_feature_csv(const std::string& path,
                                            const ColumnMapping& mapping);

}  // namespace flowdrift
