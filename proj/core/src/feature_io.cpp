#include "flowdrift/feature_io.hpp"

#include <fstream>

#include "csv_util.hpp"
#include "flowdrift/errors.hpp"

namespace flowdrift {

namespace {

std::string native_header() {
  std::string h;
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    h += feature_column(i);
    h += ',';
  }
  h += "label,attack_type,origin";
  return h;
}

int parse_label_field(const std::string& raw, const std::string& where) {
  auto v = detail::trim(raw);
  if (v == "0" || v == "benign" || v == "Benign" || v == "BENIGN") return 0;
  if (v == "1") return 1;
  // Any other non-numeric label string counts as malicious.
  if (detail::parse_int(v)) {
    throw SchemaError(where + ": label must be 0 or 1");
  }
  return 1;
}

}  // namespace

void write_feature_csv(std::span<const LabeledSample> samples,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write feature csv: " + path);
  out << native_header() << "\n";
  for (const LabeledSample& s : samples) {
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
      // 12 significant digits keeps the round trip within 1e-9 relative.
      out << detail::format_double(s.features.values[i], 12) << ',';
    }
    out << s.label << ',' << detail::csv_escape(s.attack_type) << ','
        << detail::csv_escape(s.origin) << "\n";
  }
}

std::vector<LabeledSample> read_feature_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open feature csv: " + path);

  std::string line;
  if (!std::getline(in, line)) throw SchemaError(path + ": missing header");
  auto header = detail::split_csv_line(line);
  std::size_t expected = kFeatureCount + 3;
  if (header.size() != expected) {
    // Name the first missing/unexpected column for the error message.
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
      std::string want = feature_column(i);
      bool found = false;
      for (const auto& h : header) {
        if (std::string(detail::trim(h)) == want) {
          found = true;
          break;
        }
      }
      if (!found) {
        throw SchemaError(path + ": missing column '" + want + "'");
      }
    }
    throw SchemaError(path + ": expected " + std::to_string(expected) +
                      " columns, got " + std::to_string(header.size()));
  }
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (std::string(detail::trim(header[i])) != feature_column(i)) {
      throw SchemaError(path + ": missing column '" + feature_column(i) +
                        "' (found '" + header[i] + "')");
    }
  }
  if (std::string(detail::trim(header[kFeatureCount])) != "label" ||
      std::string(detail::trim(header[kFeatureCount + 1])) != "attack_type" ||
      std::string(detail::trim(header[kFeatureCount + 2])) != "origin") {
    throw SchemaError(path + ": trailing columns must be label,attack_type,origin");
  }

  std::vector<LabeledSample> samples;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split_csv_line(line);
    if (fields.size() != expected) {
      throw SchemaError(path + ":" + std::to_string(line_no) +
                        ": wrong field count");
    }
    LabeledSample s;
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
      auto v = detail::parse_double(detail::trim(fields[i]));
      if (!v) {
        throw SchemaError(path + ":" + std::to_string(line_no) +
                          ": unparsable value in column '" +
                          feature_column(i) + "'");
      }
      s.features.values[i] = *v;
      s.features.present.set(i);
    }
    s.label = parse_label_field(fields[kFeatureCount],
                                path + ":" + std::to_string(line_no));
    s.attack_type = std::string(detail::trim(fields[kFeatureCount + 1]));
    s.origin = std::string(detail::trim(fields[kFeatureCount + 2]));
    if ((s.label == 0) != (s.attack_type == "Benign")) {
      throw SchemaError(path + ":" + std::to_string(line_no) +
                        ": label contradicts attack_type");
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

ColumnMapping::ColumnMapping(std::map<std::string, std::string> entries)
    : entries_(std::move(entries)) {
  for (const auto& [external, target] : entries_) {
    if (target == "label" || target == "attack_type" || target == "origin") {
      continue;
    }
    if (!feature_index(target)) {
      throw SchemaError("column mapping: unknown target '" + target + "'");
    }
  }
}

ColumnMapping ColumnMapping::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open column mapping: " + path);
  std::map<std::string, std::string> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto eq = t.rfind('=');
    if (eq == std::string_view::npos) {
      throw SchemaError(path + ":" + std::to_string(line_no) +
                        ": expected external_name=target");
    }
    std::string external(detail::trim(t.substr(0, eq)));
    std::string target(detail::trim(t.substr(eq + 1)));
    if (external.empty() || target.empty()) {
      throw SchemaError(path + ":" + std::to_string(line_no) +
                        ": empty name or target");
    }
    entries[external] = target;
  }
  return ColumnMapping(std::move(entries));
}

std::vector<LabeledSample> read_feature_csv(const std::string& path,
                                            const ColumnMapping& mapping) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open feature csv: " + path);

  std::string line;
  if (!std::getline(in, line)) throw SchemaError(path + ": missing header");
  auto header = detail::split_csv_line(line);

  // column index in the external file -> target slot
  std::vector<int> feature_target(header.size(), -1);
  int label_col = -1, attack_col = -1, origin_col = -1;
  std::map<std::string, bool> used;
  for (std::size_t i = 0; i < header.size(); ++i) {
    std::string name(detail::trim(header[i]));
    auto it = mapping.entries().find(name);
    if (it == mapping.entries().end()) continue;
    used[it->first] = true;
    const std::string& target = it->second;
    if (target == "label") label_col = static_cast<int>(i);
    else if (target == "attack_type") attack_col = static_cast<int>(i);
    else if (target == "origin") origin_col = static_cast<int>(i);
    else feature_target[i] = static_cast<int>(*feature_index(target));
  }
  for (const auto& [external, target] : mapping.entries()) {
    if (!used.count(external)) {
      throw SchemaError(path + ": mapped column '" + external +
                        "' not present in header");
    }
  }

  std::vector<LabeledSample> samples;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size()) {
      throw SchemaError(path + ":" + std::to_string(line_no) +
                        ": wrong field count");
    }
    LabeledSample s;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (feature_target[i] < 0) continue;
      auto v = detail::parse_double(detail::trim(fields[i]));
      if (!v) {
        throw SchemaError(path + ":" + std::to_string(line_no) +
                          ": unparsable value in column '" +
                          std::string(detail::trim(header[i])) + "'");
      }
      s.features.values[static_cast<std::size_t>(feature_target[i])] = *v;
    }
    s.features.present.set();
    if (attack_col >= 0) {
      s.attack_type =
          std::string(detail::trim(fields[static_cast<std::size_t>(attack_col)]));
    }
    if (label_col >= 0) {
      s.label = parse_label_field(fields[static_cast<std::size_t>(label_col)],
                                  path + ":" + std::to_string(line_no));
      if (attack_col < 0) s.attack_type = s.label ? "Malicious" : "Benign";
    } else if (attack_col >= 0) {
      s.label = s.attack_type == "Benign" ? 0 : 1;
    }
    if (origin_col >= 0) {
      s.origin =
          std::string(detail::trim(fields[static_cast<std::size_t>(origin_col)]));
    }
    if ((s.label == 0) != (s.attack_type == "Benign")) {
      throw SchemaError(path + ":" + std::to_string(line_no) +
                        ": label contradicts attack_type");
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace flowdrift
