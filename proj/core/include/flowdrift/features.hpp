#pragma once

#include <array>
#include <bitset>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flowdrift/flow.hpp"

namespace flowdrift {

inline constexpr std::size_t kFeatureCount = 28;

// Feature indices in the fixed column order f01..f28.
enum Feature : std::size_t {
  kFlowDuration = 0,     // f01: seconds
  kFwdTtlMean,           // f02
  kBwdTtlMean,           // f03
  kPacketCount,          // f04
  kFwdPacketCount,       // f05
  kBwdPacketCount,       // f06
  kByteTotal,            // f07: sum of ip_len
  kFwdByteTotal,         // f08
  kBwdByteTotal,         // f09
  kIatMean,              // f10: mean inter-arrival, seconds
  kFwdPacketSizeMean,    // f11: mean ip_len
  kBwdPacketSizeMean,    // f12
  kPayloadTotal,         // f13
  kFwdPayloadTotal,      // f14
  kBwdPayloadTotal,      // f15
  kLossRate,             // f16: TCP retransmission fraction
  kFwdLossRate,          // f17
  kBwdLossRate,          // f18
  kFwdWindowMean,        // f19
  kBwdWindowMean,        // f20
  kTcpRtt,               // f21: first SYN+ACK - first SYN
  kSynAckTime,           // f22: handshake ACK - first SYN
  kAckDataTime,          // f23: first payload after handshake - handshake ACK
  kFlowRate,             // f24: packets/s
  kFwdFlowRate,          // f25
  kBwdFlowRate,          // f26
  kFwdByteRate,          // f27: bytes/s
  kBwdByteRate,          // f28
};

// Column name "fNN" for a feature index, and back.
std::string feature_column(std::size_t index);
std::optional<std::size_t> feature_index(const std::string& column);

struct FeatureVector {
  std::array<double, kFeatureCount> values{};
  // Distinguishes measured zero from "definition not applicable here"
  // (UDP handshake timings, rates of a zero-duration flow, ...).
  std::bitset<kFeatureCount> present;

  double operator[](std::size_t i) const { return values[i]; }
};

// Computes all 28 features from one closed session. Inapplicable fields are
// zero with the presence bit cleared. Throws std::invalid_argument if the
// flow is still open or empty.
FeatureVector extract(const FlowSession& flow);

struct LabeledSample {
  FeatureVector features;
  int label = 0;  // 1 = malicious, 0 = benign
  std::string attack_type = "Benign";
  std::string origin;
};

struct FlowLabel {
  int label = 0;
  std::string attack_type = "Benign";
  std::string origin;
};

// Ground-truth assignment for one session; nullopt means the labeler cannot
// decide and the flow must be dropped (never silently mislabeled).
using Labeler = std::function<std::optional<FlowLabel>(const FlowSession&)>;

struct ExtractionResult {
  std::vector<LabeledSample> samples;
  std::size_t unlabeled_dropped = 0;
};

ExtractionResult extract_batch(std::span<const FlowSession> flows,
                               const Labeler& labeler);

// Labels flows by matching either endpoint against a rule list; first match
// wins. Loaded from a JSON document:
//   {"origin": "BS1", "default": "Benign",
//    "rules": [{"ip": "10.0.0.9", "attack_type": "UDPFlood"},
//              {"ip": "10.0.0.9", "port": 80, "proto": 6,
//               "attack_type": "HTTPFlood"}]}
// Without a "default" entry, unmatched flows are dropped.
class RuleLabeler {
 public:
  struct Rule {
    std::string ip;
    std::optional<int> port;
    std::optional<int> proto;
    std::string attack_type;
  };

  RuleLabeler(std::vector<Rule> rules, std::string origin,
              std::optional<std::string> default_attack_type);

  static RuleLabeler from_json_file(const std::string& path);

  std::optional<FlowLabel> operator()(const FlowSession& flow) const;

 private:
  std::vector<Rule> rules_;
  std::string origin_;
  std::optional<std::string> default_attack_type_;
};

}  // namespace flowdrift
