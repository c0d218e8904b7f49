#include "flowdrift/features.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "flowdrift/errors.hpp"

namespace flowdrift {

std::string feature_column(std::size_t index) {
  std::string s = "f";
  if (index + 1 < 10) s += "0";
  s += std::to_string(index + 1);
  return s;
}

std::optional<std::size_t> feature_index(const std::string& column) {
  if (column.size() != 3 || column[0] != 'f') return std::nullopt;
  if (column[1] < '0' || column[1] > '9' || column[2] < '0' ||
      column[2] > '9') {
    return std::nullopt;
  }
  std::size_t n = static_cast<std::size_t>((column[1] - '0') * 10 +
                                           (column[2] - '0'));
  if (n < 1 || n > kFeatureCount) return std::nullopt;
  return n - 1;
}

namespace {

// Covered TCP sequence ranges of one direction's data packets; a new data
// packet overlapping the covered space counts as a retransmission.
class SeqIntervals {
 public:
  bool overlaps(std::uint64_t s, std::uint64_t e) const {
    auto it = iv_.upper_bound(s);
    if (it != iv_.begin() && std::prev(it)->second > s) return true;
    return it != iv_.end() && it->first < e;
  }

  void insert(std::uint64_t s, std::uint64_t e) {
    auto it = iv_.upper_bound(s);
    if (it != iv_.begin()) {
      auto prev = std::prev(it);
      if (prev->second == s) {  // extend adjacent predecessor
        s = prev->first;
        iv_.erase(prev);
      }
    }
    it = iv_.find(e);
    if (it != iv_.end()) {  // absorb adjacent successor
      e = it->second;
      iv_.erase(it);
    }
    iv_[s] = e;
  }

 private:
  std::map<std::uint64_t, std::uint64_t> iv_;
};

struct DirTotals {
  std::uint64_t packets = 0;
  std::uint64_t bytes = 0;
  std::uint64_t payload = 0;
  std::uint64_t ttl_sum = 0;
  std::uint64_t window_sum = 0;
  std::uint64_t data_packets = 0;
  std::uint64_t retransmissions = 0;
};

DirTotals direction_totals(const std::vector<PacketRecord>& pkts, bool tcp) {
  DirTotals t;
  SeqIntervals seen;
  for (const PacketRecord& p : pkts) {
    ++t.packets;
    t.bytes += static_cast<std::uint64_t>(p.ip_len);
    t.payload += static_cast<std::uint64_t>(p.payload_len);
    t.ttl_sum += static_cast<std::uint64_t>(p.ttl);
    t.window_sum += static_cast<std::uint64_t>(p.tcp_window);
    if (tcp && p.payload_len > 0) {
      ++t.data_packets;
      std::uint64_t s = p.tcp_seq;
      std::uint64_t e = s + static_cast<std::uint64_t>(p.payload_len);
      if (seen.overlaps(s, e)) {
        ++t.retransmissions;
      } else {
        seen.insert(s, e);
      }
    }
  }
  return t;
}

struct TimelineEntry {
  const PacketRecord* pkt;
  bool forward;
};

// Chronological merge of the two direction lists; forward wins ties so the
// order is deterministic.
std::vector<TimelineEntry> merge_timeline(const FlowSession& flow) {
  std::vector<TimelineEntry> merged;
  merged.reserve(flow.packet_count());
  std::size_t i = 0, j = 0;
  const auto& f = flow.fwd_packets;
  const auto& b = flow.bwd_packets;
  while (i < f.size() || j < b.size()) {
    if (j == b.size() || (i < f.size() && f[i].ts <= b[j].ts)) {
      merged.push_back({&f[i ++], true});
    } else {
      merged.push_back({&b[j ++], false});
    }
  }
  return merged;
}

}  // namespace

FeatureVector extract(const FlowSession& flow) {
  if (!flow.closed()) {
    throw std::invalid_argument("extract: flow must be closed");
  }
  if (flow.packet_count() == 0) {
    throw std::invalid_argument("extract: empty flow");
  }

  const bool tcp = flow.key.proto == kProtoTcp;
  const DirTotals fwd = direction_totals(flow.fwd_packets, tcp);
  const DirTotals bwd = direction_totals(flow.bwd_packets, tcp);
  const std::uint64_t n = fwd.packets + bwd.packets;

  const auto timeline = merge_timeline(flow);
  const double first_ts = timeline.front().pkt->ts;
  double last_ts = first_ts;
  for (const auto& e : timeline) last_ts = std::max(last_ts, e.pkt->ts);
  const double duration = last_ts - first_ts;

  FeatureVector out;
  auto set = [&out](std::size_t i, double v) {
    out.values[i] = v;
    out.present.set(i);
  };

  set(kFlowDuration, duration);
  if (fwd.packets > 0) {
    set(kFwdTtlMean, static_cast<double>(fwd.ttl_sum) /
                         static_cast<double>(fwd.packets));
    set(kFwdPacketSizeMean, static_cast<double>(fwd.bytes) /
                                static_cast<double>(fwd.packets));
  }
  if (bwd.packets > 0) {
    set(kBwdTtlMean, static_cast<double>(bwd.ttl_sum) /
                         static_cast<double>(bwd.packets));
    set(kBwdPacketSizeMean, static_cast<double>(bwd.bytes) /
                                static_cast<double>(bwd.packets));
  }
  set(kPacketCount, static_cast<double>(n));
  set(kFwdPacketCount, static_cast<double>(fwd.packets));
  set(kBwdPacketCount, static_cast<double>(bwd.packets));
  set(kByteTotal, static_cast<double>(fwd.bytes + bwd.bytes));
  set(kFwdByteTotal, static_cast<double>(fwd.bytes));
  set(kBwdByteTotal, static_cast<double>(bwd.bytes));

  // Consecutive inter-arrival gaps over the sorted timeline telescope, so
  // the mean is duration / (n - 1).
  if (n >= 2) {
    set(kIatMean, duration / static_cast<double>(n - 1));
  }

  set(kPayloadTotal, static_cast<double>(fwd.payload + bwd.payload));
  set(kFwdPayloadTotal, static_cast<double>(fwd.payload));
  set(kBwdPayloadTotal, static_cast<double>(bwd.payload));

  if (tcp) {
    const std::uint64_t data_total = fwd.data_packets + bwd.data_packets;
    if (data_total > 0) {
      set(kLossRate,
          static_cast<double>(fwd.retransmissions + bwd.retransmissions) /
              static_cast<double>(data_total));
    }
    if (fwd.data_packets > 0) {
      set(kFwdLossRate, static_cast<double>(fwd.retransmissions) /
                            static_cast<double>(fwd.data_packets));
    }
    if (bwd.data_packets > 0) {
      set(kBwdLossRate, static_cast<double>(bwd.retransmissions) /
                            static_cast<double>(bwd.data_packets));
    }
    if (fwd.packets > 0) {
      set(kFwdWindowMean, static_cast<double>(fwd.window_sum) /
                              static_cast<double>(fwd.packets));
    }
    if (bwd.packets > 0) {
      set(kBwdWindowMean, static_cast<double>(bwd.window_sum) /
                              static_cast<double>(bwd.packets));
    }

    // Handshake timings from one observation point: SYN, SYN+ACK, the
    // initiator ACK completing the handshake, then the first payload.
    std::size_t syn_pos = timeline.size();
    for (std::size_t i = 0; i < timeline.size(); ++i) {
      const PacketRecord& p = *timeline[i].pkt;
      if (p.has_flag(kTcpSyn) && !p.has_flag(kTcpAck)) {
        syn_pos = i;
        break;
      }
    }
    std::size_t synack_pos = timeline.size();
    if (syn_pos < timeline.size()) {
      for (std::size_t i = syn_pos + 1; i < timeline.size(); ++i) {
        const PacketRecord& p = *timeline[i].pkt;
        if (p.has_flag(kTcpSyn | kTcpAck)) {
          synack_pos = i;
          break;
        }
      }
    }
    if (synack_pos < timeline.size()) {
      const double t_syn = timeline[syn_pos].pkt->ts;
      set(kTcpRtt, timeline[synack_pos].pkt->ts - t_syn);
      std::size_t ack_pos = timeline.size();
      for (std::size_t i = synack_pos + 1; i < timeline.size(); ++i) {
        const PacketRecord& p = *timeline[i].pkt;
        if (timeline[i].forward && p.has_flag(kTcpAck) &&
            !p.has_flag(kTcpSyn)) {
          ack_pos = i;
          break;
        }
      }
      if (ack_pos < timeline.size()) {
        const double t_ack = timeline[ack_pos].pkt->ts;
        set(kSynAckTime, t_ack - t_syn);
        for (std::size_t i = ack_pos; i < timeline.size(); ++i) {
          if (timeline[i].pkt->payload_len > 0) {
            set(kAckDataTime, timeline[i].pkt->ts - t_ack);
            break;
          }
        }
      }
    }
  }

  if (duration > 0.0) {
    set(kFlowRate, static_cast<double>(n) / duration);
    set(kFwdFlowRate, static_cast<double>(fwd.packets) / duration);
    set(kBwdFlowRate, static_cast<double>(bwd.packets) / duration);
    set(kFwdByteRate, static_cast<double>(fwd.bytes) / duration);
    set(kBwdByteRate, static_cast<double>(bwd.bytes) / duration);
  }

  return out;
}

ExtractionResult extract_batch(std::span<const FlowSession> flows,
                               const Labeler& labeler) {
  ExtractionResult result;
  result.samples.reserve(flows.size());
  for (const FlowSession& flow : flows) {
    std::optional<FlowLabel> label = labeler(flow);
    if (!label) {
      ++result.unlabeled_dropped;
      continue;
    }
    LabeledSample sample;
    sample.features = extract(flow);
    sample.label = label->label;
    sample.attack_type = label->attack_type;
    sample.origin = label->origin;
    if ((sample.label == 0) != (sample.attack_type == "Benign")) {
      throw std::invalid_argument(
          "labeler produced inconsistent label/attack_type pair");
    }
    result.samples.push_back(std::move(sample));
  }
  return result;
}

RuleLabeler::RuleLabeler(std::vector<Rule> rules, std::string origin,
                         std::optional<std::string> default_attack_type)
    : rules_(std::move(rules)),
      origin_(std::move(origin)),
      default_attack_type_(std::move(default_attack_type)) {}

RuleLabeler RuleLabeler::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open label rules: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }
  std::vector<Rule> rules;
  for (const auto& r : j.value("rules", nlohmann::json::array())) {
    Rule rule;
    rule.ip = r.at("ip").get<std::string>();
    if (r.contains("port")) rule.port = r.at("port").get<int>();
    if (r.contains("proto")) rule.proto = r.at("proto").get<int>();
    rule.attack_type = r.at("attack_type").get<std::string>();
    rules.push_back(std::move(rule));
  }
  std::optional<std::string> def;
  if (j.contains("default")) def = j.at("default").get<std::string>();
  return RuleLabeler(std::move(rules), j.value("origin", ""), std::move(def));
}

std::optional<FlowLabel> RuleLabeler::operator()(
    const FlowSession& flow) const {
  auto make = [this](const std::string& attack) {
    return FlowLabel{attack == "Benign" ? 0 : 1, attack, origin_};
  };
  for (const Rule& rule : rules_) {
    if (rule.ip != flow.key.a.ip && rule.ip != flow.key.b.ip) continue;
    if (rule.port && *rule.port != flow.key.a.port &&
        *rule.port != flow.key.b.port) {
      continue;
    }
    if (rule.proto && *rule.proto != flow.key.proto) continue;
    return make(rule.attack_type);
  }
  if (default_attack_type_) return make(*default_attack_type_);
  return std::nullopt;
}

}  // namespace flowdrift
