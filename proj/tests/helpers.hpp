#pragma once

// Shared fixtures and independent oracles for the test suites. Oracle code
// deliberately avoids the library's own metric/gradient implementations.

#include <unistd.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "flowdrift/features.hpp"
#include "flowdrift/flow.hpp"
#include "flowdrift/packet.hpp"
#include "flowdrift/rng.hpp"

namespace testutil {

using namespace flowdrift;

// ---- fixtures -------------------------------------------------------------

struct TempDir {
  std::filesystem::path path;

  TempDir() {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("flowdrift_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

inline PacketRecord make_packet(double ts, const std::string& src_ip,
                                int src_port, const std::string& dst_ip,
                                int dst_port, int proto,
                                std::int64_t ip_len = 60,
                                std::int64_t payload_len = 0, int ttl = 64,
                                unsigned tcp_flags = 0,
                                std::int64_t tcp_window = 0,
                                std::uint32_t tcp_seq = 0) {
  PacketRecord p;
  p.ts = ts;
  p.src_ip = src_ip;
  p.src_port = src_port;
  p.dst_ip = dst_ip;
  p.dst_port = dst_port;
  p.proto = proto;
  p.ip_len = ip_len;
  p.payload_len = payload_len;
  p.ttl = ttl;
  p.tcp_flags = tcp_flags;
  p.tcp_window = tcp_window;
  p.tcp_seq = tcp_seq;
  return p;
}

inline PacketRecord reversed(PacketRecord p) {
  std::swap(p.src_ip, p.dst_ip);
  std::swap(p.src_port, p.dst_port);
  return p;
}

// Builds a closed session directly from per-direction packet lists; the
// initiator is taken from the first forward packet.
inline FlowSession make_flow(std::vector<PacketRecord> fwd,
                             std::vector<PacketRecord> bwd,
                             CloseReason reason = CloseReason::kStreamEnd) {
  FlowSession flow;
  const PacketRecord& head = fwd.empty() ? bwd.front() : fwd.front();
  flow.key = canonical_key(head);
  flow.initiator = fwd.empty() ? Endpoint{head.dst_ip, head.dst_port}
                               : Endpoint{head.src_ip, head.src_port};
  flow.fwd_packets = std::move(fwd);
  flow.bwd_packets = std::move(bwd);
  flow.close_reason = reason;
  double first = 1e300, last = -1e300;
  for (const auto* list : {&flow.fwd_packets, &flow.bwd_packets}) {
    for (const PacketRecord& p : *list) {
      first = std::min(first, p.ts);
      last = std::max(last, p.ts);
    }
  }
  flow.first_ts = first;
  flow.last_ts = last;
  return flow;
}

inline FlowSession direction_swapped(const FlowSession& flow) {
  FlowSession out = flow;
  std::swap(out.fwd_packets, out.bwd_packets);
  out.initiator = out.initiator == Endpoint{flow.key.a.ip, flow.key.a.port}
                      ? Endpoint{flow.key.b.ip, flow.key.b.port}
                      : Endpoint{flow.key.a.ip, flow.key.a.port};
  return out;
}

inline LabeledSample make_sample(int label, double x0 = 0.0, double x1 = 0.0) {
  LabeledSample s;
  s.features.values[0] = x0;
  s.features.values[1] = x1;
  s.features.present.set();
  s.label = label;
  s.attack_type = label ? "Anomaly" : "Benign";
  return s;
}

// Random packet trace over a small endpoint pool, dyadic timestamps so
// time arithmetic is exact.
inline std::vector<PacketRecord> fuzz_trace(Rng& rng, std::size_t n_packets) {
  static const char* ips[] = {"10.0.0.1", "10.0.0.2", "10.0.0.3", "10.0.0.4"};
  std::vector<PacketRecord> trace;
  double ts = 0.0;
  for (std::size_t i = 0; i < n_packets; ++i) {
    ts += static_cast<double>(rng.bounded(4096)) / 1024.0;  // dyadic step
    std::size_t a = rng.bounded(4);
    std::size_t b = (a + 1 + rng.bounded(3)) % 4;
    int proto = rng.bounded(3) == 0 ? kProtoUdp : kProtoTcp;
    std::int64_t payload = static_cast<std::int64_t>(rng.bounded(400));
    PacketRecord p = make_packet(
        ts, ips[a], 1000 + static_cast<int>(rng.bounded(4)), ips[b],
        2000 + static_cast<int>(rng.bounded(4)), proto, 40 + payload, payload,
        32 + static_cast<int>(rng.bounded(96)),
        proto == kProtoTcp ? (rng.bounded(2) ? kTcpAck : kTcpPsh | kTcpAck)
                           : 0u,
        proto == kProtoTcp ? static_cast<std::int64_t>(rng.bounded(65536))
                           : 0,
        static_cast<std::uint32_t>(rng.bounded(100000)));
    if (rng.bounded(2)) p = reversed(p);  // both directions of a 5-tuple
    trace.push_back(std::move(p));
  }
  return trace;
}

// ---- independent metric oracles -------------------------------------------

struct OracleCounts {
  std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
};

inline OracleCounts oracle_confusion(const std::vector<int>& preds,
                                     const std::vector<int>& labels) {
  OracleCounts c;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (labels[i] == 1 && preds[i] == 1) c.tp++;
    if (labels[i] == 0 && preds[i] == 0) c.tn++;
    if (labels[i] == 0 && preds[i] == 1) c.fp++;
    if (labels[i] == 1 && preds[i] == 0) c.fn++;
  }
  return c;
}

inline double oracle_accuracy(const OracleCounts& c) {
  std::uint64_t total = c.tp + c.tn + c.fp + c.fn;
  return total == 0 ? 0.0
                    : static_cast<double>(c.tp + c.tn) /
                          static_cast<double>(total);
}

inline double oracle_precision(const OracleCounts& c) {
  return c.tp + c.fp == 0
             ? 0.0
             : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
}

inline double oracle_recall(const OracleCounts& c) {
  return c.tp + c.fn == 0
             ? 0.0
             : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

inline double oracle_f1(const OracleCounts& c) {
  double p = oracle_precision(c);
  double r = oracle_recall(c);
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

// All positive-negative pairs; ties count one half.
inline double oracle_auroc_pairs(const std::vector<double>& scores,
                                 const std::vector<int>& labels) {
  double wins = 0.0;
  std::uint64_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

}  // namespace testutil
