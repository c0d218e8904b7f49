#pragma once

#include <compare>
#include <span>
#include <string>
#include <vector>

#include "flowdrift/packet.hpp"

namespace flowdrift {

struct Endpoint {
  std::string ip;
  int port = 0;

  friend auto operator<=>(const Endpoint&, const Endpoint&) = default;
};

// Canonical bidirectional 5-tuple: the lexicographically smaller endpoint is
// always stored first, so key(A->B) == key(B->A).
struct FlowKey {
  Endpoint a;
  Endpoint b;
  int proto = 0;

  friend auto operator<=>(const FlowKey&, const FlowKey&) = default;
};

FlowKey canonical_key(const PacketRecord& pkt);

enum class CloseReason { kNone, kFin, kRst, kIdleTimeout, kStreamEnd };

std::string close_reason_name(CloseReason reason);

// A bidirectional session. Forward = sent by the initiator (the endpoint
// that sent the first observed packet).
struct FlowSession {
  FlowKey key;
  Endpoint initiator;
  std::vector<PacketRecord> fwd_packets;
  std::vector<PacketRecord> bwd_packets;
  CloseReason close_reason = CloseReason::kNone;
  double first_ts = 0.0;
  double last_ts = 0.0;

  bool closed() const { return close_reason != CloseReason::kNone; }
  std::size_t packet_count() const {
    return fwd_packets.size() + bwd_packets.size();
  }
};

inline constexpr double kDefaultIdleTimeout = 64.0;

// Groups a filtered, time-ordered stream into sessions. A TCP session closes
// on FIN seen in both directions or on RST; any session closes after
// idle_timeout seconds of inactivity or at stream end. A packet arriving for
// a closed key opens a new session. Emission order: close order, then
// still-open sessions in creation order at stream end.
std::vector<FlowSession> assemble(std::span<const PacketRecord> stream,
                                  double idle_timeout = kDefaultIdleTimeout);

}  // namespace flowdrift
