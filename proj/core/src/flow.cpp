#include "flowdrift/flow.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace flowdrift {

FlowKey canonical_key(const PacketRecord& pkt) {
  Endpoint src{pkt.src_ip, pkt.src_port};
  Endpoint dst{pkt.dst_ip, pkt.dst_port};
  FlowKey key;
  key.proto = pkt.proto;
  if (src <= dst) {
    key.a = std::move(src);
    key.b = std::move(dst);
  } else {
    key.a = std::move(dst);
    key.b = std::move(src);
  }
  return key;
}

std::string close_reason_name(CloseReason reason) {
  switch (reason) {
    case CloseReason::kNone: return "open";
    case CloseReason::kFin: return "fin";
    case CloseReason::kRst: return "rst";
    case CloseReason::kIdleTimeout: return "idle-timeout";
    case CloseReason::kStreamEnd: return "stream-end";
  }
  return "?";
}

namespace {

struct ActiveSession {
  FlowSession session;
  bool fin_fwd = false;
  bool fin_bwd = false;
  std::size_t created_order = 0;
};

// Tolerated sub-millisecond regressions land slightly out of order; keep
// each direction's list sorted by ts.
void append_sorted(std::vector<PacketRecord>& pkts, const PacketRecord& pkt) {
  if (pkts.empty() || pkts.back().ts <= pkt.ts) {
    pkts.push_back(pkt);
    return;
  }
  auto pos = std::upper_bound(
      pkts.begin(), pkts.end(), pkt,
      [](const PacketRecord& a, const PacketRecord& b) { return a.ts < b.ts; });
  pkts.insert(pos, pkt);
}

}  // namespace

std::vector<FlowSession> assemble(std::span<const PacketRecord> stream,
                                  double idle_timeout) {
  if (idle_timeout <= 0.0) {
    throw std::invalid_argument("assemble: idle_timeout must be positive");
  }

  std::vector<FlowSession> emitted;
  std::map<FlowKey, ActiveSession> active;
  std::size_t created = 0;

  auto close_and_emit = [&](ActiveSession& as, CloseReason reason) {
    as.session.close_reason = reason;
    emitted.push_back(std::move(as.session));
  };

  for (const PacketRecord& pkt : stream) {
    FlowKey key = canonical_key(pkt);
    auto it = active.find(key);

    if (it != active.end() &&
        pkt.ts - it->second.session.last_ts > idle_timeout) {
      close_and_emit(it->second, CloseReason::kIdleTimeout);
      active.erase(it);
      it = active.end();
    }

    if (it == active.end()) {
      ActiveSession as;
      as.session.key = key;
      as.session.initiator = Endpoint{pkt.src_ip, pkt.src_port};
      as.session.first_ts = pkt.ts;
      as.session.last_ts = pkt.ts;
      as.created_order = created++;
      it = active.emplace(std::move(key), std::move(as)).first;
    }

    ActiveSession& as = it->second;
    bool forward = Endpoint{pkt.src_ip, pkt.src_port} == as.session.initiator;
    append_sorted(forward ? as.session.fwd_packets : as.session.bwd_packets,
                  pkt);
    as.session.first_ts = std::min(as.session.first_ts, pkt.ts);
    as.session.last_ts = std::max(as.session.last_ts, pkt.ts);

    if (pkt.proto == kProtoTcp) {
      if (pkt.has_flag(kTcpFin)) {
        (forward ? as.fin_fwd : as.fin_bwd) = true;
      }
      if (pkt.has_flag(kTcpRst)) {
        close_and_emit(as, CloseReason::kRst);
        active.erase(it);
        continue;
      }
      if (as.fin_fwd && as.fin_bwd) {
        close_and_emit(as, CloseReason::kFin);
        active.erase(it);
      }
    }
  }

  // Remaining sessions close at stream end, in creation order.
  std::vector<ActiveSession*> rest;
  rest.reserve(active.size());
  for (auto& [key, as] : active) rest.push_back(&as);
  std::sort(rest.begin(), rest.end(),
            [](const ActiveSession* a, const ActiveSession* b) {
              return a->created_order < b->created_order;
            });
  for (ActiveSession* as : rest) {
    close_and_emit(*as, CloseReason::kStreamEnd);
  }
  return emitted;
}

}  // namespace flowdrift
