#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace flowdrift {

// IP protocol numbers, plus an out-of-range id so ARP frames can be tagged
// in pre-decoded traces and filtered like any other protocol.
inline constexpr int kProtoIcmp = 1;
inline constexpr int kProtoTcp = 6;
inline constexpr int kProtoUdp = 17;
inline constexpr int kProtoIcmp6 = 58;
inline constexpr int kProtoArp = 2054;

bool is_portless_proto(int proto);
std::string proto_name(int proto);

// TCP flag bits as encoded in PacketRecord::tcp_flags.
inline constexpr unsigned kTcpFin = 0x01;
inline constexpr unsigned kTcpSyn = 0x02;
inline constexpr unsigned kTcpRst = 0x04;
inline constexpr unsigned kTcpPsh = 0x08;
inline constexpr unsigned kTcpAck = 0x10;
inline constexpr unsigned kTcpUrg = 0x20;
inline constexpr unsigned kTcpEce = 0x40;
inline constexpr unsigned kTcpCwr = 0x80;

// One pre-decoded packet. TCP fields are zero for non-TCP protocols.
struct PacketRecord {
  double ts = 0.0;  // seconds since epoch, fractional
  std::string src_ip;
  std::string dst_ip;
  int src_port = 0;
  int dst_port = 0;
  int proto = 0;
  std::int64_t ip_len = 0;
  std::int64_t payload_len = 0;
  int ttl = 0;
  unsigned tcp_flags = 0;
  std::int64_t tcp_window = 0;
  std::uint32_t tcp_seq = 0;
  std::uint32_t tcp_ack = 0;

  bool has_flag(unsigned mask) const { return (tcp_flags & mask) == mask; }
};

struct FilterPolicy {
  std::set<int> drop_protocols{kProtoArp};
  // Timestamp regressions up to this tolerance are accepted (capture jitter)
  // and reordered inside the owning session; larger ones are malformed input.
  double ts_regression_tolerance = 1e-3;
};

struct FilterResult {
  std::vector<PacketRecord> packets;
  std::map<int, std::size_t> dropped_by_proto;
};

// Removes packets whose protocol is listed in policy.drop_protocols,
// preserving order and counting drops per protocol. Throws RecordError on
// malformed records (negative lengths, payload > ip_len, out-of-tolerance
// timestamp regression).
FilterResult filter_packets(std::span<const PacketRecord> stream,
                            const FilterPolicy& policy = {});

// Packet CSV columns, in order:
//   ts,src_ip,dst_ip,src_port,dst_port,proto,ip_len,payload_len,ttl,
//   tcp_flags,tcp_window,tcp_seq,tcp_ack
// JSONL uses the same field names, one object per line.
std::vector<PacketRecord> read_packet_csv(const std::string& path);
std::vector<PacketRecord> read_packet_jsonl(const std::string& path);
void write_packet_csv(std::span<const PacketRecord> packets,
                      const std::string& path);

}  // namespace flowdrift
