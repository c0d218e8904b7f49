#include "flowdrift/packet.hpp"

#include <algorithm>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "csv_util.hpp"
#include "flowdrift/errors.hpp"

namespace flowdrift {

namespace {

constexpr const char* kPacketColumns[] = {
    "ts",      "src_ip",    "dst_ip",     "src_port", "dst_port",
    "proto",   "ip_len",    "payload_len", "ttl",     "tcp_flags",
    "tcp_window", "tcp_seq", "tcp_ack"};
constexpr std::size_t kPacketColumnCount = 13;

void validate_record(const PacketRecord& r, std::size_t index) {
  if (r.ts < 0.0) throw RecordError(index, "negative timestamp");
  if (r.ip_len < 0 || r.payload_len < 0) {
    throw RecordError(index, "negative length");
  }
  if (r.payload_len > r.ip_len) {
    throw RecordError(index, "payload_len exceeds ip_len");
  }
  if (r.src_port < 0 || r.src_port > 65535 || r.dst_port < 0 ||
      r.dst_port > 65535) {
    throw RecordError(index, "port out of range");
  }
  if (r.ttl < 0 || r.ttl > 255) throw RecordError(index, "ttl out of range");
  if (r.tcp_flags > 255) throw RecordError(index, "tcp_flags out of range");
  bool no_ports = r.src_port == 0 && r.dst_port == 0;
  if (is_portless_proto(r.proto) && !no_ports) {
    throw RecordError(index, "ports set on portless protocol " +
                                 proto_name(r.proto));
  }
  if (!is_portless_proto(r.proto) && no_ports) {
    throw RecordError(index, "both ports zero on ported protocol");
  }
}

}  // namespace

bool is_portless_proto(int proto) {
  return proto == kProtoIcmp || proto == kProtoIcmp6 || proto == kProtoArp;
}

std::string proto_name(int proto) {
  switch (proto) {
    case kProtoIcmp: return "ICMP";
    case kProtoTcp: return "TCP";
    case kProtoUdp: return "UDP";
    case kProtoIcmp6: return "ICMPv6";
    case kProtoArp: return "ARP";
    default: return "proto" + std::to_string(proto);
  }
}

FilterResult filter_packets(std::span<const PacketRecord> stream,
                            const FilterPolicy& policy) {
  FilterResult result;
  result.packets.reserve(stream.size());
  double prev_ts = 0.0;
  bool have_prev = false;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const PacketRecord& r = stream[i];
    validate_record(r, i);
    if (have_prev && r.ts < prev_ts - policy.ts_regression_tolerance) {
      throw RecordError(i, "timestamp regression beyond tolerance");
    }
    prev_ts = have_prev ? std::max(prev_ts, r.ts) : r.ts;
    have_prev = true;
    if (policy.drop_protocols.contains(r.proto)) {
      ++result.dropped_by_proto[r.proto];
      continue;
    }
    result.packets.push_back(r);
  }
  return result;
}

std::vector<PacketRecord> read_packet_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open packet csv: " + path);

  std::string line;
  if (!std::getline(in, line)) {
    throw SchemaError(path + ": missing header");
  }
  auto header = detail::split_csv_line(line);
  if (header.size() != kPacketColumnCount) {
    throw SchemaError(path + ": expected " +
                      std::to_string(kPacketColumnCount) + " columns, got " +
                      std::to_string(header.size()));
  }
  for (std::size_t i = 0; i < kPacketColumnCount; ++i) {
    if (std::string(detail::trim(header[i])) != kPacketColumns[i]) {
      throw SchemaError(path + ": missing column '" +
                        std::string(kPacketColumns[i]) + "' (found '" +
                        header[i] + "')");
    }
  }

  std::vector<PacketRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split_csv_line(line);
    if (fields.size() != kPacketColumnCount) {
      throw SchemaError(path + ":" + std::to_string(line_no) +
                        ": wrong field count");
    }
    auto num = [&](std::size_t col) -> double {
      auto v = detail::parse_double(detail::trim(fields[col]));
      if (!v) {
        throw SchemaError(path + ":" + std::to_string(line_no) +
                          ": unparsable field '" +
                          std::string(kPacketColumns[col]) + "'");
      }
      return *v;
    };
    auto integer = [&](std::size_t col) -> std::int64_t {
      auto v = detail::parse_int(detail::trim(fields[col]));
      if (!v) {
        throw SchemaError(path + ":" + std::to_string(line_no) +
                          ": unparsable field '" +
                          std::string(kPacketColumns[col]) + "'");
      }
      return *v;
    };

    PacketRecord r;
    r.ts = num(0);
    r.src_ip = std::string(detail::trim(fields[1]));
    r.dst_ip = std::string(detail::trim(fields[2]));
    r.src_port = static_cast<int>(integer(3));
    r.dst_port = static_cast<int>(integer(4));
    r.proto = static_cast<int>(integer(5));
    r.ip_len = integer(6);
    r.payload_len = integer(7);
    r.ttl = static_cast<int>(integer(8));
    std::int64_t flags = integer(9);
    if (flags < 0) {
      throw SchemaError(path + ":" + std::to_string(line_no) +
                        ": negative tcp_flags");
    }
    r.tcp_flags = static_cast<unsigned>(flags);
    r.tcp_window = integer(10);
    r.tcp_seq = static_cast<std::uint32_t>(integer(11));
    r.tcp_ack = static_cast<std::uint32_t>(integer(12));

    try {
      validate_record(r, line_no);
    } catch (const RecordError& e) {
      throw SchemaError(path + ":" + std::to_string(line_no) + ": " +
                        e.what());
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<PacketRecord> read_packet_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open packet jsonl: " + path);

  std::vector<PacketRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(path + ":" + std::to_string(line_no) + ": " +
                        e.what());
    }
    for (const char* col : kPacketColumns) {
      if (!j.contains(col)) {
        throw SchemaError(path + ":" + std::to_string(line_no) +
                          ": missing field '" + col + "'");
      }
    }
    PacketRecord r;
    try {
      r.ts = j.at("ts").get<double>();
      r.src_ip = j.at("src_ip").get<std::string>();
      r.dst_ip = j.at("dst_ip").get<std::string>();
      r.src_port = j.at("src_port").get<int>();
      r.dst_port = j.at("dst_port").get<int>();
      r.proto = j.at("proto").get<int>();
      r.ip_len = j.at("ip_len").get<std::int64_t>();
      r.payload_len = j.at("payload_len").get<std::int64_t>();
      r.ttl = j.at("ttl").get<int>();
      r.tcp_flags = j.at("tcp_flags").get<unsigned>();
      r.tcp_window = j.at("tcp_window").get<std::int64_t>();
      r.tcp_seq = j.at("tcp_seq").get<std::uint32_t>();
      r.tcp_ack = j.at("tcp_ack").get<std::uint32_t>();
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(path + ":" + std::to_string(line_no) + ": " +
                        e.what());
    }
    try {
      validate_record(r, line_no);
    } catch (const RecordError& e) {
      throw SchemaError(path + ":" + std::to_string(line_no) + ": " +
                        e.what());
    }
    records.push_back(std::move(r));
  }
  return records;
}

void write_packet_csv(std::span<const PacketRecord> packets,
                      const std::string& path) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write packet csv: " + path);
  for (std::size_t i = 0; i < kPacketColumnCount; ++i) {
    out << (i ? "," : "") << kPacketColumns[i];
  }
  out << "\n";
  for (const PacketRecord& r : packets) {
    out << detail::format_double(r.ts, 17) << ',' << r.src_ip << ','
        << r.dst_ip << ',' << r.src_port << ',' << r.dst_port << ','
        << r.proto << ',' << r.ip_len << ',' << r.payload_len << ',' << r.ttl
        << ',' << r.tcp_flags << ',' << r.tcp_window << ',' << r.tcp_seq
        << ',' << r.tcp_ack << "\n";
  }
}

}  // namespace flowdrift
