#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "gbst/flow.hpp"

namespace gbst {

// One IPv4 TCP/UDP packet, as read from a capture.
struct PacketEvent {
  FlowKey key;
  std::int64_t ts_us = 0;       // absolute, microseconds since epoch
  std::uint32_t length = 0;     // captured length
  bool is_tcp = false;
  bool syn = false;
  bool ack = false;
  bool rst = false;
  std::uint16_t tcp_window = 0;
};

struct CaptureResult {
  std::vector<PacketEvent> events;   // in file order
  std::uint64_t skipped_non_ipv4 = 0;
  std::uint64_t skipped_non_tcp_udp = 0;
  bool truncated = false;  // the file ended inside a packet record
};

// Reads a classic pcap file (magic 0xa1b2c3d4 in either byte order,
// microsecond timestamps; link types Ethernet and raw IPv4). Non-IPv4 and
// non-TCP/UDP packets are skipped and counted. A malformed global header is
// fatal; a truncated trailing record stops parsing with the flag set.
CaptureResult parse_capture(std::span<const std::uint8_t> bytes);
CaptureResult parse_capture(const std::filesystem::path& path);

}  // namespace gbst
