#include "gbst/pcap.hpp"

#include <fstream>

namespace gbst {

namespace {

constexpr std::uint32_t kMagicNative = 0xa1b2c3d4u;
constexpr std::uint32_t kMagicSwapped = 0xd4c3b2a1u;
constexpr std::uint32_t kLinkEthernet = 1;
constexpr std::uint32_t kLinkRawIp = 101;

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  bool has(std::size_t n) const { return pos_ + n <= bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  void skip(std::size_t n) { pos_ += n; }

  std::uint8_t u8() { return bytes_[pos_++]; }

  std::uint32_t u32(bool swap) {
    std::uint32_t v = 0;
    if (swap) {
      v = std::uint32_t(bytes_[pos_]) | (std::uint32_t(bytes_[pos_ + 1]) << 8) |
          (std::uint32_t(bytes_[pos_ + 2]) << 16) |
          (std::uint32_t(bytes_[pos_ + 3]) << 24);
    } else {
      v = (std::uint32_t(bytes_[pos_]) << 24) |
          (std::uint32_t(bytes_[pos_ + 1]) << 16) |
          (std::uint32_t(bytes_[pos_ + 2]) << 8) |
          std::uint32_t(bytes_[pos_ + 3]);
    }
    pos_ += 4;
    return v;
  }

  std::uint16_t u16be() {
    std::uint16_t v = static_cast<std::uint16_t>(
        (std::uint16_t(bytes_[pos_]) << 8) | bytes_[pos_ + 1]);
    pos_ += 2;
    return v;
  }

  std::uint32_t u32be() {
    std::uint32_t v = (std::uint32_t(bytes_[pos_]) << 24) |
                      (std::uint32_t(bytes_[pos_ + 1]) << 16) |
                      (std::uint32_t(bytes_[pos_ + 2]) << 8) |
                      std::uint32_t(bytes_[pos_ + 3]);
    pos_ += 4;
    return v;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

// Parses the layers inside one captured frame. Returns false when the packet
// is not IPv4 TCP/UDP (the caller counts it).
bool parse_frame(std::span<const std::uint8_t> frame, std::uint32_t link_type,
                 CaptureResult& result, PacketEvent& event) {
  std::size_t off = 0;
  if (link_type == kLinkEthernet) {
    if (frame.size() < 14) {
      ++result.skipped_non_ipv4;
      return false;
    }
    const std::uint16_t ethertype =
        static_cast<std::uint16_t>((frame[12] << 8) | frame[13]);
    if (ethertype != 0x0800) {
      ++result.skipped_non_ipv4;
      return false;
    }
    off = 14;
  }

  if (frame.size() < off + 20 || (frame[off] >> 4) != 4) {
    ++result.skipped_non_ipv4;
    return false;
  }
  const std::size_t ihl = static_cast<std::size_t>(frame[off] & 0x0f) * 4;
  if (ihl < 20 || frame.size() < off + ihl) {
    ++result.skipped_non_ipv4;
    return false;
  }
  const std::uint16_t frag =
      static_cast<std::uint16_t>(((frame[off + 6] & 0x1f) << 8) | frame[off + 7]);
  const std::uint8_t protocol = frame[off + 9];
  if (frag != 0 || (protocol != 6 && protocol != 17)) {
    // non-initial fragments carry no transport header
    ++result.skipped_non_tcp_udp;
    return false;
  }

  event.key.protocol = protocol;
  event.key.src_ip = (std::uint32_t(frame[off + 12]) << 24) |
                     (std::uint32_t(frame[off + 13]) << 16) |
                     (std::uint32_t(frame[off + 14]) << 8) |
                     std::uint32_t(frame[off + 15]);
  event.key.dst_ip = (std::uint32_t(frame[off + 16]) << 24) |
                     (std::uint32_t(frame[off + 17]) << 16) |
                     (std::uint32_t(frame[off + 18]) << 8) |
                     std::uint32_t(frame[off + 19]);

  const std::size_t l4 = off + ihl;
  const std::size_t l4_header = protocol == 6 ? 20 : 8;
  if (frame.size() < l4 + l4_header) {
    ++result.skipped_non_tcp_udp;  // snapped before the transport header
    return false;
  }
  event.key.src_port =
      static_cast<std::uint16_t>((frame[l4] << 8) | frame[l4 + 1]);
  event.key.dst_port =
      static_cast<std::uint16_t>((frame[l4 + 2] << 8) | frame[l4 + 3]);
  if (protocol == 6) {
    const std::uint8_t flags = frame[l4 + 13];
    event.is_tcp = true;
    event.syn = (flags & 0x02) != 0;
    event.rst = (flags & 0x04) != 0;
    event.ack = (flags & 0x10) != 0;
    event.tcp_window =
        static_cast<std::uint16_t>((frame[l4 + 14] << 8) | frame[l4 + 15]);
  }
  return true;
}

}  // namespace

CaptureResult parse_capture(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (!r.has(24)) throw DataError("pcap: file shorter than the global header");
  const std::uint32_t magic = r.u32(false);
  bool swap;
  if (magic == kMagicNative) {
    swap = false;
  } else if (magic == kMagicSwapped) {
    swap = true;
  } else {
    throw DataError("pcap: not a classic pcap file (bad magic)");
  }
  r.skip(2 + 2 + 4 + 4 + 4);  // version, thiszone, sigfigs, snaplen
  const std::uint32_t link_type = r.u32(swap);
  if (link_type != kLinkEthernet && link_type != kLinkRawIp) {
    throw DataError("pcap: unsupported link type " + std::to_string(link_type));
  }

  CaptureResult result;
  while (r.remaining() > 0) {
    if (!r.has(16)) {
      result.truncated = true;
      break;
    }
    const std::uint32_t ts_sec = r.u32(swap);
    const std::uint32_t ts_usec = r.u32(swap);
    const std::uint32_t incl_len = r.u32(swap);
    r.u32(swap);  // orig_len
    if (!r.has(incl_len)) {
      result.truncated = true;
      break;
    }
    PacketEvent event;
    event.ts_us = static_cast<std::int64_t>(ts_sec) * 1'000'000 + ts_usec;
    event.length = incl_len;
    std::span<const std::uint8_t> frame =
        bytes.subspan(bytes.size() - r.remaining(), incl_len);
    r.skip(incl_len);
    if (parse_frame(frame, link_type, result, event)) {
      result.events.push_back(event);
    }
  }
  return result;
}

CaptureResult parse_capture(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open capture file: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return parse_capture(std::span<const std::uint8_t>(bytes));
}

}  // namespace gbst
