#include "gbst/flow.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

namespace gbst {

const std::array<std::string, kFeatureCount> kFeatureNames = {
    "is_forward",     "src_port",     "dst_port",      "index",
    "timestamp",      "protocol",     "length",        "init_win_bytes",
    "iat_before",     "iat_after",    "iat_before_dir", "iat_after_dir",
    "is_syn",         "is_ack",       "is_rst"};

std::string ipv4_to_string(std::uint32_t ip) {
  std::string out;
  out.reserve(15);
  for (int shift = 24; shift >= 0; shift -= 8) {
    out += std::to_string((ip >> shift) & 0xff);
    if (shift > 0) out += '.';
  }
  return out;
}

std::uint32_t ipv4_from_string(std::string_view s) {
  std::uint32_t ip = 0;
  const char* p = s.data();
  const char* end = s.data() + s.size();
  for (int octet = 0; octet < 4; ++octet) {
    unsigned value = 0;
    auto [next, ec] = std::from_chars(p, end, value);
    if (ec != std::errc{} || value > 255 || next == p) {
      throw DataError("invalid IPv4 address: " + std::string(s));
    }
    ip = (ip << 8) | value;
    p = next;
    if (octet < 3) {
      if (p == end || *p != '.') {
        throw DataError("invalid IPv4 address: " + std::string(s));
      }
      ++p;
    }
  }
  if (p != end) throw DataError("invalid IPv4 address: " + std::string(s));
  return ip;
}

Label binarize_label(std::string_view raw_label) {
  constexpr std::string_view kBenign = "benign";
  if (raw_label.size() != kBenign.size()) return Label::kAttack;
  for (std::size_t i = 0; i < kBenign.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(raw_label[i])) != kBenign[i]) {
      return Label::kAttack;
    }
  }
  return Label::kBenign;
}

double PacketRecord::feature(std::size_t j) const {
  switch (j) {
    case feat::kIsForward: return is_forward ? 1.0 : 0.0;
    case feat::kSrcPort: return static_cast<double>(src_port_enc);
    case feat::kDstPort: return static_cast<double>(dst_port_enc);
    case feat::kIndex: return static_cast<double>(index);
    case feat::kTimestamp: return timestamp_rel;
    case feat::kProtocol: return static_cast<double>(protocol);
    case feat::kLength: return static_cast<double>(length);
    case feat::kInitWinBytes: return static_cast<double>(init_win_bytes);
    case feat::kIatBefore: return iat_before;
    case feat::kIatAfter: return iat_after;
    case feat::kIatBeforeDir: return iat_before_dir;
    case feat::kIatAfterDir: return iat_after_dir;
    case feat::kIsSyn: return is_syn ? 1.0 : 0.0;
    case feat::kIsAck: return is_ack ? 1.0 : 0.0;
    case feat::kIsRst: return is_rst ? 1.0 : 0.0;
    default: throw std::invalid_argument("feature index out of range");
  }
}

void compute_stream_features(std::vector<PacketRecord>& packets) {
  const std::size_t n = packets.size();
  // Last seen packet per direction; -1 means none yet.
  std::ptrdiff_t prev_dir[2] = {-1, -1};
  for (std::size_t i = 0; i < n; ++i) {
    PacketRecord& p = packets[i];
    p.index = static_cast<std::uint32_t>(i);
    p.iat_before = i == 0 ? 0.0 : p.timestamp_rel - packets[i - 1].timestamp_rel;
    p.iat_after = 0.0;
    if (i > 0) {
      packets[i - 1].iat_after = p.timestamp_rel - packets[i - 1].timestamp_rel;
    }
    const int dir = p.is_forward ? 1 : 0;
    const std::ptrdiff_t prev = prev_dir[dir];
    p.iat_before_dir =
        prev < 0 ? 0.0 : p.timestamp_rel - packets[prev].timestamp_rel;
    p.iat_after_dir = 0.0;
    if (prev >= 0) {
      packets[prev].iat_after_dir =
          p.timestamp_rel - packets[prev].timestamp_rel;
    }
    prev_dir[dir] = static_cast<std::ptrdiff_t>(i);
  }
}

double flow_duration(const FlowStream& flow, std::optional<std::size_t> prefix) {
  if (flow.packets.empty()) throw std::invalid_argument("empty flow");
  if (prefix && *prefix == 0) throw std::invalid_argument("prefix must be >= 1");
  std::size_t last = flow.packets.size() - 1;
  if (prefix && *prefix - 1 < last) last = *prefix - 1;
  return flow.packets[last].timestamp_rel;
}

}  // namespace gbst
