#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gbst {

// Thrown for malformed or insufficient input data (files, corpora).
// Contract violations (bad arguments) use std::invalid_argument instead.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// IPv4 five-tuple identifying a flow. Equality is exact field equality;
// there is no direction canonicalization (forward orientation is fixed by
// the first observed packet of the stream).
struct FlowKey {
  std::uint32_t src_ip = 0;
  std::uint32_t dst_ip = 0;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  std::uint8_t protocol = 0;

  bool operator==(const FlowKey&) const = default;

  FlowKey reversed() const {
    return FlowKey{dst_ip, src_ip, dst_port, src_port, protocol};
  }
};

struct FlowKeyHash {
  std::size_t operator()(const FlowKey& k) const {
    std::uint64_t a = (std::uint64_t(k.src_ip) << 32) | k.dst_ip;
    std::uint64_t b = (std::uint64_t(k.src_port) << 24) |
                      (std::uint64_t(k.dst_port) << 8) | k.protocol;
    a ^= b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2);
    return std::hash<std::uint64_t>()(a);
  }
};

std::string ipv4_to_string(std::uint32_t ip);
std::uint32_t ipv4_from_string(std::string_view s);  // throws DataError

enum class Label : std::uint8_t { kBenign = 0, kAttack = 1 };

// Maps a raw dataset label onto the binary task: "BENIGN" (any case) is
// benign, everything else is an attack. The raw string survives as the
// stream's vector_tag for per-vector reporting.
Label binarize_label(std::string_view raw_label);

inline constexpr std::size_t kFeatureCount = 15;

// Feature indices of the per-packet header vector, in interchange order.
namespace feat {
inline constexpr std::size_t kIsForward = 0;
inline constexpr std::size_t kSrcPort = 1;
inline constexpr std::size_t kDstPort = 2;
inline constexpr std::size_t kIndex = 3;
inline constexpr std::size_t kTimestamp = 4;
inline constexpr std::size_t kProtocol = 5;
inline constexpr std::size_t kLength = 6;
inline constexpr std::size_t kInitWinBytes = 7;
inline constexpr std::size_t kIatBefore = 8;
inline constexpr std::size_t kIatAfter = 9;
inline constexpr std::size_t kIatBeforeDir = 10;
inline constexpr std::size_t kIatAfterDir = 11;
inline constexpr std::size_t kIsSyn = 12;
inline constexpr std::size_t kIsAck = 13;
inline constexpr std::size_t kIsRst = 14;
}  // namespace feat

extern const std::array<std::string, kFeatureCount> kFeatureNames;

// One packet's header feature vector, the atomic item of a flow stream.
// All numeric features are non-negative. Ports above 1023 are encoded as 0
// (only the well-known range carries signal; high ports overfit).
struct PacketRecord {
  bool is_forward = true;           // same direction as the stream's key
  std::uint16_t src_port_enc = 0;   // source port if <= 1023, else 0
  std::uint16_t dst_port_enc = 0;   // destination port if <= 1023, else 0
  std::uint32_t index = 0;          // 0-based position in the stream
  double timestamp_rel = 0.0;       // seconds since flow start
  std::uint8_t protocol = 0;
  std::uint32_t length = 0;         // captured packet length, bytes
  std::uint32_t init_win_bytes = 0; // TCP initial window; 0 for non-TCP and
                                    // for packets not first in their direction
  double iat_before = 0.0;          // seconds since previous packet (0 if none)
  double iat_after = 0.0;           // seconds until next packet (0 if none)
  double iat_before_dir = 0.0;      // same-direction variants
  double iat_after_dir = 0.0;
  bool is_syn = false;
  bool is_ack = false;
  bool is_rst = false;

  double feature(std::size_t j) const;

  bool operator==(const PacketRecord&) const = default;
};

// An ordered, labeled stream of packets sharing one five-tuple.
// Invariants (maintained by every producer in this library):
//   packets non-empty, packets[i].index == i, timestamp_rel non-decreasing,
//   iat_before[i] == timestamp_rel[i] - timestamp_rel[i-1] (0 for i == 0),
//   iat_after[i] == timestamp_rel[i+1] - timestamp_rel[i] (0 for the last).
struct FlowStream {
  FlowKey key;
  std::int64_t start_ts_us = 0;  // absolute, microseconds since epoch
  std::vector<PacketRecord> packets;
  Label label = Label::kBenign;
  std::string vector_tag;  // original dataset label, free-form
};

// Fills index, iat_before/iat_after and their same-direction variants from
// timestamp_rel and is_forward. The same arithmetic is used wherever the
// invariants are checked, so they hold exactly.
void compute_stream_features(std::vector<PacketRecord>& packets);

// Elapsed time in seconds from the first packet to packet min(p, n) - 1.
// With no prefix, the complete flow duration. p == 0 is an error.
double flow_duration(const FlowStream& flow,
                     std::optional<std::size_t> prefix = std::nullopt);

}  // namespace gbst
