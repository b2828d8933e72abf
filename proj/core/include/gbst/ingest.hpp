#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gbst/flow.hpp"
#include "gbst/pcap.hpp"

namespace gbst {

// One row of the label table. (key, start_ts_us) pairs are unique; the start
// timestamp disambiguates reuses of the same five-tuple.
struct LabelRow {
  FlowKey key;
  std::int64_t start_ts_us = 0;
  std::string raw_label;
};

// CSV with header src_ip,dst_ip,src_port,dst_port,protocol,start_ts_us,label.
std::vector<LabelRow> read_label_csv(const std::filesystem::path& path);

struct ReconstructResult {
  std::vector<FlowStream> flows;  // in label-row order
  std::uint64_t matched_packets = 0;
  std::uint64_t unmatched_packets = 0;
};

// Assigns each event to the label row matching its five-tuple in either
// direction whose start_ts is the greatest value <= the event timestamp
// (how exporters attribute packets to the most recent session). Events with
// no matching row are counted, not fatal. Every emitted stream satisfies the
// FlowStream invariants; a stream's key takes the orientation of its first
// packet, so is_forward is relative to that packet's direction.
ReconstructResult reconstruct_flows(std::span<const PacketEvent> events,
                                    std::span<const LabelRow> labels);

struct SplitSpec {
  std::uint64_t n_train_benign = 0;
  std::uint64_t n_train_attack = 0;
  std::uint64_t n_val_benign = 0;
  std::uint64_t n_val_attack = 0;
  std::uint64_t n_test_benign = 0;
  std::uint64_t n_test_attack = 0;
  std::uint64_t seed = 0;
};

struct SplitResult {
  std::vector<FlowStream> train;
  std::vector<FlowStream> val;
  std::vector<FlowStream> test;
};

// Disjoint per-class uniform samples without replacement, deterministic for
// a given seed. Errors (naming the class and shortfall) when the corpus has
// fewer flows of a class than requested.
SplitResult balance_split(std::span<const FlowStream> flows,
                          const SplitSpec& spec);

inline constexpr double kFlowRecordBytes = 150.0;   // NetFlow-style record
inline constexpr double kPacketHeaderBytes = 40.0;  // IP + TCP headers

// Inspected-data volume of the two flow representations; portions are
// fractions of the supplied raw traffic size in bytes.
struct VolumeReport {
  std::uint64_t n_flows = 0;
  std::uint64_t n_packets = 0;
  double flow_record_bytes = 0.0;
  double packet_header_bytes = 0.0;
  std::optional<double> flow_portion;
  std::optional<double> packet_portion;
};

VolumeReport volume_report(std::span<const FlowStream> flows,
                           std::optional<double> raw_traffic_bytes = {});
VolumeReport volume_report(std::uint64_t n_flows, std::uint64_t n_packets,
                           std::optional<double> raw_traffic_bytes = {});

}  // namespace gbst
