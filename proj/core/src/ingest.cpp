#include "gbst/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <map>
#include <tuple>

#include "gbst/rng.hpp"

namespace gbst {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

template <typename T>
T parse_int(const std::string& s, const char* what, std::size_t line_no) {
  T value{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw DataError("label CSV line " + std::to_string(line_no) + ": bad " +
                    what + " '" + s + "'");
  }
  return value;
}

}  // namespace

std::vector<LabelRow> read_label_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open label file: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("label CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::string expected =
      "src_ip,dst_ip,src_port,dst_port,protocol,start_ts_us,label";
  if (line != expected) {
    throw DataError("label CSV header mismatch, expected: " + expected);
  }

  std::vector<LabelRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != 7) {
      throw DataError("label CSV line " + std::to_string(line_no) +
                      ": expected 7 fields, got " + std::to_string(f.size()));
    }
    LabelRow row;
    row.key.src_ip = ipv4_from_string(f[0]);
    row.key.dst_ip = ipv4_from_string(f[1]);
    row.key.src_port = parse_int<std::uint16_t>(f[2], "src_port", line_no);
    row.key.dst_port = parse_int<std::uint16_t>(f[3], "dst_port", line_no);
    row.key.protocol = parse_int<std::uint8_t>(f[4], "protocol", line_no);
    row.start_ts_us = parse_int<std::int64_t>(f[5], "start_ts_us", line_no);
    row.raw_label = f[6];
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

// Direction-free key used to index the label table.
using CanonicalKey =
    std::tuple<std::uint32_t, std::uint32_t, std::uint16_t, std::uint16_t,
               std::uint8_t>;

CanonicalKey canonical(const FlowKey& k) {
  CanonicalKey fwd{k.src_ip, k.dst_ip, k.src_port, k.dst_port, k.protocol};
  CanonicalKey rev{k.dst_ip, k.src_ip, k.dst_port, k.src_port, k.protocol};
  return std::min(fwd, rev);
}

}  // namespace

ReconstructResult reconstruct_flows(std::span<const PacketEvent> events,
                                    std::span<const LabelRow> labels) {
  // start timestamps per canonical key, sorted for greatest-<= lookup
  std::map<CanonicalKey, std::vector<std::pair<std::int64_t, std::size_t>>>
      table;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    table[canonical(labels[i].key)].emplace_back(labels[i].start_ts_us, i);
  }
  for (auto& [key, starts] : table) std::sort(starts.begin(), starts.end());

  ReconstructResult result;
  std::vector<std::vector<const PacketEvent*>> per_row(labels.size());
  for (const PacketEvent& event : events) {
    const auto it = table.find(canonical(event.key));
    if (it == table.end()) {
      ++result.unmatched_packets;
      continue;
    }
    const auto& starts = it->second;
    auto pos = std::upper_bound(
        starts.begin(), starts.end(),
        std::make_pair(event.ts_us, std::numeric_limits<std::size_t>::max()));
    if (pos == starts.begin()) {
      ++result.unmatched_packets;  // before the earliest session start
      continue;
    }
    per_row[(pos - 1)->second].push_back(&event);
    ++result.matched_packets;
  }

  for (std::size_t row = 0; row < labels.size(); ++row) {
    const auto& pkts = per_row[row];
    if (pkts.empty()) continue;
    std::vector<const PacketEvent*> ordered = pkts;
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const PacketEvent* a, const PacketEvent* b) {
                       return a->ts_us < b->ts_us;
                     });

    FlowStream flow;
    // Forward orientation is fixed by the first observed packet.
    flow.key = ordered.front()->key;
    flow.start_ts_us = ordered.front()->ts_us;
    flow.label = binarize_label(labels[row].raw_label);
    flow.vector_tag = labels[row].raw_label;
    flow.packets.resize(ordered.size());
    for (std::size_t i = 0; i < ordered.size(); ++i) {
      const PacketEvent& e = *ordered[i];
      PacketRecord& p = flow.packets[i];
      p.is_forward = e.key == flow.key;
      p.timestamp_rel =
          static_cast<double>(e.ts_us - flow.start_ts_us) / 1e6;
      p.protocol = e.key.protocol;
      p.length = e.length;
      p.src_port_enc = e.key.src_port <= 1023 ? e.key.src_port : 0;
      p.dst_port_enc = e.key.dst_port <= 1023 ? e.key.dst_port : 0;
      p.is_syn = e.syn;
      p.is_ack = e.ack;
      p.is_rst = e.rst;
    }
    compute_stream_features(flow.packets);

    bool seen_dir[2] = {false, false};
    for (std::size_t i = 0; i < ordered.size(); ++i) {
      PacketRecord& p = flow.packets[i];
      const int dir = p.is_forward ? 1 : 0;
      if (!seen_dir[dir] && ordered[i]->is_tcp) {
        p.init_win_bytes = ordered[i]->tcp_window;
      }
      seen_dir[dir] = true;
    }
    result.flows.push_back(std::move(flow));
  }
  return result;
}

SplitResult balance_split(std::span<const FlowStream> flows,
                          const SplitSpec& spec) {
  std::vector<std::size_t> benign, attack;
  for (std::size_t i = 0; i < flows.size(); ++i) {
    (flows[i].label == Label::kBenign ? benign : attack).push_back(i);
  }
  const std::uint64_t need_benign =
      spec.n_train_benign + spec.n_val_benign + spec.n_test_benign;
  const std::uint64_t need_attack =
      spec.n_train_attack + spec.n_val_attack + spec.n_test_attack;
  if (benign.size() < need_benign) {
    throw DataError("balance_split: benign shortfall, need " +
                    std::to_string(need_benign) + " but corpus has " +
                    std::to_string(benign.size()));
  }
  if (attack.size() < need_attack) {
    throw DataError("balance_split: attack shortfall, need " +
                    std::to_string(need_attack) + " but corpus has " +
                    std::to_string(attack.size()));
  }

  Rng rng(spec.seed);
  deterministic_shuffle(benign, rng);
  deterministic_shuffle(attack, rng);

  SplitResult out;
  std::size_t b = 0, a = 0;
  auto take = [&](std::vector<FlowStream>& dst, std::uint64_t nb,
                  std::uint64_t na) {
    for (std::uint64_t i = 0; i < nb; ++i) dst.push_back(flows[benign[b++]]);
    for (std::uint64_t i = 0; i < na; ++i) dst.push_back(flows[attack[a++]]);
  };
  take(out.train, spec.n_train_benign, spec.n_train_attack);
  take(out.val, spec.n_val_benign, spec.n_val_attack);
  take(out.test, spec.n_test_benign, spec.n_test_attack);
  return out;
}

VolumeReport volume_report(std::uint64_t n_flows, std::uint64_t n_packets,
                           std::optional<double> raw_traffic_bytes) {
  VolumeReport r;
  r.n_flows = n_flows;
  r.n_packets = n_packets;
  r.flow_record_bytes = kFlowRecordBytes * static_cast<double>(n_flows);
  r.packet_header_bytes = kPacketHeaderBytes * static_cast<double>(n_packets);
  if (raw_traffic_bytes) {
    if (*raw_traffic_bytes <= 0.0) {
      throw std::invalid_argument("volume_report: raw size must be > 0");
    }
    r.flow_portion = r.flow_record_bytes / *raw_traffic_bytes;
    r.packet_portion = r.packet_header_bytes / *raw_traffic_bytes;
  }
  return r;
}

VolumeReport volume_report(std::span<const FlowStream> flows,
                           std::optional<double> raw_traffic_bytes) {
  std::uint64_t packets = 0;
  for (const FlowStream& f : flows) packets += f.packets.size();
  return volume_report(flows.size(), packets, raw_traffic_bytes);
}

}  // namespace gbst
