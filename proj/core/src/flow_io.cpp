#include "gbst/flow_io.hpp"

#include <fstream>

#include <json.hpp>

namespace gbst {

using nlohmann::json;

std::string flow_to_json_line(const FlowStream& flow) {
  json packets = json::array();
  for (const PacketRecord& p : flow.packets) {
    json row = json::array();
    for (std::size_t j = 0; j < kFeatureCount; ++j) row.push_back(p.feature(j));
    packets.push_back(std::move(row));
  }
  json obj = {
      {"key",
       {{"src_ip", ipv4_to_string(flow.key.src_ip)},
        {"dst_ip", ipv4_to_string(flow.key.dst_ip)},
        {"src_port", flow.key.src_port},
        {"dst_port", flow.key.dst_port},
        {"protocol", flow.key.protocol}}},
      {"start_ts_us", flow.start_ts_us},
      {"label", flow.label == Label::kAttack ? "Attack" : "Benign"},
      {"vector", flow.vector_tag},
      {"packets", std::move(packets)},
  };
  return obj.dump();
}

FlowStream flow_from_json_line(const std::string& line) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::exception& e) {
    throw DataError(std::string("bad flow JSON: ") + e.what());
  }
  try {
    FlowStream flow;
    const json& key = obj.at("key");
    flow.key.src_ip = ipv4_from_string(key.at("src_ip").get<std::string>());
    flow.key.dst_ip = ipv4_from_string(key.at("dst_ip").get<std::string>());
    flow.key.src_port = key.at("src_port").get<std::uint16_t>();
    flow.key.dst_port = key.at("dst_port").get<std::uint16_t>();
    flow.key.protocol = key.at("protocol").get<std::uint8_t>();
    flow.start_ts_us = obj.at("start_ts_us").get<std::int64_t>();
    flow.label = binarize_label(obj.at("label").get<std::string>());
    flow.vector_tag = obj.value("vector", std::string{});
    for (const json& row : obj.at("packets")) {
      if (row.size() != kFeatureCount) {
        throw DataError("flow JSON: packet vector must carry " +
                        std::to_string(kFeatureCount) + " features");
      }
      PacketRecord p;
      p.is_forward = row[feat::kIsForward].get<double>() != 0.0;
      p.src_port_enc =
          static_cast<std::uint16_t>(row[feat::kSrcPort].get<double>());
      p.dst_port_enc =
          static_cast<std::uint16_t>(row[feat::kDstPort].get<double>());
      p.index = static_cast<std::uint32_t>(row[feat::kIndex].get<double>());
      p.timestamp_rel = row[feat::kTimestamp].get<double>();
      p.protocol = static_cast<std::uint8_t>(row[feat::kProtocol].get<double>());
      p.length = static_cast<std::uint32_t>(row[feat::kLength].get<double>());
      p.init_win_bytes =
          static_cast<std::uint32_t>(row[feat::kInitWinBytes].get<double>());
      p.iat_before = row[feat::kIatBefore].get<double>();
      p.iat_after = row[feat::kIatAfter].get<double>();
      p.iat_before_dir = row[feat::kIatBeforeDir].get<double>();
      p.iat_after_dir = row[feat::kIatAfterDir].get<double>();
      p.is_syn = row[feat::kIsSyn].get<double>() != 0.0;
      p.is_ack = row[feat::kIsAck].get<double>() != 0.0;
      p.is_rst = row[feat::kIsRst].get<double>() != 0.0;
      flow.packets.push_back(p);
    }
    if (flow.packets.empty()) throw DataError("flow JSON: empty packet list");
    return flow;
  } catch (const json::exception& e) {
    throw DataError(std::string("bad flow JSON: ") + e.what());
  }
}

void write_flows_jsonl(const std::filesystem::path& path,
                       std::span<const FlowStream> flows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write flow file: " + path.string());
  for (const FlowStream& f : flows) out << flow_to_json_line(f) << '\n';
}

std::vector<FlowStream> read_flows_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open flow file: " + path.string());
  std::vector<FlowStream> flows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    flows.push_back(flow_from_json_line(line));
  }
  return flows;
}

void write_cdf_csv(const std::filesystem::path& path, const CdfPoints& points) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write CDF file: " + path.string());
  out << "log10_duration_s,cdf\n";
  out.precision(12);
  for (const auto& [x, y] : points) out << x << ',' << y << '\n';
}

namespace {

json report_to_json_obj(const EvalReport& r) {
  json obj = {
      {"tp", r.tp},       {"fp", r.fp},
      {"tn", r.tn},       {"fn", r.fn},
      {"recall", r.recall}, {"precision", r.precision},
      {"accuracy", r.accuracy}, {"f1", r.f1},
  };
  json undefined = json::array();
  if (!r.recall_defined) undefined.push_back("recall");
  if (!r.precision_defined) undefined.push_back("precision");
  if (!r.accuracy_defined) undefined.push_back("accuracy");
  if (!r.f1_defined) undefined.push_back("f1");
  if (!undefined.empty()) obj["undefined"] = std::move(undefined);
  if (r.prefix) obj["prefix"] = *r.prefix;
  if (!r.per_vector.empty()) {
    json per = json::object();
    for (const auto& [tag, sub] : r.per_vector) {
      per[tag] = report_to_json_obj(sub);
    }
    obj["per_vector"] = std::move(per);
  }
  return obj;
}

}  // namespace

std::string eval_report_to_json(const EvalReport& report) {
  return report_to_json_obj(report).dump(2);
}

std::string duration_stats_to_json(const DurationStats& stats) {
  json groups = json::object();
  for (const DurationGroupStats& g : stats.groups) {
    json entry = {
        {"n_flows", g.n_flows},
        {"mean_packets", g.mean_packets},
        {"median_packets", g.median_packets},
    };
    json durations = json::object();
    for (const auto& [p, ms] : g.mean_duration_ms) {
      durations[p == 0 ? "full" : std::to_string(p)] = ms;
    }
    entry["mean_duration_ms"] = std::move(durations);
    groups[g.group] = std::move(entry);
  }
  return json{{"groups", std::move(groups)}}.dump(2);
}

}  // namespace gbst
