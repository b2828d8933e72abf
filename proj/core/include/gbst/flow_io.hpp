#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gbst/eval.hpp"
#include "gbst/flow.hpp"

namespace gbst {

// JSON-lines flow interchange: one object per line,
//   {"key":{"src_ip":"a.b.c.d","dst_ip":"a.b.c.d","src_port":n,
//           "dst_port":n,"protocol":n},
//    "start_ts_us":n,"label":"Benign"|"Attack","vector":"...",
//    "packets":[[15 numbers], ...]}
// with the packet arrays in feature order (kFeatureNames).
std::string flow_to_json_line(const FlowStream& flow);
FlowStream flow_from_json_line(const std::string& line);

void write_flows_jsonl(const std::filesystem::path& path,
                       std::span<const FlowStream> flows);
std::vector<FlowStream> read_flows_jsonl(const std::filesystem::path& path);

// CSV with columns log10_duration_s,cdf.
void write_cdf_csv(const std::filesystem::path& path, const CdfPoints& points);

std::string eval_report_to_json(const EvalReport& report);
std::string duration_stats_to_json(const DurationStats& stats);

}  // namespace gbst
