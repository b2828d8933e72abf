#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gbst/booster.hpp"
#include "gbst/flow.hpp"

namespace gbst {

// Confusion counts and the derived metrics. Metrics with a zero denominator
// are reported as 0 with the matching *_defined flag cleared, keeping
// reports serializable and comparable.
struct EvalReport {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;
  double recall = 0.0;
  double precision = 0.0;
  double accuracy = 0.0;
  double f1 = 0.0;
  bool recall_defined = true;
  bool precision_defined = true;
  bool accuracy_defined = true;
  bool f1_defined = true;
  std::optional<std::size_t> prefix;
  // Sub-reports keyed by vector tag, sorted by tag. (std::vector because the
  // element type is incomplete here.)
  std::vector<std::pair<std::string, EvalReport>> per_vector;
};

// First min(p, n) packets of the flow; the new final packet's iat_after and
// iat_after_dir reset to 0, everything else is carried over unchanged.
// p == 0 is an error.
FlowStream truncate(const FlowStream& flow, std::size_t p);

// Positive class is Attack. recall = TP/(TP+FN), precision = TP/(TP+FP),
// accuracy = (TP+TN)/total, f1 = 2RP/(R+P).
EvalReport compute_metrics(std::span<const Label> predictions,
                           std::span<const Label> labels);

struct EvaluateOptions {
  std::optional<std::size_t> prefix;  // classify on the first p packets only
  bool per_vector = false;
  // Balance each per-vector sub-report: the first k benign and first k
  // vector flows in input order, k the smaller of the two counts.
  bool balance_per_vector = false;
  double threshold = 0.5;
};

// Classifies every flow (truncated to the prefix when one is given) with the
// single supplied model and aggregates the confusion metrics, optionally per
// attack vector tag.
EvalReport evaluate(const GbstModel& model, std::span<const FlowStream> flows,
                    const EvaluateOptions& options = {});

// TS% = 100 * (1 - d / D): the share of the mean complete-flow duration D
// saved by deciding after the mean prefix duration d. D must be positive.
double time_saving(double prefix_mean_duration, double full_mean_duration);

// (log10 duration_s, cumulative fraction) points; durations below 1 us are
// clamped to 1 us for the log axis (source timestamps carry microsecond
// precision, so 0-duration single-packet flows would otherwise diverge).
using CdfPoints = std::vector<std::pair<double, double>>;

// Per-group duration and packet-count distributions. prefix 0 denotes the
// complete flow in the two per-prefix tables.
struct DurationGroupStats {
  std::string group;
  std::uint64_t n_flows = 0;
  double mean_packets = 0.0;
  std::uint64_t median_packets = 0;  // lower middle element for even counts
  std::vector<std::pair<std::size_t, double>> mean_duration_ms;
  std::vector<std::pair<std::size_t, CdfPoints>> cdf;
};

struct DurationStats {
  std::vector<DurationGroupStats> groups;  // Overall, BENIGN, ATTACK, vectors
};

DurationStats duration_stats(std::span<const FlowStream> flows,
                             std::span<const std::size_t> prefix_sizes);

}  // namespace gbst
