#include "gbst/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace gbst {

FlowStream truncate(const FlowStream& flow, std::size_t p) {
  if (p == 0) throw std::invalid_argument("truncate: prefix must be >= 1");
  FlowStream out;
  out.key = flow.key;
  out.start_ts_us = flow.start_ts_us;
  out.label = flow.label;
  out.vector_tag = flow.vector_tag;
  const std::size_t n = std::min(p, flow.packets.size());
  out.packets.assign(flow.packets.begin(),
                     flow.packets.begin() + static_cast<std::ptrdiff_t>(n));
  if (!out.packets.empty()) {
    out.packets.back().iat_after = 0.0;
    out.packets.back().iat_after_dir = 0.0;
  }
  return out;
}

EvalReport compute_metrics(std::span<const Label> predictions,
                           std::span<const Label> labels) {
  if (predictions.size() != labels.size()) {
    throw std::invalid_argument("compute_metrics: length mismatch");
  }
  EvalReport r;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool pred_attack = predictions[i] == Label::kAttack;
    const bool is_attack = labels[i] == Label::kAttack;
    if (pred_attack && is_attack) ++r.tp;
    else if (pred_attack && !is_attack) ++r.fp;
    else if (!pred_attack && !is_attack) ++r.tn;
    else ++r.fn;
  }
  auto ratio = [](double num, double den, double& out, bool& defined) {
    if (den == 0.0) {
      out = 0.0;
      defined = false;
    } else {
      out = num / den;
      defined = true;
    }
  };
  ratio(static_cast<double>(r.tp), static_cast<double>(r.tp + r.fn), r.recall,
        r.recall_defined);
  ratio(static_cast<double>(r.tp), static_cast<double>(r.tp + r.fp),
        r.precision, r.precision_defined);
  ratio(static_cast<double>(r.tp + r.tn),
        static_cast<double>(r.tp + r.tn + r.fp + r.fn), r.accuracy,
        r.accuracy_defined);
  ratio(2.0 * r.recall * r.precision, r.recall + r.precision, r.f1,
        r.f1_defined);
  return r;
}

EvalReport evaluate(const GbstModel& model, std::span<const FlowStream> flows,
                    const EvaluateOptions& options) {
  if (flows.empty()) throw std::invalid_argument("evaluate: no flows");

  std::vector<Label> predictions(flows.size());
  std::vector<Label> labels(flows.size());
  for (std::size_t i = 0; i < flows.size(); ++i) {
    const FlowStream* f = &flows[i];
    FlowStream truncated;
    if (options.prefix) {
      truncated = truncate(*f, *options.prefix);
      f = &truncated;
    }
    predictions[i] = classify(model, *f, options.threshold);
    labels[i] = flows[i].label;
  }

  EvalReport report = compute_metrics(predictions, labels);
  report.prefix = options.prefix;
  if (!options.per_vector) return report;

  std::vector<std::size_t> benign_idx;
  std::map<std::string, std::vector<std::size_t>> vector_idx;
  for (std::size_t i = 0; i < flows.size(); ++i) {
    if (flows[i].label == Label::kBenign) {
      benign_idx.push_back(i);
    } else {
      vector_idx[flows[i].vector_tag].push_back(i);
    }
  }
  for (const auto& [tag, attacks] : vector_idx) {
    std::size_t n_benign = benign_idx.size();
    std::size_t n_attack = attacks.size();
    if (options.balance_per_vector) {
      n_benign = n_attack = std::min(n_benign, n_attack);
    }
    std::vector<Label> sub_pred, sub_label;
    for (std::size_t k = 0; k < n_benign; ++k) {
      sub_pred.push_back(predictions[benign_idx[k]]);
      sub_label.push_back(Label::kBenign);
    }
    for (std::size_t k = 0; k < n_attack; ++k) {
      sub_pred.push_back(predictions[attacks[k]]);
      sub_label.push_back(Label::kAttack);
    }
    EvalReport sub = compute_metrics(sub_pred, sub_label);
    sub.prefix = options.prefix;
    report.per_vector.emplace_back(tag, std::move(sub));
  }
  return report;
}

double time_saving(double prefix_mean_duration, double full_mean_duration) {
  if (full_mean_duration <= 0.0) {
    throw std::invalid_argument("time_saving: full duration must be > 0");
  }
  if (prefix_mean_duration < 0.0) {
    throw std::invalid_argument("time_saving: prefix duration must be >= 0");
  }
  return 100.0 * (1.0 - prefix_mean_duration / full_mean_duration);
}

namespace {

constexpr double kMinLogDuration = 1e-6;  // one microsecond

CdfPoints duration_cdf(std::vector<double> durations) {
  CdfPoints points;
  if (durations.empty()) return points;
  std::sort(durations.begin(), durations.end());
  const double n = static_cast<double>(durations.size());
  for (std::size_t i = 0; i < durations.size(); ++i) {
    // collapse runs of equal durations into one point
    if (i + 1 < durations.size() && durations[i + 1] == durations[i]) continue;
    const double d = std::max(durations[i], kMinLogDuration);
    points.emplace_back(std::log10(d), static_cast<double>(i + 1) / n);
  }
  return points;
}

DurationGroupStats group_stats(const std::string& name,
                               const std::vector<const FlowStream*>& flows,
                               std::span<const std::size_t> prefix_sizes) {
  DurationGroupStats g;
  g.group = name;
  g.n_flows = flows.size();

  std::vector<std::uint64_t> counts;
  counts.reserve(flows.size());
  double packet_sum = 0.0;
  for (const FlowStream* f : flows) {
    counts.push_back(f->packets.size());
    packet_sum += static_cast<double>(f->packets.size());
  }
  std::sort(counts.begin(), counts.end());
  g.mean_packets = packet_sum / static_cast<double>(counts.size());
  g.median_packets = counts.size() % 2 == 1 ? counts[counts.size() / 2]
                                            : counts[counts.size() / 2 - 1];

  std::vector<std::size_t> keys(prefix_sizes.begin(), prefix_sizes.end());
  keys.push_back(0);  // complete flow
  for (std::size_t p : keys) {
    std::vector<double> durations;
    durations.reserve(flows.size());
    double sum = 0.0;
    for (const FlowStream* f : flows) {
      const double d =
          p == 0 ? flow_duration(*f) : flow_duration(*f, p);
      durations.push_back(d);
      sum += d;
    }
    g.mean_duration_ms.emplace_back(p, 1000.0 * sum /
                                           static_cast<double>(flows.size()));
    g.cdf.emplace_back(p, duration_cdf(std::move(durations)));
  }
  return g;
}

}  // namespace

DurationStats duration_stats(std::span<const FlowStream> flows,
                             std::span<const std::size_t> prefix_sizes) {
  if (flows.empty()) throw std::invalid_argument("duration_stats: no flows");
  for (std::size_t p : prefix_sizes) {
    if (p == 0) throw std::invalid_argument("duration_stats: prefix 0");
  }

  std::vector<const FlowStream*> all, benign, attack;
  std::map<std::string, std::vector<const FlowStream*>> vectors;
  for (const FlowStream& f : flows) {
    all.push_back(&f);
    if (f.label == Label::kBenign) {
      benign.push_back(&f);
    } else {
      attack.push_back(&f);
      vectors[f.vector_tag].push_back(&f);
    }
  }

  DurationStats stats;
  stats.groups.push_back(group_stats("Overall", all, prefix_sizes));
  if (!benign.empty()) {
    stats.groups.push_back(group_stats("BENIGN", benign, prefix_sizes));
  }
  if (!attack.empty()) {
    stats.groups.push_back(group_stats("ATTACK", attack, prefix_sizes));
  }
  for (const auto& [tag, group] : vectors) {
    stats.groups.push_back(group_stats(tag, group, prefix_sizes));
  }
  return stats;
}

}  // namespace gbst
