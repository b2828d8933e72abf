#include "gbst/settree.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

namespace gbst {

std::string_view to_string(SetOp op) {
  switch (op) {
    case SetOp::kCount: return "count";
    case SetOp::kSum: return "sum";
    case SetOp::kMean: return "mean";
    case SetOp::kInvHarmonicMean: return "inv_harmonic_mean";
    case SetOp::kSecondMomentMean: return "second_moment_mean";
    case SetOp::kGeometricMean: return "geometric_mean";
    case SetOp::kMin: return "min";
    case SetOp::kMax: return "max";
  }
  return "?";
}

std::optional<SetOp> set_op_from_string(std::string_view name) {
  for (SetOp op : kAllSetOps) {
    if (to_string(op) == name) return op;
  }
  return std::nullopt;
}

double op_alpha(SetOp op) {
  switch (op) {
    case SetOp::kCount: return 0.0;
    case SetOp::kSum: return 1.0;
    case SetOp::kMean: return 1.0;
    case SetOp::kInvHarmonicMean: return -1.0;
    case SetOp::kSecondMomentMean: return 2.0;
    case SetOp::kGeometricMean: return 0.0;  // limit, computed in log domain
    case SetOp::kMin: return -std::numeric_limits<double>::infinity();
    case SetOp::kMax: return std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

int op_beta(SetOp op) {
  switch (op) {
    case SetOp::kCount:
    case SetOp::kSum:
      return 0;
    default:
      return 1;
  }
}

namespace {

// Running sums over one feature column, accumulated in ascending value
// order. Every statistic derives from these, so fit, predict and the public
// eval_statistic agree bit-for-bit.
struct StatAccum {
  std::size_t n = 0;
  double sum = 0.0;
  double sum_sq = 0.0;
  double sum_inv = 0.0;
  double sum_log = 0.0;
  double vmin = 0.0;
  double vmax = 0.0;
};

StatAccum accumulate_sorted(std::span<const double> sorted) {
  StatAccum acc;
  acc.n = sorted.size();
  for (double v : sorted) {
    acc.sum += v;
    acc.sum_sq += v * v;
    acc.sum_inv += 1.0 / (v + kStatEpsilon);
    acc.sum_log += std::log(v + kStatEpsilon);
  }
  if (acc.n > 0) {
    acc.vmin = sorted.front();
    acc.vmax = sorted.back();
  }
  return acc;
}

double stat_from_accum(SetOp op, const StatAccum& acc) {
  const double n = static_cast<double>(acc.n);
  switch (op) {
    case SetOp::kCount: return n;
    case SetOp::kSum: return acc.sum;
    case SetOp::kMean: return acc.sum / n;
    case SetOp::kInvHarmonicMean: return acc.sum_inv / n;
    case SetOp::kSecondMomentMean: return acc.sum_sq / n;
    case SetOp::kGeometricMean: return std::exp(acc.sum_log / n);
    case SetOp::kMin: return acc.vmin;
    case SetOp::kMax: return acc.vmax;
  }
  return 0.0;
}

// Membership test of the attention set: (p_j)^alpha >= theta / |F|^(1-beta)
// for the finite-alpha operators, p_j >= theta for the limit operators.
bool attention_member(SetOp op, double theta, std::size_t set_size, double v) {
  const double n = static_cast<double>(set_size);
  switch (op) {
    case SetOp::kCount: return 1.0 >= theta / n;
    case SetOp::kSum: return v >= theta / n;
    case SetOp::kMean: return v >= theta;
    case SetOp::kInvHarmonicMean: return 1.0 / (v + kStatEpsilon) >= theta;
    case SetOp::kSecondMomentMean: return v * v >= theta;
    case SetOp::kGeometricMean:
    case SetOp::kMin:
    case SetOp::kMax:
      return v >= theta;
  }
  return false;
}

}  // namespace

double eval_statistic(SetOp op, std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("eval_statistic: empty set");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return stat_from_accum(op, accumulate_sorted(sorted));
}

bool eval_split(const SplitRule& rule, std::span<const PacketRecord> packets) {
  if (packets.empty()) return false;
  std::vector<double> column;
  column.reserve(packets.size());
  for (const PacketRecord& p : packets) {
    column.push_back(p.feature(static_cast<std::size_t>(rule.feature)));
  }
  std::sort(column.begin(), column.end());
  return stat_from_accum(rule.op, accumulate_sorted(column)) >= rule.theta;
}

AttentionSplit attention_set(const SplitRule& rule,
                             std::span<const PacketRecord> packets) {
  AttentionSplit out;
  const std::size_t n = packets.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double v =
        packets[i].feature(static_cast<std::size_t>(rule.feature));
    if (attention_member(rule.op, rule.theta, n, v)) {
      out.a.push_back(static_cast<std::uint32_t>(i));
    } else {
      out.a_bar.push_back(static_cast<std::uint32_t>(i));
    }
  }
  return out;
}

const PacketSet& resolve_input(std::span<const AttentionPair> path_context,
                               const PacketSet& original, int ref,
                               bool complement) {
  if (ref == 0) return original;
  if (ref < 0 || static_cast<std::size_t>(ref) > path_context.size()) {
    throw std::invalid_argument("attention_ref outside the path context");
  }
  const AttentionPair& pair = path_context[path_context.size() - ref];
  return complement ? pair.a_bar : pair.a;
}

namespace {

// Below this many samples the threshold scan sums each side directly in
// ascending sample order; the result is then independent of the scan
// bookkeeping and matches a naive re-evaluation exactly. Larger nodes use a
// sorted sweep with prefix sums.
constexpr std::size_t kExactScanMaxSamples = 64;

double split_gain(double gl, double hl, double gr, double hr, double lambda) {
  const double gt = gl + gr;
  const double ht = hl + hr;
  return gl * gl / (hl + lambda) + gr * gr / (hr + lambda) -
         gt * gt / (ht + lambda);
}

struct SampleState {
  std::uint32_t sample = 0;  // index into the TrainSample span
  std::vector<AttentionPair> path;  // most recent last, capped at the window
};

struct BestSplit {
  bool valid = false;
  double gain = 0.0;
  SplitRule rule{};
};

void gather_column(const FlowStream& flow, const PacketSet& set, int feature,
                   std::vector<double>& out) {
  out.clear();
  out.reserve(set.size());
  for (std::uint32_t idx : set) {
    out.push_back(flow.packets[idx].feature(static_cast<std::size_t>(feature)));
  }
}

class TreeBuilder {
 public:
  TreeBuilder(std::span<const TrainSample> samples, const TreeConfig& config,
              FitStats* stats)
      : samples_(samples), config_(config), stats_(stats) {
    originals_.resize(samples.size());
    for (std::size_t s = 0; s < samples.size(); ++s) {
      const std::size_t n = samples[s].flow->packets.size();
      originals_[s].resize(n);
      std::iota(originals_[s].begin(), originals_[s].end(), 0u);
    }
  }

  std::unique_ptr<SetTreeNode> build() {
    std::vector<SampleState> states(samples_.size());
    for (std::size_t s = 0; s < samples_.size(); ++s) {
      states[s].sample = static_cast<std::uint32_t>(s);
    }
    return build_node(std::move(states), 0);
  }

 private:
  std::unique_ptr<SetTreeNode> build_node(std::vector<SampleState> states,
                                          int depth) {
    double g_total = 0.0, h_total = 0.0;
    for (const SampleState& st : states) {
      g_total += samples_[st.sample].grad;
      h_total += samples_[st.sample].hess;
    }
    auto make_leaf = [&] {
      auto leaf = std::make_unique<SetTreeNode>();
      leaf->value = -g_total / (h_total + config_.lambda);
      return leaf;
    };

    const std::size_t n = states.size();
    const std::size_t min_leaf =
        static_cast<std::size_t>(std::max(config_.min_samples_leaf, 1));
    if (depth >= config_.max_depth || n < 2 * min_leaf) return make_leaf();

    BestSplit best = search_split(states, depth);
    if (!best.valid || best.gain <= 0.0) return make_leaf();

    // Route samples and extend each path context with the chosen rule's
    // attention pair; every node on the path contributes one, branch taken
    // or not.
    std::vector<SampleState> true_side, false_side;
    std::vector<double> column;
    for (SampleState& st : states) {
      const PacketSet& input =
          resolve_input(st.path, originals_[st.sample], best.rule.attention_ref,
                        best.rule.use_complement);
      const FlowStream& flow = *samples_[st.sample].flow;
      gather_column(flow, input, best.rule.feature, column);

      bool branch = false;
      if (!column.empty()) {
        std::vector<double> sorted = column;
        std::sort(sorted.begin(), sorted.end());
        branch = stat_from_accum(best.rule.op, accumulate_sorted(sorted)) >=
                 best.rule.theta;
      }

      AttentionPair pair;
      for (std::size_t k = 0; k < input.size(); ++k) {
        if (attention_member(best.rule.op, best.rule.theta, input.size(),
                             column[k])) {
          pair.a.push_back(input[k]);
        } else {
          pair.a_bar.push_back(input[k]);
        }
      }
      if (st.path.size() ==
          static_cast<std::size_t>(config_.attention_window)) {
        st.path.erase(st.path.begin());
      }
      st.path.push_back(std::move(pair));
      (branch ? true_side : false_side).push_back(std::move(st));
    }
    states.clear();
    states.shrink_to_fit();

    auto node = std::make_unique<SetTreeNode>();
    node->rule = best.rule;
    node->gain = best.gain;
    node->on_true = build_node(std::move(true_side), depth + 1);
    node->on_false = build_node(std::move(false_side), depth + 1);
    return node;
  }

  BestSplit search_split(const std::vector<SampleState>& states, int depth) {
    const std::size_t n = states.size();
    const int h_avail = static_cast<int>(states.front().path.size());
    if (stats_ != nullptr) {
      stats_->searches.emplace_back(depth, h_avail);
      stats_->candidate_pairs +=
          2ull * kNumSetOps * static_cast<std::uint64_t>(h_avail + 1);
    }

    std::vector<double> g(n), h(n);
    double g_all = 0.0, h_all = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = samples_[states[i].sample].grad;
      h[i] = samples_[states[i].sample].hess;
      g_all += g[i];
      h_all += h[i];
    }

    BestSplit best;
    std::vector<double> column, sorted;
    std::vector<std::array<double, kNumSetOps>> stat(n);
    std::vector<char> empty(n);

    for (int ref = 0; ref <= h_avail; ++ref) {
      for (int comp = 0; comp < 2; ++comp) {
        for (int feature = 0; feature < static_cast<int>(kFeatureCount);
             ++feature) {
          for (std::size_t i = 0; i < n; ++i) {
            const SampleState& st = states[i];
            const PacketSet& input = resolve_input(
                st.path, originals_[st.sample], ref, comp != 0);
            gather_column(*samples_[st.sample].flow, input, feature, column);
            empty[i] = column.empty() ? 1 : 0;
            if (empty[i]) continue;
            sorted = column;
            std::sort(sorted.begin(), sorted.end());
            const StatAccum acc = accumulate_sorted(sorted);
            for (std::size_t o = 0; o < kNumSetOps; ++o) {
              stat[i][o] = stat_from_accum(kAllSetOps[o], acc);
            }
          }
          for (std::size_t o = 0; o < kNumSetOps; ++o) {
            scan_thresholds(stat, empty, o, g, h, g_all, h_all, ref,
                            comp != 0, feature, best);
          }
        }
      }
    }
    return best;
  }

  // Scans the candidate thresholds for one (input, feature, operator)
  // triple, updating `best`. Candidates are visited in ascending theta and
  // replace the incumbent only on strictly larger gain, which together with
  // the caller's loop order realizes the lexicographic tie-break.
  void scan_thresholds(const std::vector<std::array<double, kNumSetOps>>& stat,
                       const std::vector<char>& empty, std::size_t op_idx,
                       const std::vector<double>& g,
                       const std::vector<double>& h, double g_all,
                       double h_all, int ref, bool comp, int feature,
                       BestSplit& best) {
    const std::size_t n = stat.size();
    const std::size_t min_leaf =
        static_cast<std::size_t>(std::max(config_.min_samples_leaf, 1));
    const SetOp op = kAllSetOps[op_idx];

    auto consider = [&](double theta, double gl, double hl, double gr,
                        double hr, std::size_t nl, std::size_t nr) {
      if (nl < min_leaf || nr < min_leaf) return;
      const double gain = split_gain(gl, hl, gr, hr, config_.lambda);
      if (gain > best.gain) {
        best.valid = true;
        best.gain = gain;
        best.rule = SplitRule{feature, op, theta, ref, comp};
      }
    };

    if (n <= kExactScanMaxSamples) {
      // Direct scan: per threshold, both sides are summed in ascending
      // sample order.
      std::vector<double> uniq;
      for (std::size_t i = 0; i < n; ++i) {
        if (!empty[i]) uniq.push_back(stat[i][op_idx]);
      }
      std::sort(uniq.begin(), uniq.end());
      uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
      for (std::size_t k = 0; k + 1 < uniq.size(); ++k) {
        const double theta = (uniq[k] + uniq[k + 1]) / 2.0;
        double gl = 0.0, hl = 0.0, gr = 0.0, hr = 0.0;
        std::size_t nl = 0, nr = 0;
        for (std::size_t i = 0; i < n; ++i) {
          if (!empty[i] && stat[i][op_idx] >= theta) {
            gl += g[i];
            hl += h[i];
            ++nl;
          } else {
            gr += g[i];
            hr += h[i];
            ++nr;
          }
        }
        consider(theta, gl, hl, gr, hr, nl, nr);
      }
      return;
    }

    // Sweep: samples with a defined statistic sorted ascending, prefix sums
    // give the false side below each boundary; empty-input samples always
    // route false.
    std::vector<std::pair<double, std::uint32_t>> ordered;
    ordered.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (!empty[i]) {
        ordered.emplace_back(stat[i][op_idx], static_cast<std::uint32_t>(i));
      }
    }
    if (ordered.size() < 2) return;
    std::sort(ordered.begin(), ordered.end());

    const std::size_t m = ordered.size();
    std::vector<double> pg(m + 1, 0.0), ph(m + 1, 0.0);
    double g_ne = 0.0, h_ne = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      pg[k + 1] = pg[k] + g[ordered[k].second];
      ph[k + 1] = ph[k] + h[ordered[k].second];
    }
    g_ne = pg[m];
    h_ne = ph[m];

    std::vector<std::size_t> boundaries;
    for (std::size_t k = 1; k < m; ++k) {
      if (ordered[k].first != ordered[k - 1].first) boundaries.push_back(k);
    }
    const std::size_t uniq_count = boundaries.size() + 1;
    std::vector<std::size_t> chosen;
    if (uniq_count <= static_cast<std::size_t>(config_.max_exact_thresholds)) {
      chosen = std::move(boundaries);
    } else {
      const std::size_t q = static_cast<std::size_t>(config_.quantile_cuts);
      chosen.reserve(q);
      for (std::size_t c = 1; c <= q; ++c) {
        std::size_t pos = c * boundaries.size() / (q + 1);
        if (pos >= boundaries.size()) pos = boundaries.size() - 1;
        if (chosen.empty() || boundaries[pos] != chosen.back()) {
          chosen.push_back(boundaries[pos]);
        }
      }
    }

    for (std::size_t k : chosen) {
      const double theta =
          (ordered[k - 1].first + ordered[k].first) / 2.0;
      const double gl = g_ne - pg[k];
      const double hl = h_ne - ph[k];
      const double gr = g_all - gl;
      const double hr = h_all - hl;
      const std::size_t nl = m - k;
      consider(theta, gl, hl, gr, hr, nl, n - nl);
    }
  }

  std::span<const TrainSample> samples_;
  TreeConfig config_;
  FitStats* stats_;
  std::vector<PacketSet> originals_;
};

}  // namespace

std::unique_ptr<SetTreeNode> fit_tree(std::span<const TrainSample> samples,
                                      const TreeConfig& config,
                                      FitStats* stats) {
  if (samples.empty()) throw std::invalid_argument("fit_tree: no samples");
  for (const TrainSample& s : samples) {
    if (s.flow == nullptr || s.flow->packets.empty()) {
      throw std::invalid_argument("fit_tree: empty flow");
    }
  }
  return TreeBuilder(samples, config, stats).build();
}

double predict_tree(const SetTreeNode& tree, const FlowStream& flow) {
  if (flow.packets.empty()) throw std::invalid_argument("empty flow");
  PacketSet original(flow.packets.size());
  std::iota(original.begin(), original.end(), 0u);

  std::vector<AttentionPair> context;
  std::vector<double> column, sorted;
  const SetTreeNode* node = &tree;
  while (!node->is_leaf()) {
    const SplitRule& rule = node->rule;
    const PacketSet& input = resolve_input(context, original,
                                           rule.attention_ref,
                                           rule.use_complement);
    gather_column(flow, input, rule.feature, column);

    bool branch = false;
    if (!column.empty()) {
      sorted = column;
      std::sort(sorted.begin(), sorted.end());
      branch =
          stat_from_accum(rule.op, accumulate_sorted(sorted)) >= rule.theta;
    }

    AttentionPair pair;
    for (std::size_t k = 0; k < input.size(); ++k) {
      if (attention_member(rule.op, rule.theta, input.size(), column[k])) {
        pair.a.push_back(input[k]);
      } else {
        pair.a_bar.push_back(input[k]);
      }
    }
    context.push_back(std::move(pair));
    node = branch ? node->on_true.get() : node->on_false.get();
  }
  return node->value;
}

}  // namespace gbst
