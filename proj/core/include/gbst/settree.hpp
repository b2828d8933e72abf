#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "gbst/flow.hpp"

namespace gbst {

// Statistic family of the set-compatible split criterion
// |F|^(-beta) * sum_{p in F} (p_j)^alpha, plus its limit operators.
// (alpha, beta) per operator:
//   count (0,0), sum (1,0), mean (1,1), inv_harmonic_mean (-1,1),
//   second_moment_mean (2,1), geometric_mean (alpha->0, 1, log domain),
//   min (alpha->-inf), max (alpha->+inf), both evaluated directly.
enum class SetOp : std::uint8_t {
  kCount = 0,
  kSum,
  kMean,
  kInvHarmonicMean,
  kSecondMomentMean,
  kGeometricMean,
  kMin,
  kMax,
};

inline constexpr std::size_t kNumSetOps = 8;
inline constexpr std::array<SetOp, kNumSetOps> kAllSetOps = {
    SetOp::kCount,          SetOp::kSum,           SetOp::kMean,
    SetOp::kInvHarmonicMean, SetOp::kSecondMomentMean, SetOp::kGeometricMean,
    SetOp::kMin,            SetOp::kMax};

// Additive shift applied before reciprocals and logarithms; several packet
// features (IATs, encoded ports) are legitimately zero.
inline constexpr double kStatEpsilon = 1e-9;

std::string_view to_string(SetOp op);
std::optional<SetOp> set_op_from_string(std::string_view name);
double op_alpha(SetOp op);  // +-infinity for max/min, 0 for geometric_mean
int op_beta(SetOp op);

// The statistic of one feature column. Accumulation runs over the values
// sorted ascending, so the result is bit-identical for every permutation of
// the input. values must be non-empty and non-negative.
double eval_statistic(SetOp op, std::span<const double> values);

// A set-compatible decision rule. attention_ref selects the node input:
// 0 is the stream itself, h in [1, window] the h-th most recent ancestor's
// attention set on the decision path (its complement if use_complement).
struct SplitRule {
  int feature = 0;
  SetOp op = SetOp::kCount;
  double theta = 0.0;
  int attention_ref = 0;
  bool use_complement = false;

  bool operator==(const SplitRule&) const = default;
};

// True iff the rule's statistic over the input's feature column is >= theta.
// The empty set evaluates false, deterministically.
bool eval_split(const SplitRule& rule, std::span<const PacketRecord> packets);

// Positions (into the evaluated input sequence) of the attention set A and
// its complement. For finite alpha the membership test is
// (p_j)^alpha >= theta / |F|^(1-beta); for min/max/geometric_mean, where the
// generic inequality degenerates, membership is p_j >= theta. A and A_bar
// partition the input and preserve its order.
struct AttentionSplit {
  std::vector<std::uint32_t> a;
  std::vector<std::uint32_t> a_bar;
};
AttentionSplit attention_set(const SplitRule& rule,
                             std::span<const PacketRecord> packets);

// Subset of a flow's packets, as indices into FlowStream::packets.
using PacketSet = std::vector<std::uint32_t>;

struct AttentionPair {
  PacketSet a;
  PacketSet a_bar;
};

// Selects a rule input: ref 0 returns `original`, ref h > 0 the h-th most
// recent entry of `path_context` (A, or A_bar when complement is set).
// The complement flag is meaningless for ref 0 and ignored there.
// ref beyond the context is an error.
const PacketSet& resolve_input(std::span<const AttentionPair> path_context,
                               const PacketSet& original, int ref,
                               bool complement);

struct SetTreeNode {
  double value = 0.0;  // leaf output
  SplitRule rule{};    // meaningful for decision nodes
  double gain = 0.0;   // realized split gain (decision nodes)
  std::unique_ptr<SetTreeNode> on_true;
  std::unique_ptr<SetTreeNode> on_false;

  bool is_leaf() const { return on_true == nullptr; }
};

struct TreeConfig {
  int max_depth = 10;
  int attention_window = 5;
  double lambda = 1.0;       // L2 regularization of the gain and leaf values
  int min_samples_leaf = 1;
  // Threshold candidates per (input, feature, operator): exact midpoints of
  // sorted unique statistics up to this many unique values, equi-quantile
  // cuts beyond it.
  int max_exact_thresholds = 1024;
  int quantile_cuts = 256;
};

struct TrainSample {
  const FlowStream* flow = nullptr;
  double grad = 0.0;
  double hess = 0.0;
};

// Instrumentation of one fit_tree call. candidate_pairs counts the
// (input, operator) slots enumerated by the split searches; at a node with h
// usable ancestors that is 2 * kNumSetOps * (h + 1): each of the h ancestors
// and the stream itself contributes a set slot and a complement slot (the
// stream's complement slot resolves back to the stream).
struct FitStats {
  std::uint64_t candidate_pairs = 0;
  std::vector<std::pair<int, int>> searches;  // (depth, h available)
};

// Greedy recursive construction by exhaustive search over candidate inputs,
// features, operators and thresholds. Split score is the second-order gain
//   G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda) - (G_L+G_R)^2/(H_L+H_R+lambda),
// leaves output -G/(H+lambda). Recursion stops at the depth limit, when no
// candidate has positive gain, or when a child would fall below
// min_samples_leaf. Ties break toward the lexicographically lowest
// (attention_ref, use_complement, feature, operator, theta).
std::unique_ptr<SetTreeNode> fit_tree(std::span<const TrainSample> samples,
                                      const TreeConfig& config,
                                      FitStats* stats = nullptr);

// Routes the flow from the root, resolving each rule's input against the
// path's attention context. Output is invariant under any permutation of the
// flow's packets.
double predict_tree(const SetTreeNode& tree, const FlowStream& flow);

}  // namespace gbst
