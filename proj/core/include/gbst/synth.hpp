#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "gbst/flow.hpp"

namespace gbst {

// Ground-truth labeling rules for synthetic flow streams. Both are pure
// functions of a stream.
enum class SynthRuleKind : std::uint8_t {
  // Attack iff at least min_count forward packets have length strictly
  // greater than length_threshold.
  kForwardLengthCount = 0,
  // Attack iff the first packet has SYN set, length below sig_max_length and
  // a gap to the second packet below sig_max_gap seconds. The label is fully
  // determined by the first two packets.
  kPrefixSignature = 1,
};

struct SynthRule {
  SynthRuleKind kind = SynthRuleKind::kForwardLengthCount;
  double length_threshold = 70.0;
  int min_count = 5;
  double sig_max_length = 60.0;
  double sig_max_gap = 1e-3;
  double noise = 0.0;  // probability of a label flip, in [0, 0.5)
};

std::string_view to_string(SynthRuleKind kind);
SynthRuleKind synth_rule_from_string(std::string_view name);  // throws

bool rule_matches(const SynthRule& rule, const FlowStream& flow);

// Emits 2 * n_per_class labeled streams: packet counts, lengths, directions,
// timings and flags are drawn at random and rejection-sampled until exactly
// n_per_class flows satisfy the rule (Attack) and n_per_class do not
// (Benign), so per-feature marginals overlap between the classes and only
// the rule itself separates them. Deterministic per seed. With noise > 0,
// labels flip independently with that probability after assignment (exact
// class balance then only holds at noise = 0).
std::vector<FlowStream> generate(const SynthRule& rule,
                                 std::size_t n_per_class, std::uint64_t seed);

}  // namespace gbst
