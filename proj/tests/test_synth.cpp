#include <doctest.h>

#include "gbst/eval.hpp"
#include "gbst/flow_io.hpp"
#include "gbst/synth.hpp"
#include "testutil.hpp"

using namespace gbst;

namespace {

// Independent re-implementations of the labeling rules.
bool check_forward_length_count(const FlowStream& f, double threshold,
                                int min_count) {
  int hits = 0;
  for (const PacketRecord& p : f.packets) {
    if (p.is_forward && p.length > threshold) ++hits;
  }
  return hits >= min_count;
}

bool check_prefix_signature(const FlowStream& f, double max_len,
                            double max_gap) {
  const PacketRecord& p0 = f.packets.at(0);
  return p0.is_syn && p0.length < max_len && p0.iat_after < max_gap;
}

}  // namespace

TEST_CASE("generated labels agree with an independent rule checker") {
  SynthRule rule;  // forward_length_count(70, 5)
  const std::vector<FlowStream> flows = generate(rule, 100, 7);
  REQUIRE(flows.size() == 200);

  std::size_t attacks = 0;
  for (const FlowStream& f : flows) {
    const bool expected = check_forward_length_count(f, 70.0, 5);
    CHECK((f.label == Label::kAttack) == expected);
    if (f.label == Label::kAttack) ++attacks;
  }
  CHECK(attacks == 100);  // exact balance by construction
}

TEST_CASE("prefix_signature labels live entirely in the first two packets") {
  SynthRule rule;
  rule.kind = SynthRuleKind::kPrefixSignature;
  const std::vector<FlowStream> flows = generate(rule, 100, 8);

  for (const FlowStream& f : flows) {
    const bool expected = check_prefix_signature(f, 60.0, 1e-3);
    CHECK((f.label == Label::kAttack) == expected);

    // the two-packet prefix preserves every label-determining feature
    const FlowStream prefix = truncate(f, 2);
    CHECK(check_prefix_signature(prefix, 60.0, 1e-3) == expected);
  }
}

TEST_CASE("generated streams satisfy the stream invariants") {
  SynthRule rule;
  const std::vector<FlowStream> flows = generate(rule, 60, 9);
  for (const FlowStream& f : flows) {
    REQUIRE(!f.packets.empty());
    CHECK(f.packets.size() >= 2);
    CHECK(f.packets.size() <= 40);
    for (std::size_t i = 0; i < f.packets.size(); ++i) {
      const PacketRecord& p = f.packets[i];
      CHECK(p.index == i);
      if (i > 0) {
        CHECK(p.timestamp_rel >= f.packets[i - 1].timestamp_rel);
        CHECK(p.iat_before ==
              p.timestamp_rel - f.packets[i - 1].timestamp_rel);
      }
      CHECK(p.src_port_enc <= 1023);
      CHECK(p.dst_port_enc <= 1023);
      CHECK(p.length >= 1);
    }
    CHECK(f.packets[0].timestamp_rel == 0.0);
    CHECK(f.packets[0].iat_before == 0.0);
    CHECK(f.packets.back().iat_after == 0.0);
  }
}

TEST_CASE("generation is byte-identical per seed") {
  SynthRule rule;
  const std::vector<FlowStream> a = generate(rule, 50, 1234);
  const std::vector<FlowStream> b = generate(rule, 50, 1234);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(flow_to_json_line(a[i]) == flow_to_json_line(b[i]));
  }

  const std::vector<FlowStream> c = generate(rule, 50, 1235);
  bool any_differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (flow_to_json_line(a[i]) != flow_to_json_line(c[i])) {
      any_differs = true;
      break;
    }
  }
  CHECK(any_differs);
}

TEST_CASE("noise flips labels at roughly the requested rate") {
  SynthRule rule;
  rule.noise = 0.2;
  const std::vector<FlowStream> flows = generate(rule, 400, 11);
  std::size_t disagreements = 0;
  for (const FlowStream& f : flows) {
    const bool expected = check_forward_length_count(f, 70.0, 5);
    if ((f.label == Label::kAttack) != expected) ++disagreements;
  }
  const double rate =
      static_cast<double>(disagreements) / static_cast<double>(flows.size());
  CHECK(rate > 0.12);
  CHECK(rate < 0.28);
}

TEST_CASE("generate argument validation") {
  SynthRule rule;
  CHECK_THROWS_AS(generate(rule, 0, 1), std::invalid_argument);
  rule.noise = 0.5;
  CHECK_THROWS_AS(generate(rule, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(synth_rule_from_string("bogus"), std::invalid_argument);
  CHECK(synth_rule_from_string("forward_length_count") ==
        SynthRuleKind::kForwardLengthCount);
  CHECK(synth_rule_from_string("prefix_signature") ==
        SynthRuleKind::kPrefixSignature);
}

TEST_CASE("vector tags mark the generating rule") {
  SynthRule rule;
  const std::vector<FlowStream> flows = generate(rule, 20, 13);
  for (const FlowStream& f : flows) {
    if (f.label == Label::kAttack) {
      CHECK(f.vector_tag == "forward_length_count");
    } else {
      CHECK(f.vector_tag == "BENIGN");
    }
  }
}
