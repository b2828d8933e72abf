#include "gbst/synth.hpp"

#include <algorithm>
#include <cmath>

#include "gbst/rng.hpp"

namespace gbst {

std::string_view to_string(SynthRuleKind kind) {
  switch (kind) {
    case SynthRuleKind::kForwardLengthCount: return "forward_length_count";
    case SynthRuleKind::kPrefixSignature: return "prefix_signature";
  }
  return "?";
}

SynthRuleKind synth_rule_from_string(std::string_view name) {
  if (name == "forward_length_count") return SynthRuleKind::kForwardLengthCount;
  if (name == "prefix_signature") return SynthRuleKind::kPrefixSignature;
  throw std::invalid_argument("unknown synthetic rule: " + std::string(name));
}

bool rule_matches(const SynthRule& rule, const FlowStream& flow) {
  switch (rule.kind) {
    case SynthRuleKind::kForwardLengthCount: {
      int count = 0;
      for (const PacketRecord& p : flow.packets) {
        if (p.is_forward &&
            static_cast<double>(p.length) > rule.length_threshold) {
          ++count;
        }
      }
      return count >= rule.min_count;
    }
    case SynthRuleKind::kPrefixSignature: {
      const PacketRecord& first = flow.packets.front();
      return first.is_syn &&
             static_cast<double>(first.length) < rule.sig_max_length &&
             first.iat_after < rule.sig_max_gap;
    }
  }
  return false;
}

namespace {

// Microsecond-quantized gap; heavy-tailed so flow durations span several
// decades like real traffic.
double random_gap_seconds(Rng& rng) {
  const double u = rng.real01();
  const std::int64_t us =
      1 + static_cast<std::int64_t>(std::pow(10.0, 6.0 * u * u) - 1.0);
  return static_cast<double>(us) / 1e6;
}

FlowStream random_flow(const SynthRule& rule, Rng& rng) {
  FlowStream flow;
  flow.key.src_ip = 0x0a000000u | static_cast<std::uint32_t>(rng.below(1 << 16));
  flow.key.dst_ip = 0xc0a80000u | static_cast<std::uint32_t>(rng.below(1 << 16));
  flow.key.src_port = static_cast<std::uint16_t>(1024 + rng.below(60000));
  flow.key.dst_port = static_cast<std::uint16_t>(1 + rng.below(65535));
  flow.key.protocol = 6;
  flow.start_ts_us =
      1'500'000'000'000'000LL + static_cast<std::int64_t>(rng.below(1ull << 40));

  const std::size_t n = static_cast<std::size_t>(rng.range(2, 40));
  flow.packets.resize(n);

  // Flow-level intensity of the signature cell; mixing it uniformly keeps
  // every per-packet marginal overlapping between classes.
  const double q = rng.real01();
  double t = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    PacketRecord& p = flow.packets[i];
    if (i > 0) t += random_gap_seconds(rng);
    p.timestamp_rel = t;
    p.protocol = flow.key.protocol;

    if (rule.kind == SynthRuleKind::kForwardLengthCount) {
      // Packet sizes are bimodal like protocol traffic: short control
      // packets up to 70 bytes, near-MTU payloads from 1200 bytes.
      const std::uint32_t long_len =
          static_cast<std::uint32_t>(1200 + rng.below(301));
      const std::uint32_t short_len =
          static_cast<std::uint32_t>(40 + rng.below(31));
      if (rng.chance(q)) {
        p.is_forward = true;
        p.length = long_len;
      } else {
        switch (rng.below(3)) {
          case 0:  // forward, short
            p.is_forward = true;
            p.length = short_len;
            break;
          case 1:  // backward, long
            p.is_forward = false;
            p.length = long_len;
            break;
          default:  // backward, short
            p.is_forward = false;
            p.length = short_len;
        }
      }
      p.is_syn = i == 0 ? rng.chance(0.5) : rng.chance(0.05);
    } else {
      p.is_forward = rng.chance(0.6);
      p.length = static_cast<std::uint32_t>(40 + rng.below(160));
      p.is_syn = i == 0 ? rng.chance(0.5) : rng.chance(0.05);
      if (i == 1) {
        // Gap between the first two packets: half fast, half slow, so the
        // signature's timing test splits roughly evenly.
        const std::int64_t us =
            rng.chance(0.5) ? static_cast<std::int64_t>(1 + rng.below(999))
                            : static_cast<std::int64_t>(1000 + rng.below(999000));
        p.timestamp_rel = flow.packets[0].timestamp_rel +
                          static_cast<double>(us) / 1e6;
        t = p.timestamp_rel;
      }
    }
    p.is_ack = i == 0 ? false : rng.chance(0.7);
    p.is_rst = rng.chance(0.05);
    p.src_port_enc =
        rng.chance(0.5) ? static_cast<std::uint16_t>(1 + rng.below(1023)) : 0;
    p.dst_port_enc =
        rng.chance(0.5) ? static_cast<std::uint16_t>(1 + rng.below(1023)) : 0;
  }

  compute_stream_features(flow.packets);

  bool seen_dir[2] = {false, false};
  for (PacketRecord& p : flow.packets) {
    const int dir = p.is_forward ? 1 : 0;
    if (!seen_dir[dir]) {
      p.init_win_bytes = static_cast<std::uint32_t>(1024 + rng.below(64512));
      seen_dir[dir] = true;
    }
  }
  return flow;
}

}  // namespace

std::vector<FlowStream> generate(const SynthRule& rule,
                                 std::size_t n_per_class, std::uint64_t seed) {
  if (n_per_class == 0) {
    throw std::invalid_argument("generate: n_per_class must be >= 1");
  }
  if (rule.noise < 0.0 || rule.noise >= 0.5) {
    throw std::invalid_argument("generate: noise must lie in [0, 0.5)");
  }
  Rng master(seed);
  std::vector<FlowStream> out;
  out.reserve(2 * n_per_class);
  std::size_t want_attack = n_per_class;
  std::size_t want_benign = n_per_class;
  while (want_attack + want_benign > 0) {
    // One sub-generator per attempt keeps each flow's draws independent of
    // how many values earlier flows consumed.
    Rng rng(master.next());
    FlowStream flow = random_flow(rule, rng);
    const bool matches = rule_matches(rule, flow);
    std::size_t& want = matches ? want_attack : want_benign;
    if (want == 0) continue;
    --want;
    bool attack = matches;
    if (rule.noise > 0.0 && master.real01() < rule.noise) attack = !attack;
    flow.label = attack ? Label::kAttack : Label::kBenign;
    flow.vector_tag = attack ? std::string(to_string(rule.kind)) : "BENIGN";
    out.push_back(std::move(flow));
  }
  return out;
}

}  // namespace gbst
