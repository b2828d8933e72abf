#include <doctest.h>

#include <algorithm>

#include "gbst/rng.hpp"
#include "gbst/settree.hpp"
#include "gbst/synth.hpp"
#include "testutil.hpp"

using namespace gbst;

TEST_CASE("eval_statistic matches the named operators") {
  const std::vector<double> mean_in = {2.0, 4.0};
  CHECK(eval_statistic(SetOp::kMean, mean_in) == 3.0);

  const std::vector<double> count_in = {7.0, 9.0, 9.0};
  CHECK(eval_statistic(SetOp::kCount, count_in) == 3.0);

  const std::vector<double> harm_in = {1.0, 0.5};
  CHECK(eval_statistic(SetOp::kInvHarmonicMean, harm_in) ==
        doctest::Approx(1.5).epsilon(1e-6));

  const std::vector<double> vals = {3.0, 1.0, 2.0};
  CHECK(eval_statistic(SetOp::kSum, vals) == 6.0);
  CHECK(eval_statistic(SetOp::kMin, vals) == 1.0);
  CHECK(eval_statistic(SetOp::kMax, vals) == 3.0);
  CHECK(eval_statistic(SetOp::kSecondMomentMean, vals) ==
        doctest::Approx(14.0 / 3.0));
  CHECK(eval_statistic(SetOp::kGeometricMean, vals) ==
        doctest::Approx(std::pow(6.0, 1.0 / 3.0)).epsilon(1e-6));

  CHECK_THROWS_AS(eval_statistic(SetOp::kSum, std::vector<double>{}),
                  std::invalid_argument);
}

TEST_CASE("eval_statistic is bit-identical across permutations") {
  std::vector<double> values = {0.1, 0.2, 0.3};
  std::sort(values.begin(), values.end());
  std::vector<std::vector<double>> perms;
  std::vector<double> p = values;
  do {
    perms.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));

  for (SetOp op : kAllSetOps) {
    const double expected = eval_statistic(op, perms.front());
    for (const auto& perm : perms) {
      CHECK(eval_statistic(op, perm) == expected);
    }
  }
}

TEST_CASE("eval_statistic agrees with the brute-force formula to 1e-9") {
  Rng rng(42);
  const std::array<SetOp, 5> finite_ops = {
      SetOp::kCount, SetOp::kSum, SetOp::kMean, SetOp::kInvHarmonicMean,
      SetOp::kSecondMomentMean};
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(30);
    std::vector<double> values(n);
    for (double& v : values) {
      v = rng.chance(0.15) ? 0.0 : rng.real01() * 1500.0;
    }
    for (SetOp op : finite_ops) {
      const double got = eval_statistic(op, values);
      const double want =
          testutil::oracle_statistic_raw(op_alpha(op), op_beta(op), values);
      CHECK(got == doctest::Approx(want).epsilon(1e-9));
    }
  }
}

TEST_CASE("operator alpha/beta table") {
  CHECK(op_alpha(SetOp::kCount) == 0.0);
  CHECK(op_beta(SetOp::kCount) == 0);
  CHECK(op_alpha(SetOp::kSum) == 1.0);
  CHECK(op_beta(SetOp::kSum) == 0);
  CHECK(op_alpha(SetOp::kMean) == 1.0);
  CHECK(op_beta(SetOp::kMean) == 1);
  CHECK(op_alpha(SetOp::kInvHarmonicMean) == -1.0);
  CHECK(op_alpha(SetOp::kSecondMomentMean) == 2.0);
  CHECK(op_alpha(SetOp::kMin) == -std::numeric_limits<double>::infinity());
  CHECK(op_alpha(SetOp::kMax) == std::numeric_limits<double>::infinity());
  for (SetOp op : kAllSetOps) {
    CHECK(set_op_from_string(to_string(op)) == op);
  }
  CHECK(!set_op_from_string("median").has_value());
}

TEST_CASE("eval_split thresholds the statistic") {
  const FlowStream flow = testutil::make_flow({8.0, 4.0, 1.0});
  SplitRule rule{feat::kLength, SetOp::kSum, 10.0, 0, false};
  CHECK(eval_split(rule, flow.packets));  // 13 >= 10
  rule.theta = 13.5;
  CHECK(!eval_split(rule, flow.packets));

  SplitRule zero{feat::kLength, SetOp::kMean, 0.0, 0, false};
  CHECK(eval_split(zero, flow.packets));

  CHECK(!eval_split(rule, std::span<const PacketRecord>{}));
}

TEST_CASE("attention_set follows the membership inequality") {
  const FlowStream flow = testutil::make_flow({8.0, 4.0, 1.0});

  SUBCASE("sum: per-item threshold theta/|F|") {
    const SplitRule rule{feat::kLength, SetOp::kSum, 10.0, 0, false};
    const AttentionSplit split = attention_set(rule, flow.packets);
    CHECK(split.a == std::vector<std::uint32_t>{0, 1});   // 8, 4 >= 10/3
    CHECK(split.a_bar == std::vector<std::uint32_t>{2});  // 1 < 10/3
  }

  SUBCASE("mean with theta 0 attends everything") {
    const SplitRule rule{feat::kLength, SetOp::kMean, 0.0, 0, false};
    const AttentionSplit split = attention_set(rule, flow.packets);
    CHECK(split.a.size() == 3);
    CHECK(split.a_bar.empty());
  }

  SUBCASE("empty input yields two empty sets") {
    const SplitRule rule{feat::kLength, SetOp::kSum, 10.0, 0, false};
    const AttentionSplit split =
        attention_set(rule, std::span<const PacketRecord>{});
    CHECK(split.a.empty());
    CHECK(split.a_bar.empty());
  }

  SUBCASE("limit operators attend items at or above theta") {
    const SplitRule rule{feat::kLength, SetOp::kMax, 5.0, 0, false};
    const AttentionSplit split = attention_set(rule, flow.packets);
    CHECK(split.a == std::vector<std::uint32_t>{0});
    CHECK(split.a_bar == std::vector<std::uint32_t>{1, 2});
  }
}

TEST_CASE("attention partitions the input for random rules") {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(25);
    std::vector<double> lengths(n);
    for (double& v : lengths) v = static_cast<double>(rng.below(1500));
    const FlowStream flow = testutil::make_flow(lengths);
    const SplitRule rule{
        static_cast<int>(rng.below(kFeatureCount)),
        kAllSetOps[rng.below(kNumSetOps)],
        rng.real01() * 100.0,
        0,
        false,
    };
    const AttentionSplit split = attention_set(rule, flow.packets);
    CHECK(split.a.size() + split.a_bar.size() == n);
    std::vector<std::uint32_t> joined = split.a;
    joined.insert(joined.end(), split.a_bar.begin(), split.a_bar.end());
    std::sort(joined.begin(), joined.end());
    for (std::size_t i = 0; i < n; ++i) CHECK(joined[i] == i);
  }
}

TEST_CASE("resolve_input picks the ancestor attention sets") {
  const PacketSet original = {0, 1, 2, 3};
  std::vector<AttentionPair> context;
  context.push_back(AttentionPair{{0}, {1, 2, 3}});  // oldest
  context.push_back(AttentionPair{{1, 2}, {3}});     // most recent

  CHECK(resolve_input(context, original, 0, false) == original);
  CHECK(resolve_input(context, original, 0, true) == original);
  CHECK(resolve_input(context, original, 1, false) == PacketSet{1, 2});
  CHECK(resolve_input(context, original, 1, true) == PacketSet{3});
  CHECK(resolve_input(context, original, 2, false) == PacketSet{0});
  CHECK(resolve_input(context, original, 2, true) == PacketSet{1, 2, 3});
  CHECK_THROWS_AS(resolve_input(context, original, 3, false),
                  std::invalid_argument);
}

namespace {

std::unique_ptr<SetTreeNode> leaf_node(double value) {
  auto node = std::make_unique<SetTreeNode>();
  node->value = value;
  return node;
}

std::unique_ptr<SetTreeNode> split_node(SplitRule rule,
                                        std::unique_ptr<SetTreeNode> on_true,
                                        std::unique_ptr<SetTreeNode> on_false) {
  auto node = std::make_unique<SetTreeNode>();
  node->rule = rule;
  node->on_true = std::move(on_true);
  node->on_false = std::move(on_false);
  return node;
}

// Hand-built chain reproducing "at least 5 forward packets longer than 70
// bytes": A1 = forward packets, A2 = those among A1 longer than 70, then
// count(A2) >= 5. The inner nodes' own branch outcome is irrelevant; both
// children continue the chain, so each subtree is built twice.
std::unique_ptr<SetTreeNode> forward_length_count_tree() {
  auto count_node = [] {
    return split_node(SplitRule{feat::kLength, SetOp::kCount, 5.0, 1, false},
                      leaf_node(1.0), leaf_node(-1.0));
  };
  auto len_node = [&] {
    return split_node(SplitRule{feat::kLength, SetOp::kMean, 70.5, 1, false},
                      count_node(), count_node());
  };
  return split_node(SplitRule{feat::kIsForward, SetOp::kSum, 0.5, 0, false},
                    len_node(), len_node());
}

FlowStream chain_flow(int fwd_long, int fwd_short, int bwd_long, Rng& rng) {
  std::vector<double> ts, lengths;
  std::vector<bool> fwd;
  double t = 0.0;
  auto add = [&](bool forward, double length) {
    ts.push_back(t);
    t += 0.001;
    lengths.push_back(length);
    fwd.push_back(forward);
  };
  for (int i = 0; i < fwd_long; ++i) add(true, 71 + rng.below(100));
  for (int i = 0; i < fwd_short; ++i) add(true, 40 + rng.below(31));
  for (int i = 0; i < bwd_long; ++i) add(false, 71 + rng.below(100));
  return testutil::make_flow(ts, lengths, fwd);
}

}  // namespace

TEST_CASE("attention chain expresses the forward-long-count predicate") {
  const auto tree = forward_length_count_tree();
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const int fwd_long = static_cast<int>(rng.below(9));
    const int fwd_short = static_cast<int>(rng.below(5));
    const int bwd_long = static_cast<int>(rng.below(5));
    if (fwd_long + fwd_short + bwd_long == 0) continue;
    const FlowStream flow = chain_flow(fwd_long, fwd_short, bwd_long, rng);
    const double out = predict_tree(*tree, flow);
    CHECK(out == (fwd_long >= 5 ? 1.0 : -1.0));
  }
}

TEST_CASE("predict_tree on a single leaf") {
  SetTreeNode leaf;
  leaf.value = 0.75;
  const FlowStream flow = testutil::make_flow({100.0});
  CHECK(predict_tree(leaf, flow) == 0.75);
  CHECK_THROWS_AS(predict_tree(leaf, FlowStream{}), std::invalid_argument);
}

namespace {

std::vector<FlowStream> sum_length_instance() {
  // Two classes separable only by sum(length): every other statistic
  // overlaps across classes.
  std::vector<FlowStream> flows;
  flows.push_back(testutil::make_flow({30, 30, 30}, Label::kBenign));
  flows.push_back(testutil::make_flow({20, 25, 30, 20}, Label::kBenign));
  flows.push_back(testutil::make_flow({50, 10, 15}, Label::kBenign));
  flows.push_back(testutil::make_flow({19, 19, 19, 19, 19}, Label::kBenign));
  flows.push_back(testutil::make_flow({35, 30, 25}, Label::kBenign));
  flows.push_back(
      testutil::make_flow({30, 30, 30, 30, 30, 30, 30}, Label::kAttack));
  flows.push_back(testutil::make_flow({80, 80, 80}, Label::kAttack));
  flows.push_back(testutil::make_flow({120, 90}, Label::kAttack));
  flows.push_back(testutil::make_flow({55, 55, 55, 55}, Label::kAttack));
  flows.push_back(testutil::make_flow({45, 45, 45, 45, 45}, Label::kAttack));
  return flows;
}

std::vector<TrainSample> to_samples(const std::vector<FlowStream>& flows) {
  std::vector<TrainSample> samples;
  for (const FlowStream& f : flows) {
    const double y = f.label == Label::kAttack ? 1.0 : 0.0;
    samples.push_back(TrainSample{&f, 0.5 - y, 0.25});
  }
  return samples;
}

}  // namespace

TEST_CASE("fit_tree recovers a sum-length split at depth 1") {
  const std::vector<FlowStream> flows = sum_length_instance();
  const std::vector<TrainSample> samples = to_samples(flows);

  TreeConfig config;
  config.max_depth = 1;
  const auto tree = fit_tree(samples, config);

  REQUIRE(!tree->is_leaf());
  CHECK(tree->rule.op == SetOp::kSum);
  CHECK(tree->rule.feature == feat::kLength);
  CHECK(tree->rule.attention_ref == 0);
  CHECK(tree->rule.theta > 95.0);
  CHECK(tree->rule.theta < 210.0);

  // confirmed against the exhaustive oracle
  const testutil::OracleSplit oracle =
      testutil::oracle_root_split(samples, config.lambda);
  REQUIRE(oracle.found);
  CHECK(tree->gain == oracle.gain);

  for (const FlowStream& f : flows) {
    const double out = predict_tree(*tree, f);
    if (f.label == Label::kAttack) {
      CHECK(out > 0.0);
    } else {
      CHECK(out < 0.0);
    }
  }
}

TEST_CASE("fit_tree split search equals the exhaustive oracle") {
  Rng rng(314159);
  int checked = 0;
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n_flows = 4 + rng.below(5);  // up to 8
    std::vector<FlowStream> flows;
    for (std::size_t i = 0; i < n_flows; ++i) {
      const std::size_t n = 1 + rng.below(6);
      std::vector<double> ts(n), lengths(n);
      std::vector<bool> fwd(n);
      double t = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        ts[k] = t;
        t += rng.real01();
        lengths[k] = static_cast<double>(1 + rng.below(100));
        fwd[k] = rng.chance(0.5);
      }
      flows.push_back(testutil::make_flow(ts, lengths, fwd));
    }
    std::vector<TrainSample> samples;
    for (const FlowStream& f : flows) {
      samples.push_back(
          TrainSample{&f, 2.0 * rng.real01() - 1.0, 0.05 + rng.real01()});
    }

    TreeConfig config;
    config.max_depth = 3;
    const auto tree = fit_tree(samples, config);
    const testutil::OracleSplit oracle =
        testutil::oracle_root_split(samples, config.lambda);

    if (!oracle.found || oracle.gain <= 0.0) {
      CHECK(tree->is_leaf());
      continue;
    }
    REQUIRE(!tree->is_leaf());
    CHECK(tree->gain == oracle.gain);  // exact, not approximate
    ++checked;
  }
  CHECK(checked >= 20);
}

TEST_CASE("fit_tree degenerate configurations") {
  const std::vector<FlowStream> flows = sum_length_instance();

  SUBCASE("zero gradients collapse to a zero leaf") {
    std::vector<TrainSample> samples;
    for (const FlowStream& f : flows) {
      samples.push_back(TrainSample{&f, 0.0, 0.25});
    }
    const auto tree = fit_tree(samples, TreeConfig{});
    CHECK(tree->is_leaf());
    CHECK(tree->value == 0.0);
  }

  SUBCASE("max_depth 0 yields a single leaf") {
    const std::vector<TrainSample> samples = to_samples(flows);
    TreeConfig config;
    config.max_depth = 0;
    const auto tree = fit_tree(samples, config);
    CHECK(tree->is_leaf());
  }

  SUBCASE("empty sample set is an error") {
    CHECK_THROWS_AS(fit_tree({}, TreeConfig{}), std::invalid_argument);
  }

  SUBCASE("empty flow is an error") {
    FlowStream empty;
    std::vector<TrainSample> samples = {TrainSample{&empty, 1.0, 1.0}};
    CHECK_THROWS_AS(fit_tree(samples, TreeConfig{}), std::invalid_argument);
  }
}

TEST_CASE("candidate accounting matches 2 * n_ops * (h + 1)") {
  const std::vector<FlowStream> flows = sum_length_instance();
  const std::vector<TrainSample> samples = to_samples(flows);

  SUBCASE("root-only search") {
    TreeConfig config;
    config.max_depth = 1;
    FitStats stats;
    fit_tree(samples, config, &stats);
    REQUIRE(stats.searches.size() == 1);
    CHECK(stats.searches[0] == std::pair<int, int>{0, 0});
    CHECK(stats.candidate_pairs == 2 * kNumSetOps);
  }

  SUBCASE("deeper searches see one ancestor per level up to the window") {
    TreeConfig config;
    config.max_depth = 8;
    config.attention_window = 3;
    FitStats stats;
    fit_tree(samples, config, &stats);
    std::uint64_t expected = 0;
    for (const auto& [depth, h] : stats.searches) {
      CHECK(h == std::min(depth, config.attention_window));
      expected += 2ull * kNumSetOps * static_cast<std::uint64_t>(h + 1);
    }
    CHECK(stats.candidate_pairs == expected);
  }
}

TEST_CASE("attention window caps the visible ancestors on deep paths") {
  SynthRule rule;
  const std::vector<FlowStream> flows = generate(rule, 60, 31);
  std::vector<TrainSample> samples;
  for (const FlowStream& f : flows) {
    const double y = f.label == Label::kAttack ? 1.0 : 0.0;
    samples.push_back(TrainSample{&f, 0.5 - y, 0.25});
  }
  TreeConfig config;
  config.max_depth = 10;
  config.attention_window = 2;
  FitStats stats;
  fit_tree(samples, config, &stats);

  int deepest = 0;
  std::uint64_t expected = 0;
  for (const auto& [depth, h] : stats.searches) {
    CHECK(h == std::min(depth, config.attention_window));
    expected += 2ull * kNumSetOps * static_cast<std::uint64_t>(h + 1);
    deepest = std::max(deepest, depth);
  }
  CHECK(stats.candidate_pairs == expected);
  // this corpus drives the search beyond the window (deterministic per seed)
  REQUIRE(deepest > config.attention_window);
}

TEST_CASE("predict_tree is permutation invariant bit-for-bit") {
  // A tree exercising attention chains and several operators.
  const std::vector<FlowStream> flows = sum_length_instance();
  std::vector<TrainSample> samples = to_samples(flows);
  TreeConfig config;
  config.max_depth = 4;
  const auto tree = fit_tree(samples, config);

  Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.below(30);
    std::vector<double> ts(n), lengths(n);
    std::vector<bool> fwd(n);
    double t = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      ts[k] = t;
      t += rng.real01();
      lengths[k] = static_cast<double>(1 + rng.below(300));
      fwd[k] = rng.chance(0.5);
    }
    FlowStream flow = testutil::make_flow(ts, lengths, fwd);
    const double expected = predict_tree(*tree, flow);
    for (int shuffle = 0; shuffle < 5; ++shuffle) {
      deterministic_shuffle(flow.packets, rng);
      CHECK(predict_tree(*tree, flow) == expected);
    }
  }
}
