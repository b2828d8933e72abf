// gbst command line: ingest captures into flow streams, train and evaluate
// gradient-boosted set-tree classifiers, and inspect datasets and models.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "gbst/booster.hpp"
#include "gbst/eval.hpp"
#include "gbst/flow_io.hpp"
#include "gbst/ingest.hpp"
#include "gbst/model_io.hpp"
#include "gbst/pcap.hpp"
#include "gbst/synth.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

gbst::SplitSpec parse_balance_spec(const std::string& text,
                                   std::uint64_t seed) {
  // trainB/trainA,valB/valA,testB/testA
  std::array<std::uint64_t, 6> counts{};
  std::size_t field = 0;
  std::size_t start = 0;
  while (field < 6) {
    const std::size_t sep = text.find_first_of("/,", start);
    const std::string part = text.substr(
        start, sep == std::string::npos ? std::string::npos : sep - start);
    try {
      counts[field] = std::stoull(part);
    } catch (const std::exception&) {
      throw CLI::ValidationError(
          "--balance expects trainB/trainA,valB/valA,testB/testA");
    }
    ++field;
    if (sep == std::string::npos) break;
    start = sep + 1;
  }
  if (field != 6) {
    throw CLI::ValidationError(
        "--balance expects trainB/trainA,valB/valA,testB/testA");
  }
  gbst::SplitSpec spec;
  spec.n_train_benign = counts[0];
  spec.n_train_attack = counts[1];
  spec.n_val_benign = counts[2];
  spec.n_val_attack = counts[3];
  spec.n_test_benign = counts[4];
  spec.n_test_attack = counts[5];
  spec.seed = seed;
  return spec;
}

std::vector<std::size_t> parse_prefix_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string part = text.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    try {
      const long long v = std::stoll(part);
      if (v < 1) throw std::out_of_range("prefix");
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw CLI::ValidationError("--prefix expects positive integers");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string sanitize_group_name(const std::string& group) {
  std::string out = group;
  for (char& c : out) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') {
      c = '_';
    }
  }
  return out;
}

int run_ingest(const std::string& pcap_path, const std::string& labels_path,
               const std::string& out_path) {
  const gbst::CaptureResult capture = gbst::parse_capture(pcap_path);
  const std::vector<gbst::LabelRow> labels = gbst::read_label_csv(labels_path);
  const gbst::ReconstructResult recon =
      gbst::reconstruct_flows(capture.events, labels);
  gbst::write_flows_jsonl(out_path, recon.flows);
  if (capture.truncated) {
    std::cerr << "warning: capture ended inside a packet record\n";
  }
  std::cout << "events: " << capture.events.size()
            << "  skipped_non_ipv4: " << capture.skipped_non_ipv4
            << "  skipped_non_tcp_udp: " << capture.skipped_non_tcp_udp
            << '\n';
  std::cout << "matched: " << recon.matched_packets
            << "  unmatched: " << recon.unmatched_packets
            << "  flows: " << recon.flows.size() << '\n';
  return kExitOk;
}

int run_train(const std::string& flows_path, const gbst::BoostConfig& config,
              const std::optional<std::string>& balance,
              const std::string& out_path,
              const std::optional<std::string>& test_out) {
  const std::vector<gbst::FlowStream> flows =
      gbst::read_flows_jsonl(flows_path);

  std::vector<gbst::FlowStream> train, val;
  if (balance) {
    const gbst::SplitSpec spec = parse_balance_spec(*balance, config.seed);
    gbst::SplitResult split = gbst::balance_split(flows, spec);
    train = std::move(split.train);
    val = std::move(split.val);
    if (test_out) gbst::write_flows_jsonl(*test_out, split.test);
  } else {
    std::size_t benign = 0;
    for (const gbst::FlowStream& f : flows) {
      if (f.label == gbst::Label::kBenign) ++benign;
    }
    if (benign * 2 != flows.size()) {
      std::cerr << "warning: training corpus is unbalanced (" << benign
                << " benign / " << flows.size() - benign
                << " attack), proceeding\n";
    }
    train = flows;
  }

  const gbst::BoostResult result = gbst::fit(train, val, config);
  for (std::size_t round = 0; round < result.val_loss.size(); ++round) {
    std::cout << "round " << round + 1
              << " val_logloss: " << result.val_loss[round] << '\n';
  }
  gbst::save_model(out_path, result.model);
  std::cout << "model written to " << out_path << " (" <<
      result.model.trees.size() << " trees)\n";
  return kExitOk;
}

int run_eval(const std::string& model_path, const std::string& flows_path,
             const gbst::EvaluateOptions& options) {
  const gbst::GbstModel model = gbst::load_model(model_path);
  const std::vector<gbst::FlowStream> flows =
      gbst::read_flows_jsonl(flows_path);
  const gbst::EvalReport report = gbst::evaluate(model, flows, options);
  std::cout << gbst::eval_report_to_json(report) << '\n';
  return kExitOk;
}

int run_stats(const std::string& flows_path, const std::string& prefix_list,
              const std::optional<std::string>& cdf_dir) {
  const std::vector<gbst::FlowStream> flows =
      gbst::read_flows_jsonl(flows_path);
  const std::vector<std::size_t> prefixes = parse_prefix_list(prefix_list);
  const gbst::DurationStats stats = gbst::duration_stats(flows, prefixes);
  std::cout << gbst::duration_stats_to_json(stats) << '\n';
  if (cdf_dir) {
    std::filesystem::create_directories(*cdf_dir);
    for (const gbst::DurationGroupStats& g : stats.groups) {
      for (const auto& [p, points] : g.cdf) {
        const std::string name =
            sanitize_group_name(g.group) + "_" +
            (p == 0 ? "full" : std::to_string(p) + "packet") +
            "_flow_log.csv";
        gbst::write_cdf_csv(std::filesystem::path(*cdf_dir) / name, points);
      }
    }
  }
  return kExitOk;
}

int run_importance(const std::string& model_path) {
  const gbst::GbstModel model = gbst::load_model(model_path);
  const std::map<std::string, double> importance =
      gbst::feature_importance(model);
  nlohmann::json obj(importance);
  std::cout << obj.dump(2) << '\n';
  return kExitOk;
}

int run_predict(const std::string& model_path, const std::string& flows_path,
                double threshold, std::optional<std::size_t> prefix) {
  const gbst::GbstModel model = gbst::load_model(model_path);
  const std::vector<gbst::FlowStream> flows =
      gbst::read_flows_jsonl(flows_path);
  for (std::size_t i = 0; i < flows.size(); ++i) {
    const gbst::FlowStream* f = &flows[i];
    gbst::FlowStream truncated;
    if (prefix) {
      truncated = gbst::truncate(*f, *prefix);
      f = &truncated;
    }
    const double score = gbst::predict_score(model, *f);
    nlohmann::json obj = {
        {"index", i},
        {"score", score},
        {"label", score >= threshold ? "Attack" : "Benign"},
    };
    std::cout << obj.dump() << '\n';
  }
  return kExitOk;
}

int run_synth(const std::string& rule_name, std::size_t n_per_class,
              std::uint64_t seed, double noise, const std::string& out_path) {
  gbst::SynthRule rule;
  rule.kind = gbst::synth_rule_from_string(rule_name);
  rule.noise = noise;
  const std::vector<gbst::FlowStream> flows =
      gbst::generate(rule, n_per_class, seed);
  gbst::write_flows_jsonl(out_path, flows);
  std::cout << "wrote " << flows.size() << " flows to " << out_path << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gradient-boosted set-trees over packet-header streams"};
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand(
      "ingest", "reconstruct labeled flow streams from a pcap capture");
  std::string pcap_path, labels_path, ingest_out;
  ingest->add_option("--pcap", pcap_path, "classic pcap file")->required();
  ingest->add_option("--labels", labels_path, "label table CSV")->required();
  ingest->add_option("--out", ingest_out, "output flow JSONL")->required();

  // train
  auto* train = app.add_subcommand("train", "fit a boosted set-tree model");
  std::string train_flows, train_out;
  std::optional<std::string> balance, test_out;
  gbst::BoostConfig config;
  train->add_option("--flows", train_flows, "training flow JSONL")->required();
  train->add_option("--trees", config.n_trees, "boosting rounds")
      ->capture_default_str();
  train->add_option("--max-depth", config.max_depth, "tree depth limit")
      ->capture_default_str();
  train->add_option("--attention-window", config.attention_window,
                    "ancestor attention sets visible per node")
      ->capture_default_str();
  train->add_option("--lr", config.learning_rate, "shrinkage")
      ->capture_default_str();
  train->add_option("--lambda", config.lambda, "L2 regularization")
      ->capture_default_str();
  train->add_option("--seed", config.seed, "random seed (required)")
      ->required();
  train->add_option("--balance", balance,
                    "balanced split trainB/trainA,valB/valA,testB/testA");
  train->add_option("--test-out", test_out,
                    "write the held-out test partition of --balance here");
  train->add_option("--out", train_out, "output model JSON")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "score labeled flows with a model");
  std::string eval_model, eval_flows;
  std::optional<std::size_t> eval_prefix;
  bool per_vector = false, balanced = false;
  eval->add_option("--model", eval_model, "model JSON")->required();
  eval->add_option("--flows", eval_flows, "flow JSONL")->required();
  eval->add_option("--prefix", eval_prefix,
                   "classify on the first p packets only")
      ->check(CLI::PositiveNumber);
  eval->add_flag("--per-vector", per_vector, "report per attack vector");
  eval->add_flag("--balanced", balanced,
                 "balance each per-vector report against benign flows");

  // stats
  auto* stats = app.add_subcommand(
      "stats", "duration and packet-count distributions");
  std::string stats_flows, stats_prefixes = "2";
  std::optional<std::string> cdf_out;
  stats->add_option("--flows", stats_flows, "flow JSONL")->required();
  stats->add_option("--prefix", stats_prefixes,
                    "comma-separated prefix sizes")
      ->capture_default_str();
  stats->add_option("--cdf-out", cdf_out, "directory for CDF CSV tables");

  // importance
  auto* importance =
      app.add_subcommand("importance", "gain-based feature importance");
  std::string importance_model;
  importance->add_option("--model", importance_model, "model JSON")
      ->required();

  // predict
  auto* predict = app.add_subcommand("predict", "per-flow scores and labels");
  std::string predict_model, predict_flows;
  double threshold = 0.5;
  std::optional<std::size_t> predict_prefix;
  predict->add_option("--model", predict_model, "model JSON")->required();
  predict->add_option("--flows", predict_flows, "flow JSONL")->required();
  predict->add_option("--threshold", threshold, "attack decision threshold")
      ->capture_default_str();
  predict->add_option("--prefix", predict_prefix,
                      "classify on the first p packets only")
      ->check(CLI::PositiveNumber);

  // synth
  auto* synth = app.add_subcommand(
      "synth", "generate labeled synthetic flow streams");
  std::string rule_name = "forward_length_count", synth_out;
  std::size_t n_per_class = 100;
  std::uint64_t synth_seed = 0;
  double noise = 0.0;
  synth->add_option("--rule", rule_name,
                    "forward_length_count or prefix_signature")
      ->capture_default_str();
  synth->add_option("--n", n_per_class, "flows per class")
      ->capture_default_str();
  synth->add_option("--seed", synth_seed, "random seed (required)")
      ->required();
  synth->add_option("--noise", noise, "label flip probability")
      ->capture_default_str();
  synth->add_option("--out", synth_out, "output flow JSONL")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (app.got_subcommand(ingest)) {
      return run_ingest(pcap_path, labels_path, ingest_out);
    }
    if (app.got_subcommand(train)) {
      return run_train(train_flows, config, balance, train_out, test_out);
    }
    if (app.got_subcommand(eval)) {
      gbst::EvaluateOptions options;
      options.prefix = eval_prefix;
      options.per_vector = per_vector;
      options.balance_per_vector = balanced;
      return run_eval(eval_model, eval_flows, options);
    }
    if (app.got_subcommand(stats)) {
      return run_stats(stats_flows, stats_prefixes, cdf_out);
    }
    if (app.got_subcommand(importance)) {
      return run_importance(importance_model);
    }
    if (app.got_subcommand(predict)) {
      return run_predict(predict_model, predict_flows, threshold,
                         predict_prefix);
    }
    if (app.got_subcommand(synth)) {
      return run_synth(rule_name, n_per_class, synth_seed, noise, synth_out);
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
