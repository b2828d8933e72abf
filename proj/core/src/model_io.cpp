#include "gbst/model_io.hpp"

#include <fstream>

#include <json.hpp>

namespace gbst {

using nlohmann::json;

namespace {

json node_to_json(const SetTreeNode& node) {
  if (node.is_leaf()) {
    return json{{"kind", "leaf"}, {"value", node.value}};
  }
  return json{
      {"kind", "split"},
      {"feature", node.rule.feature},
      {"op", to_string(node.rule.op)},
      {"theta", node.rule.theta},
      {"attention_ref", node.rule.attention_ref},
      {"use_complement", node.rule.use_complement},
      {"gain", node.gain},
      {"on_true", node_to_json(*node.on_true)},
      {"on_false", node_to_json(*node.on_false)},
  };
}

std::unique_ptr<SetTreeNode> node_from_json(const json& obj, int depth,
                                            const BoostConfig& config) {
  auto node = std::make_unique<SetTreeNode>();
  const std::string kind = obj.at("kind").get<std::string>();
  if (kind == "leaf") {
    node->value = obj.at("value").get<double>();
    return node;
  }
  if (kind != "split") throw DataError("model: unknown node kind " + kind);
  if (depth >= config.max_depth) {
    throw DataError("model: tree exceeds its declared max_depth");
  }
  node->rule.feature = obj.at("feature").get<int>();
  if (node->rule.feature < 0 ||
      node->rule.feature >= static_cast<int>(kFeatureCount)) {
    throw DataError("model: feature index out of range");
  }
  const auto op = set_op_from_string(obj.at("op").get<std::string>());
  if (!op) {
    throw DataError("model: unknown operator " +
                    obj.at("op").get<std::string>());
  }
  node->rule.op = *op;
  node->rule.theta = obj.at("theta").get<double>();
  node->rule.attention_ref = obj.at("attention_ref").get<int>();
  if (node->rule.attention_ref < 0 ||
      node->rule.attention_ref > config.attention_window ||
      node->rule.attention_ref > depth) {
    throw DataError("model: attention_ref outside the window");
  }
  node->rule.use_complement = obj.at("use_complement").get<bool>();
  node->gain = obj.at("gain").get<double>();
  node->on_true = node_from_json(obj.at("on_true"), depth + 1, config);
  node->on_false = node_from_json(obj.at("on_false"), depth + 1, config);
  return node;
}

}  // namespace

std::string model_to_json(const GbstModel& model) {
  json trees = json::array();
  for (const auto& tree : model.trees) trees.push_back(node_to_json(*tree));
  json obj = {
      {"format_version", kModelFormatVersion},
      {"model",
       {{"base_score", model.base_score},
        {"learning_rate", model.learning_rate},
        {"n_trees", model.trees.size()},
        {"feature_names", model.feature_names},
        {"trees", std::move(trees)}}},
      {"training",
       {{"n_trees", model.config.n_trees},
        {"max_depth", model.config.max_depth},
        {"attention_window", model.config.attention_window},
        {"learning_rate", model.config.learning_rate},
        {"lambda", model.config.lambda},
        {"min_samples_leaf", model.config.min_samples_leaf},
        {"seed", model.config.seed}}},
  };
  return obj.dump(2) + "\n";
}

GbstModel model_from_json(const std::string& text) {
  json obj;
  try {
    obj = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("bad model JSON: ") + e.what());
  }
  try {
    if (obj.at("format_version").get<int>() != kModelFormatVersion) {
      throw DataError("model: unsupported format_version");
    }
    GbstModel model;
    const json& training = obj.at("training");
    model.config.n_trees = training.at("n_trees").get<int>();
    model.config.max_depth = training.at("max_depth").get<int>();
    model.config.attention_window = training.at("attention_window").get<int>();
    model.config.learning_rate = training.at("learning_rate").get<double>();
    model.config.lambda = training.at("lambda").get<double>();
    model.config.min_samples_leaf = training.at("min_samples_leaf").get<int>();
    model.config.seed = training.at("seed").get<std::uint64_t>();

    const json& m = obj.at("model");
    model.base_score = m.at("base_score").get<double>();
    model.learning_rate = m.at("learning_rate").get<double>();
    model.feature_names = m.at("feature_names").get<std::vector<std::string>>();
    if (model.feature_names.size() != kFeatureCount) {
      throw DataError("model: expected " + std::to_string(kFeatureCount) +
                      " feature names");
    }
    for (const json& tree : m.at("trees")) {
      model.trees.push_back(node_from_json(tree, 0, model.config));
    }
    if (model.trees.size() != m.at("n_trees").get<std::size_t>()) {
      throw DataError("model: n_trees does not match the tree list");
    }
    return model;
  } catch (const json::exception& e) {
    throw DataError(std::string("bad model JSON: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const GbstModel& model) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write model file: " + path.string());
  out << model_to_json(model);
}

GbstModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return model_from_json(text);
}

}  // namespace gbst
