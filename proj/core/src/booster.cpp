#include "gbst/booster.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gbst {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

namespace {

constexpr double kProbClamp = 1e-12;

double clamped_logloss(double score, double y) {
  const double p = std::clamp(score, kProbClamp, 1.0 - kProbClamp);
  return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
}

}  // namespace

BoostResult fit(std::span<const FlowStream> train,
                std::span<const FlowStream> val, const BoostConfig& config) {
  if (train.empty()) throw std::invalid_argument("fit: empty training set");
  std::size_t n_attack = 0;
  for (const FlowStream& f : train) {
    if (f.packets.empty()) throw std::invalid_argument("fit: empty flow");
    if (f.label == Label::kAttack) ++n_attack;
  }
  if (n_attack == 0 || n_attack == train.size()) {
    throw std::invalid_argument("fit: training set contains a single class");
  }

  const double prior = static_cast<double>(n_attack) /
                       static_cast<double>(train.size());
  BoostResult result;
  GbstModel& model = result.model;
  model.learning_rate = config.learning_rate;
  model.base_score = std::log(prior / (1.0 - prior));
  model.config = config;
  model.feature_names.assign(kFeatureNames.begin(), kFeatureNames.end());

  TreeConfig tree_config;
  tree_config.max_depth = config.max_depth;
  tree_config.attention_window = config.attention_window;
  tree_config.lambda = config.lambda;
  tree_config.min_samples_leaf = config.min_samples_leaf;

  std::vector<double> margin(train.size(), model.base_score);
  std::vector<double> val_margin(val.size(), model.base_score);
  std::vector<TrainSample> samples(train.size());

  for (int round = 0; round < config.n_trees; ++round) {
    for (std::size_t i = 0; i < train.size(); ++i) {
      const double p = sigmoid(margin[i]);
      const double y = train[i].label == Label::kAttack ? 1.0 : 0.0;
      samples[i] = TrainSample{&train[i], p - y, p * (1.0 - p)};
    }
    std::unique_ptr<SetTreeNode> tree = fit_tree(samples, tree_config);
    for (std::size_t i = 0; i < train.size(); ++i) {
      margin[i] += config.learning_rate * predict_tree(*tree, train[i]);
    }
    if (!val.empty()) {
      double loss = 0.0;
      for (std::size_t i = 0; i < val.size(); ++i) {
        val_margin[i] += config.learning_rate * predict_tree(*tree, val[i]);
        const double y = val[i].label == Label::kAttack ? 1.0 : 0.0;
        loss += clamped_logloss(sigmoid(val_margin[i]), y);
      }
      result.val_loss.push_back(loss / static_cast<double>(val.size()));
    }
    model.trees.push_back(std::move(tree));
  }
  return result;
}

double predict_margin(const GbstModel& model, const FlowStream& flow) {
  if (flow.packets.empty()) throw std::invalid_argument("empty flow");
  double sum = 0.0;
  for (const auto& tree : model.trees) sum += predict_tree(*tree, flow);
  return model.base_score + model.learning_rate * sum;
}

double predict_score(const GbstModel& model, const FlowStream& flow) {
  return sigmoid(predict_margin(model, flow));
}

Label classify(const GbstModel& model, const FlowStream& flow,
               double threshold) {
  if (threshold <= 0.0 || threshold >= 1.0) {
    throw std::invalid_argument("threshold must lie in (0, 1)");
  }
  return predict_score(model, flow) >= threshold ? Label::kAttack
                                                 : Label::kBenign;
}

double logistic_loss(const GbstModel& model,
                     std::span<const FlowStream> flows) {
  if (flows.empty()) throw std::invalid_argument("empty flow set");
  double loss = 0.0;
  for (const FlowStream& f : flows) {
    const double y = f.label == Label::kAttack ? 1.0 : 0.0;
    loss += clamped_logloss(predict_score(model, f), y);
  }
  return loss / static_cast<double>(flows.size());
}

namespace {

void accumulate_gains(const SetTreeNode& node, std::vector<double>& acc) {
  if (node.is_leaf()) return;
  acc[static_cast<std::size_t>(node.rule.feature)] += node.gain;
  accumulate_gains(*node.on_true, acc);
  accumulate_gains(*node.on_false, acc);
}

}  // namespace

std::map<std::string, double> feature_importance(const GbstModel& model) {
  if (model.trees.empty()) {
    throw std::invalid_argument("feature_importance: model has no trees");
  }
  std::vector<double> mean(kFeatureCount, 0.0);
  for (const auto& tree : model.trees) {
    std::vector<double> acc(kFeatureCount, 0.0);
    accumulate_gains(*tree, acc);
    const double total = std::accumulate(acc.begin(), acc.end(), 0.0);
    if (total <= 0.0) continue;  // split-free tree, zero contribution
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      mean[j] += acc[j] / total;
    }
  }
  for (double& v : mean) v /= static_cast<double>(model.trees.size());
  const double total = std::accumulate(mean.begin(), mean.end(), 0.0);
  std::map<std::string, double> report;
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    report[model.feature_names[j]] = total > 0.0 ? mean[j] / total : 0.0;
  }
  return report;
}

}  // namespace gbst
