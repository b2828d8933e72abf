#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "gbst/settree.hpp"

namespace gbst {

struct BoostConfig {
  int n_trees = 10;
  int max_depth = 10;
  int attention_window = 5;
  double learning_rate = 0.1;
  double lambda = 1.0;
  int min_samples_leaf = 1;
  std::uint64_t seed = 0;  // echoed into the model for reproducibility
};

// A gradient-boosted ensemble of set-trees with logistic output.
struct GbstModel {
  std::vector<std::unique_ptr<SetTreeNode>> trees;
  double learning_rate = 0.1;
  double base_score = 0.0;  // initial log-odds
  BoostConfig config;
  std::vector<std::string> feature_names;  // kFeatureCount entries
};

struct BoostResult {
  GbstModel model;
  std::vector<double> val_loss;  // logistic loss after each round
};

// Trains n_trees rounds of second-order boosting with binary logistic loss.
// base_score is the log-odds of the training attack prior (0 when balanced).
// The validation set only gets monitored; it never influences the fit.
// Errors on an empty or single-class training set.
BoostResult fit(std::span<const FlowStream> train,
                std::span<const FlowStream> val, const BoostConfig& config);

double predict_margin(const GbstModel& model, const FlowStream& flow);

// sigmoid(base_score + learning_rate * sum of tree outputs), in [0, 1].
double predict_score(const GbstModel& model, const FlowStream& flow);

// Attack iff predict_score >= threshold (boundary inclusive).
Label classify(const GbstModel& model, const FlowStream& flow,
               double threshold = 0.5);

double sigmoid(double x);
double logistic_loss(const GbstModel& model, std::span<const FlowStream> flows);

// Gain-based importance: each decision node's realized gain accrues to its
// rule's feature, normalized to sum 1 per tree (split-free trees contribute
// zeros), averaged across trees and renormalized. Requires >= 1 tree.
std::map<std::string, double> feature_importance(const GbstModel& model);

}  // namespace gbst
