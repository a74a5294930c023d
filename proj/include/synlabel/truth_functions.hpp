#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "synlabel/data_model.hpp"
#include "synlabel/random.hpp"

namespace synlabel {

enum class TruthFunctionKind { kDecisionTree, kRandomForest, kClosedForm, kComposed };

std::string TruthFunctionKindName(TruthFunctionKind kind);

// Deterministic labelling function. Evaluation must be pure: the same row
// always yields the same output, bit for bit.
class TruthFunction {
 public:
  virtual ~TruthFunction() = default;

  virtual TruthFunctionKind kind() const = 0;
  virtual std::size_t input_arity() const = 0;
  virtual std::size_t class_count() const = 0;

  virtual ClassId PredictRow(std::span<const double> row) const = 0;

  virtual bool soft_capable() const { return false; }
  // Writes a probability vector of length class_count() into `out`.
  virtual void PredictSoftRow(std::span<const double> row, std::span<double> out) const;

  virtual bool tree_based() const { return false; }
  // Normalized mean impurity decrease per input feature.
  virtual std::vector<double> Importances() const;

  virtual nlohmann::json ToJson() const = 0;
};

// Rebuilds any serializable truth function from its JSON dump.
TruthFunctionPtr TruthFunctionFromJson(const nlohmann::json& j);

// --- Trees ---------------------------------------------------------------

inline constexpr std::size_t kUnlimitedDepth = std::numeric_limits<std::size_t>::max();

struct TreeParams {
  std::size_t max_depth = kUnlimitedDepth;
  std::size_t min_samples_leaf = 1;
  // Number of candidate features drawn per split; 0 means all features.
  std::size_t features_per_split = 0;
};

struct TreeNode {
  static constexpr int kLeaf = -1;

  int feature = kLeaf;
  double threshold = 0.0;  // rows with x[feature] <= threshold go left
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  std::vector<std::uint32_t> class_counts;  // training rows reaching the node

  bool is_leaf() const { return feature == kLeaf; }
};

class DecisionTree final : public TruthFunction {
 public:
  DecisionTree(std::vector<TreeNode> nodes, std::size_t input_arity, std::size_t class_count);

  TruthFunctionKind kind() const override { return TruthFunctionKind::kDecisionTree; }
  std::size_t input_arity() const override { return arity_; }
  std::size_t class_count() const override { return class_count_; }
  ClassId PredictRow(std::span<const double> row) const override;
  bool soft_capable() const override { return true; }
  void PredictSoftRow(std::span<const double> row, std::span<double> out) const override;
  bool tree_based() const override { return true; }
  std::vector<double> Importances() const override;
  nlohmann::json ToJson() const override;

  static std::shared_ptr<const DecisionTree> FromJson(const nlohmann::json& j);

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& LeafFor(std::span<const double> row) const;
  // Per-feature impurity decrease, normalized to sum 1 (all zero for a stump).
  std::vector<double> NormalizedImpurityDecrease() const;

 private:
  std::vector<TreeNode> nodes_;
  std::size_t arity_;
  std::size_t class_count_;
};

// CART with Gini impurity. Thresholds sit at midpoints between adjacent
// distinct values; among equally good splits the lowest feature index and
// then the lowest threshold wins. `seed` only matters when
// features_per_split is smaller than the feature count.
std::shared_ptr<const DecisionTree> FitDecisionTree(const FeatureMatrix& X,
                                                    const HardLabelVector& y,
                                                    std::size_t class_count,
                                                    const TreeParams& params,
                                                    std::uint64_t seed);

struct ForestParams {
  std::size_t tree_count = 100;
  std::size_t max_depth = 16;
  std::size_t min_samples_leaf = 1;
  std::optional<std::size_t> features_per_split;  // default ceil(sqrt(d))
  bool bootstrap = true;
  std::uint64_t seed = 0;

  nlohmann::json ToJson() const;
};

class RandomForest final : public TruthFunction {
 public:
  explicit RandomForest(std::vector<std::shared_ptr<const DecisionTree>> trees);

  TruthFunctionKind kind() const override { return TruthFunctionKind::kRandomForest; }
  std::size_t input_arity() const override { return trees_.front()->input_arity(); }
  std::size_t class_count() const override { return trees_.front()->class_count(); }
  ClassId PredictRow(std::span<const double> row) const override;
  bool soft_capable() const override { return true; }
  // Mean of the per-tree leaf class frequencies.
  void PredictSoftRow(std::span<const double> row, std::span<double> out) const override;
  bool tree_based() const override { return true; }
  std::vector<double> Importances() const override;
  nlohmann::json ToJson() const override;

  static std::shared_ptr<const RandomForest> FromJson(const nlohmann::json& j);

  const std::vector<std::shared_ptr<const DecisionTree>>& trees() const { return trees_; }

 private:
  std::vector<std::shared_ptr<const DecisionTree>> trees_;
};

// Tree t is grown from stream (seed, t), so the forest does not depend on
// how many threads fit it.
std::shared_ptr<const RandomForest> FitRandomForest(const FeatureMatrix& X,
                                                    const HardLabelVector& y,
                                                    std::size_t class_count,
                                                    const ForestParams& params,
                                                    std::size_t threads = 1);

// --- Closed-form functions ----------------------------------------------

// Binary rule: class 1 iff sum_j w_j * x_j > threshold.
class LinearThresholdFunction final : public TruthFunction {
 public:
  LinearThresholdFunction(std::vector<double> weights, double threshold);

  TruthFunctionKind kind() const override { return TruthFunctionKind::kClosedForm; }
  std::size_t input_arity() const override { return weights_.size(); }
  std::size_t class_count() const override { return 2; }
  ClassId PredictRow(std::span<const double> row) const override;
  nlohmann::json ToJson() const override;

 private:
  std::vector<double> weights_;
  double threshold_;
};

// Multiclass rule: class = argmax_c (W[c] . x + b[c]), lowest index on ties.
class LinearArgmaxFunction final : public TruthFunction {
 public:
  LinearArgmaxFunction(Matrix weights, std::vector<double> bias);

  TruthFunctionKind kind() const override { return TruthFunctionKind::kClosedForm; }
  std::size_t input_arity() const override { return weights_.cols(); }
  std::size_t class_count() const override { return weights_.rows(); }
  ClassId PredictRow(std::span<const double> row) const override;
  nlohmann::json ToJson() const override;

 private:
  Matrix weights_;
  std::vector<double> bias_;
};

// Wraps an arbitrary pure callable. Not serializable.
class CallableFunction final : public TruthFunction {
 public:
  using Fn = std::function<ClassId(std::span<const double>)>;
  CallableFunction(std::size_t input_arity, std::size_t class_count, Fn fn);

  TruthFunctionKind kind() const override { return TruthFunctionKind::kClosedForm; }
  std::size_t input_arity() const override { return arity_; }
  std::size_t class_count() const override { return class_count_; }
  ClassId PredictRow(std::span<const double> row) const override;
  nlohmann::json ToJson() const override;

 private:
  std::size_t arity_;
  std::size_t class_count_;
  Fn fn_;
};

// --- Decision rules -----------------------------------------------------

enum class DecisionRuleKind { kArgmax, kSampleProportional };

struct DecisionRule {
  DecisionRuleKind kind = DecisionRuleKind::kArgmax;

  static DecisionRule Argmax() { return {DecisionRuleKind::kArgmax}; }
  static DecisionRule SampleProportional() { return {DecisionRuleKind::kSampleProportional}; }
  std::string name() const;
  static DecisionRule FromName(const std::string& name);
};

// Index of the largest entry; ties go to the lowest index.
ClassId ArgmaxLowest(std::span<const double> probs);
// Inverse-CDF draw for uniform u in [0, 1). Never returns a zero-probability class.
ClassId SampleCategorical(std::span<const double> probs, double u);

// Argmax ignores `stream`; sampling draws row i from stream.Derive(i).
HardLabelVector ApplyDecisionRule(const SoftLabelMatrix& soft, DecisionRule rule, Stream stream);

// f_dec composed with a soft model: hard output = argmax of the soft output.
// This is the truth function produced when a learned model is promoted to
// ground truth.
class DiscretizedModel final : public TruthFunction {
 public:
  explicit DiscretizedModel(TruthFunctionPtr soft_model);

  TruthFunctionKind kind() const override { return TruthFunctionKind::kComposed; }
  std::size_t input_arity() const override { return model_->input_arity(); }
  std::size_t class_count() const override { return model_->class_count(); }
  ClassId PredictRow(std::span<const double> row) const override;
  bool tree_based() const override { return model_->tree_based(); }
  std::vector<double> Importances() const override { return model_->Importances(); }
  nlohmann::json ToJson() const override;

  const TruthFunctionPtr& soft_model() const { return model_; }

 private:
  TruthFunctionPtr model_;
};

// --- Batch evaluation ---------------------------------------------------

HardLabelVector PredictHard(const TruthFunction& f, const FeatureMatrix& X, std::size_t threads = 1);
SoftLabelMatrix PredictSoft(const TruthFunction& f, const FeatureMatrix& X, std::size_t threads = 1);
// Length-d, nonnegative, sums to 1. An all-zero raw vector maps to uniform.
std::vector<double> FeatureImportances(const TruthFunction& f);

// --- Annotators ---------------------------------------------------------

// Multiplicative log-normal jitter of each probability, then renormalized.
// Zero probabilities stay zero.
struct ConfidenceNoise {
  double sigma = 0.0;
};

struct AnnotatorSpec {
  TruthFunctionPtr model;
  std::vector<std::size_t> visible_features;  // columns of the full feature matrix
  std::optional<ConfidenceNoise> confidence_noise;
};

class Annotator {
 public:
  // Throws InvalidArgument if the visible set is empty or does not match
  // the model's input arity.
  explicit Annotator(AnnotatorSpec spec);

  // Soft models report their probability vector; hard-only models report
  // the one-hot vector of their decision. Row i of the noise uses
  // stream.Derive(i).
  SoftLabelMatrix Annotate(const FeatureMatrix& X_full, Stream stream) const;

  const AnnotatorSpec& spec() const { return spec_; }

 private:
  AnnotatorSpec spec_;
};

// Row-wise mean of equally shaped soft-label matrices (crowd aggregation).
SoftLabelMatrix AverageSoftLabels(std::span<const SoftLabelMatrix> labels);

}  // namespace synlabel
