#include "synlabel/truth_functions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "synlabel/errors.hpp"
#include "synlabel/parallel.hpp"

namespace synlabel {
namespace {

void CheckArity(const TruthFunction& f, std::size_t cols) {
  if (cols != f.input_arity()) {
    throw InvalidArgument("input has " + std::to_string(cols) + " columns, truth function expects " +
                          std::to_string(f.input_arity()));
  }
}

// n * gini(counts) = n - sum_c counts_c^2 / n.
double WeightedGini(std::span<const std::uint32_t> counts) {
  double n = 0.0;
  double sq = 0.0;
  for (std::uint32_t c : counts) {
    n += c;
    sq += static_cast<double>(c) * c;
  }
  return n > 0.0 ? n - sq / n : 0.0;
}

double WeightedGini(std::span<const double> counts, double n) {
  if (n <= 0.0) return 0.0;
  double sq = 0.0;
  for (double c : counts) sq += c * c;
  return n - sq / n;
}

ClassId ArgmaxCounts(std::span<const std::uint32_t> counts) {
  ClassId best = 0;
  for (std::size_t c = 1; c < counts.size(); ++c) {
    if (counts[c] > counts[best]) best = static_cast<ClassId>(c);
  }
  return best;
}

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& X, std::span<const ClassId> y, std::size_t class_count, const TreeParams& params,
              Stream stream)
      : X_(X), y_(y), class_count_(class_count), params_(params), stream_(stream) {
    features_per_split_ = params.features_per_split == 0 ? X.cols() : std::min(params.features_per_split, X.cols());
  }

  std::vector<TreeNode> Build(std::vector<std::size_t> rows) {
    rows_ = std::move(rows);
    Grow(0, rows_.size(), 0);
    return std::move(nodes_);
  }

 private:
  struct Split {
    int feature = TreeNode::kLeaf;
    double threshold = 0.0;
    double score = 0.0;
  };

  std::uint32_t Grow(std::size_t begin, std::size_t end, std::size_t depth) {
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    TreeNode node;
    node.class_counts.assign(class_count_, 0);
    for (std::size_t k = begin; k < end; ++k) ++node.class_counts[y_[rows_[k]]];
    nodes_.push_back(node);

    const std::size_t n = end - begin;
    const bool pure = std::count_if(node.class_counts.begin(), node.class_counts.end(),
                                    [](std::uint32_t c) { return c > 0; }) <= 1;
    if (pure || depth >= params_.max_depth || n < 2 * params_.min_samples_leaf) return id;

    Stream node_stream = stream_.Derive(id);
    const Split split = FindSplit(begin, end, CandidateFeatures(begin, end, node_stream));
    if (split.feature == TreeNode::kLeaf) return id;

    const auto f = static_cast<std::size_t>(split.feature);
    const auto middle = std::partition(rows_.begin() + begin, rows_.begin() + end,
                                       [&](std::size_t r) { return X_(r, f) <= split.threshold; });
    // Keeps row order inside children independent of std::partition details.
    std::sort(rows_.begin() + begin, middle);
    std::sort(middle, rows_.begin() + end);
    const auto mid = static_cast<std::size_t>(middle - rows_.begin());

    const std::uint32_t left = Grow(begin, mid, depth + 1);
    const std::uint32_t right = Grow(mid, end, depth + 1);
    nodes_[id].feature = split.feature;
    nodes_[id].threshold = split.threshold;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  bool IsConstant(std::size_t begin, std::size_t end, std::size_t f) const {
    const double first = X_(rows_[begin], f);
    for (std::size_t k = begin + 1; k < end; ++k) {
      if (X_(rows_[k], f) != first) return false;
    }
    return true;
  }

  // Ascending list of features to evaluate. With subsampling, features are
  // visited in random order and constant ones are skipped without counting
  // toward the quota.
  std::vector<std::size_t> CandidateFeatures(std::size_t begin, std::size_t end, Stream& stream) const {
    const std::size_t d = X_.cols();
    std::vector<std::size_t> out;
    if (features_per_split_ >= d) {
      out.resize(d);
      std::iota(out.begin(), out.end(), 0);
      return out;
    }
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t k = 0; k < d && out.size() < features_per_split_; ++k) {
      const std::size_t pick = k + stream.UniformIndex(d - k);
      std::swap(order[k], order[pick]);
      if (!IsConstant(begin, end, order[k])) out.push_back(order[k]);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  Split FindSplit(std::size_t begin, std::size_t end, const std::vector<std::size_t>& features) {
    Split best;
    bool found = false;
    const std::size_t n = end - begin;
    const std::size_t min_leaf = std::max<std::size_t>(params_.min_samples_leaf, 1);
    std::vector<std::size_t> sorted(rows_.begin() + begin, rows_.begin() + end);
    std::vector<double> left(class_count_);
    std::vector<double> right(class_count_);
    for (std::size_t f : features) {
      std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
        const double va = X_(a, f);
        const double vb = X_(b, f);
        return va < vb || (va == vb && a < b);
      });
      std::fill(left.begin(), left.end(), 0.0);
      std::fill(right.begin(), right.end(), 0.0);
      for (std::size_t r : sorted) right[y_[r]] += 1.0;
      for (std::size_t k = 0; k + 1 < n; ++k) {
        const ClassId label = y_[sorted[k]];
        left[label] += 1.0;
        right[label] -= 1.0;
        const double here = X_(sorted[k], f);
        const double next = X_(sorted[k + 1], f);
        if (!(here < next)) continue;
        const std::size_t n_left = k + 1;
        if (n_left < min_leaf || n - n_left < min_leaf) continue;
        const double score = WeightedGini(left, static_cast<double>(n_left)) +
                             WeightedGini(right, static_cast<double>(n - n_left));
        if (!found || score < best.score) {
          double threshold = here + (next - here) / 2.0;
          if (!(threshold < next)) threshold = here;
          best = {static_cast<int>(f), threshold, score};
          found = true;
        }
      }
    }
    return best;
  }

  const Matrix& X_;
  std::span<const ClassId> y_;
  std::size_t class_count_;
  TreeParams params_;
  Stream stream_;
  std::size_t features_per_split_;
  std::vector<std::size_t> rows_;
  std::vector<TreeNode> nodes_;
};

void CheckTrainingData(const FeatureMatrix& X, const HardLabelVector& y, std::size_t class_count) {
  if (X.rows() == 0 || y.size() == 0) throw InvalidArgument("cannot fit a tree on an empty dataset");
  if (X.rows() != y.size()) throw InvalidArgument("feature rows and label count differ");
  if (X.cols() == 0) throw InvalidArgument("cannot fit a tree without features");
  if (class_count < 2) throw InvalidArgument("class count must be at least 2");
  for (ClassId label : y) {
    if (label >= class_count) throw InvalidArgument("training label out of range");
  }
}

std::vector<std::size_t> AllRows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

nlohmann::json MatrixToJson(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  }
  return rows;
}

Matrix MatrixFromJson(const nlohmann::json& j) {
  return Matrix::FromRows(j.get<std::vector<std::vector<double>>>());
}

}  // namespace

std::string TruthFunctionKindName(TruthFunctionKind kind) {
  switch (kind) {
    case TruthFunctionKind::kDecisionTree: return "decision_tree";
    case TruthFunctionKind::kRandomForest: return "random_forest";
    case TruthFunctionKind::kClosedForm: return "closed_form";
    case TruthFunctionKind::kComposed: return "composed";
  }
  return "unknown";
}

void TruthFunction::PredictSoftRow(std::span<const double>, std::span<double>) const {
  throw UnsupportedOperation(TruthFunctionKindName(kind()) + " function has no soft output");
}

std::vector<double> TruthFunction::Importances() const {
  throw UnsupportedOperation(TruthFunctionKindName(kind()) + " function has no feature importances");
}

TruthFunctionPtr TruthFunctionFromJson(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "decision_tree") return DecisionTree::FromJson(j);
  if (kind == "random_forest") return RandomForest::FromJson(j);
  if (kind == "composed") {
    if (j.at("rule").get<std::string>() != "argmax") throw ParseError("unknown composed decision rule");
    return std::make_shared<DiscretizedModel>(TruthFunctionFromJson(j.at("model")));
  }
  if (kind == "closed_form") {
    const std::string form = j.at("form").get<std::string>();
    if (form == "linear_threshold") {
      return std::make_shared<LinearThresholdFunction>(j.at("weights").get<std::vector<double>>(),
                                                       j.at("threshold").get<double>());
    }
    if (form == "linear_argmax") {
      return std::make_shared<LinearArgmaxFunction>(MatrixFromJson(j.at("weights")),
                                                    j.at("bias").get<std::vector<double>>());
    }
    throw ParseError("unknown closed-form function '" + form + "'");
  }
  throw ParseError("unknown truth function kind '" + kind + "'");
}

// --- DecisionTree ---------------------------------------------------------

DecisionTree::DecisionTree(std::vector<TreeNode> nodes, std::size_t input_arity, std::size_t class_count)
    : nodes_(std::move(nodes)), arity_(input_arity), class_count_(class_count) {
  if (nodes_.empty()) throw InvalidArgument("decision tree needs at least one node");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const TreeNode& node = nodes_[i];
    if (node.class_counts.size() != class_count_) throw InvalidArgument("tree node class count mismatch");
    if (node.is_leaf()) continue;
    if (node.feature < 0 || static_cast<std::size_t>(node.feature) >= arity_ || node.left <= i ||
        node.right <= i || node.left >= nodes_.size() || node.right >= nodes_.size()) {
      throw InvalidArgument("malformed decision tree node " + std::to_string(i));
    }
  }
}

const TreeNode& DecisionTree::LeafFor(std::span<const double> row) const {
  const TreeNode* node = &nodes_[0];
  while (!node->is_leaf()) {
    node = &nodes_[row[static_cast<std::size_t>(node->feature)] <= node->threshold ? node->left : node->right];
  }
  return *node;
}

ClassId DecisionTree::PredictRow(std::span<const double> row) const { return ArgmaxCounts(LeafFor(row).class_counts); }

void DecisionTree::PredictSoftRow(std::span<const double> row, std::span<double> out) const {
  const auto& counts = LeafFor(row).class_counts;
  double total = 0.0;
  for (std::uint32_t c : counts) total += c;
  for (std::size_t c = 0; c < class_count_; ++c) out[c] = counts[c] / total;
}

std::vector<double> DecisionTree::NormalizedImpurityDecrease() const {
  std::vector<double> decrease(arity_, 0.0);
  for (const TreeNode& node : nodes_) {
    if (node.is_leaf()) continue;
    const double gain = WeightedGini(node.class_counts) - WeightedGini(nodes_[node.left].class_counts) -
                        WeightedGini(nodes_[node.right].class_counts);
    decrease[static_cast<std::size_t>(node.feature)] += std::max(gain, 0.0);
  }
  const double total = std::accumulate(decrease.begin(), decrease.end(), 0.0);
  if (total > 0.0) {
    for (double& v : decrease) v /= total;
  }
  return decrease;
}

std::vector<double> DecisionTree::Importances() const { return NormalizedImpurityDecrease(); }

nlohmann::json DecisionTree::ToJson() const {
  nlohmann::json nodes = nlohmann::json::array();
  for (const TreeNode& node : nodes_) {
    nlohmann::json n = {{"counts", node.class_counts}};
    if (!node.is_leaf()) {
      n["feature"] = node.feature;
      n["threshold"] = node.threshold;
      n["left"] = node.left;
      n["right"] = node.right;
    }
    nodes.push_back(std::move(n));
  }
  return {{"kind", "decision_tree"}, {"input_arity", arity_}, {"class_count", class_count_}, {"nodes", nodes}};
}

std::shared_ptr<const DecisionTree> DecisionTree::FromJson(const nlohmann::json& j) {
  std::vector<TreeNode> nodes;
  for (const auto& n : j.at("nodes")) {
    TreeNode node;
    node.class_counts = n.at("counts").get<std::vector<std::uint32_t>>();
    if (n.contains("feature")) {
      node.feature = n.at("feature").get<int>();
      node.threshold = n.at("threshold").get<double>();
      node.left = n.at("left").get<std::uint32_t>();
      node.right = n.at("right").get<std::uint32_t>();
    }
    nodes.push_back(std::move(node));
  }
  return std::make_shared<DecisionTree>(std::move(nodes), j.at("input_arity").get<std::size_t>(),
                                        j.at("class_count").get<std::size_t>());
}

std::shared_ptr<const DecisionTree> FitDecisionTree(const FeatureMatrix& X, const HardLabelVector& y,
                                                    std::size_t class_count, const TreeParams& params,
                                                    std::uint64_t seed) {
  CheckTrainingData(X, y, class_count);
  // Stream layout matches tree 0 of a forest with the same seed, so a
  // one-tree forest without bagging reproduces this tree exactly.
  TreeBuilder builder(X.values(), y.values(), class_count, params, Stream(seed).Derive({0, 1}));
  return std::make_shared<DecisionTree>(builder.Build(AllRows(X.rows())), X.cols(), class_count);
}

// --- RandomForest ---------------------------------------------------------

nlohmann::json ForestParams::ToJson() const {
  nlohmann::json j = {{"tree_count", tree_count},
                      {"max_depth", max_depth == kUnlimitedDepth ? nlohmann::json(nullptr) : nlohmann::json(max_depth)},
                      {"min_samples_leaf", min_samples_leaf},
                      {"bootstrap", bootstrap},
                      {"seed", seed}};
  j["features_per_split"] = features_per_split ? nlohmann::json(*features_per_split) : nlohmann::json("sqrt");
  return j;
}

RandomForest::RandomForest(std::vector<std::shared_ptr<const DecisionTree>> trees) : trees_(std::move(trees)) {
  if (trees_.empty()) throw InvalidArgument("random forest needs at least one tree");
  for (const auto& t : trees_) {
    if (t->input_arity() != trees_.front()->input_arity() || t->class_count() != trees_.front()->class_count()) {
      throw InvalidArgument("random forest trees disagree on arity or class count");
    }
  }
}

void RandomForest::PredictSoftRow(std::span<const double> row, std::span<double> out) const {
  const std::size_t C = class_count();
  std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(C), 0.0);
  for (const auto& tree : trees_) {
    const auto& counts = tree->LeafFor(row).class_counts;
    double total = 0.0;
    for (std::uint32_t c : counts) total += c;
    for (std::size_t c = 0; c < C; ++c) out[c] += counts[c] / total;
  }
  const double t = static_cast<double>(trees_.size());
  for (std::size_t c = 0; c < C; ++c) out[c] /= t;
}

ClassId RandomForest::PredictRow(std::span<const double> row) const {
  std::vector<double> probs(class_count());
  PredictSoftRow(row, probs);
  return ArgmaxLowest(probs);
}

std::vector<double> RandomForest::Importances() const {
  std::vector<double> total(input_arity(), 0.0);
  for (const auto& tree : trees_) {
    const auto per_tree = tree->NormalizedImpurityDecrease();
    for (std::size_t j = 0; j < total.size(); ++j) total[j] += per_tree[j];
  }
  const double sum = std::accumulate(total.begin(), total.end(), 0.0);
  if (sum > 0.0) {
    for (double& v : total) v /= sum;
  }
  return total;
}

nlohmann::json RandomForest::ToJson() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : trees_) trees.push_back(t->ToJson());
  return {{"kind", "random_forest"}, {"trees", trees}};
}

std::shared_ptr<const RandomForest> RandomForest::FromJson(const nlohmann::json& j) {
  std::vector<std::shared_ptr<const DecisionTree>> trees;
  for (const auto& t : j.at("trees")) trees.push_back(DecisionTree::FromJson(t));
  return std::make_shared<RandomForest>(std::move(trees));
}

std::shared_ptr<const RandomForest> FitRandomForest(const FeatureMatrix& X, const HardLabelVector& y,
                                                    std::size_t class_count, const ForestParams& params,
                                                    std::size_t threads) {
  CheckTrainingData(X, y, class_count);
  if (params.tree_count == 0) throw InvalidArgument("forest tree_count must be at least 1");
  TreeParams tree_params;
  tree_params.max_depth = params.max_depth;
  tree_params.min_samples_leaf = params.min_samples_leaf;
  tree_params.features_per_split =
      params.features_per_split.value_or(static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(X.cols())))));

  const Stream root(params.seed);
  const std::size_t n = X.rows();
  std::vector<std::shared_ptr<const DecisionTree>> trees(params.tree_count);
  ParallelFor(params.tree_count, threads, [&](std::size_t t) {
    const Stream tree_stream = root.Derive(t);
    std::vector<std::size_t> rows;
    if (params.bootstrap) {
      Stream bag = tree_stream.Derive(0);
      rows.resize(n);
      for (auto& r : rows) r = bag.UniformIndex(n);
      std::sort(rows.begin(), rows.end());
    } else {
      rows = AllRows(n);
    }
    TreeBuilder builder(X.values(), y.values(), class_count, tree_params, tree_stream.Derive(1));
    trees[t] = std::make_shared<DecisionTree>(builder.Build(std::move(rows)), X.cols(), class_count);
  });
  return std::make_shared<RandomForest>(std::move(trees));
}

// --- Closed forms ---------------------------------------------------------

LinearThresholdFunction::LinearThresholdFunction(std::vector<double> weights, double threshold)
    : weights_(std::move(weights)), threshold_(threshold) {
  if (weights_.empty()) throw InvalidArgument("linear threshold function needs at least one weight");
}

ClassId LinearThresholdFunction::PredictRow(std::span<const double> row) const {
  double s = 0.0;
  for (std::size_t j = 0; j < weights_.size(); ++j) s += weights_[j] * row[j];
  return s > threshold_ ? 1 : 0;
}

nlohmann::json LinearThresholdFunction::ToJson() const {
  return {{"kind", "closed_form"}, {"form", "linear_threshold"}, {"weights", weights_}, {"threshold", threshold_}};
}

LinearArgmaxFunction::LinearArgmaxFunction(Matrix weights, std::vector<double> bias)
    : weights_(std::move(weights)), bias_(std::move(bias)) {
  if (weights_.rows() < 2 || weights_.cols() == 0) throw InvalidArgument("linear argmax needs >= 2 classes");
  if (bias_.size() != weights_.rows()) throw InvalidArgument("linear argmax bias length mismatch");
}

ClassId LinearArgmaxFunction::PredictRow(std::span<const double> row) const {
  std::vector<double> scores(weights_.rows());
  for (std::size_t c = 0; c < weights_.rows(); ++c) {
    double s = bias_[c];
    for (std::size_t j = 0; j < weights_.cols(); ++j) s += weights_(c, j) * row[j];
    scores[c] = s;
  }
  return ArgmaxLowest(scores);
}

nlohmann::json LinearArgmaxFunction::ToJson() const {
  return {{"kind", "closed_form"}, {"form", "linear_argmax"}, {"weights", MatrixToJson(weights_)}, {"bias", bias_}};
}

CallableFunction::CallableFunction(std::size_t input_arity, std::size_t class_count, Fn fn)
    : arity_(input_arity), class_count_(class_count), fn_(std::move(fn)) {
  if (!fn_) throw InvalidArgument("callable truth function is empty");
}

ClassId CallableFunction::PredictRow(std::span<const double> row) const { return fn_(row); }

nlohmann::json CallableFunction::ToJson() const {
  throw UnsupportedOperation("callable truth functions cannot be serialized");
}

// --- Decision rules -------------------------------------------------------

std::string DecisionRule::name() const { return kind == DecisionRuleKind::kArgmax ? "argmax" : "sample"; }

DecisionRule DecisionRule::FromName(const std::string& name) {
  if (name == "argmax") return Argmax();
  if (name == "sample" || name == "sample_proportional") return SampleProportional();
  throw InvalidArgument("unknown decision rule '" + name + "'");
}

ClassId ArgmaxLowest(std::span<const double> probs) {
  ClassId best = 0;
  for (std::size_t c = 1; c < probs.size(); ++c) {
    if (probs[c] > probs[best]) best = static_cast<ClassId>(c);
  }
  return best;
}

ClassId SampleCategorical(std::span<const double> probs, double u) {
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t c = 0; c < probs.size(); ++c) {
    if (probs[c] <= 0.0) continue;
    cumulative += probs[c];
    last_positive = c;
    if (u < cumulative) return static_cast<ClassId>(c);
  }
  // Rounding left u above the accumulated mass.
  return static_cast<ClassId>(last_positive);
}

HardLabelVector ApplyDecisionRule(const SoftLabelMatrix& soft, DecisionRule rule, Stream stream) {
  std::vector<ClassId> out(soft.rows());
  for (std::size_t i = 0; i < soft.rows(); ++i) {
    if (rule.kind == DecisionRuleKind::kArgmax) {
      out[i] = ArgmaxLowest(soft.row(i));
    } else {
      Stream row_stream = stream.Derive(i);
      out[i] = SampleCategorical(soft.row(i), row_stream.Uniform());
    }
  }
  return HardLabelVector(std::move(out));
}

DiscretizedModel::DiscretizedModel(TruthFunctionPtr soft_model) : model_(std::move(soft_model)) {
  if (!model_) throw InvalidArgument("discretized model needs an inner model");
  if (!model_->soft_capable()) throw InvalidArgument("discretized model needs a soft-capable inner model");
}

ClassId DiscretizedModel::PredictRow(std::span<const double> row) const {
  std::vector<double> probs(model_->class_count());
  model_->PredictSoftRow(row, probs);
  return ArgmaxLowest(probs);
}

nlohmann::json DiscretizedModel::ToJson() const {
  return {{"kind", "composed"}, {"rule", "argmax"}, {"model", model_->ToJson()}};
}

// --- Batch evaluation -----------------------------------------------------

HardLabelVector PredictHard(const TruthFunction& f, const FeatureMatrix& X, std::size_t threads) {
  CheckArity(f, X.cols());
  std::vector<ClassId> out(X.rows());
  ParallelFor(X.rows(), threads, [&](std::size_t i) { out[i] = f.PredictRow(X.row(i)); });
  return HardLabelVector(std::move(out));
}

SoftLabelMatrix PredictSoft(const TruthFunction& f, const FeatureMatrix& X, std::size_t threads) {
  CheckArity(f, X.cols());
  if (!f.soft_capable()) {
    throw UnsupportedOperation(TruthFunctionKindName(f.kind()) + " function has no soft output");
  }
  Matrix out(X.rows(), f.class_count());
  ParallelFor(X.rows(), threads, [&](std::size_t i) { f.PredictSoftRow(X.row(i), out.row(i)); });
  return SoftLabelMatrix(std::move(out));
}

std::vector<double> FeatureImportances(const TruthFunction& f) {
  if (!f.tree_based()) {
    throw UnsupportedOperation(TruthFunctionKindName(f.kind()) + " function has no feature importances");
  }
  std::vector<double> raw = f.Importances();
  const double sum = std::accumulate(raw.begin(), raw.end(), 0.0);
  if (!(sum > 0.0)) return std::vector<double>(raw.size(), 1.0 / static_cast<double>(raw.size()));
  for (double& v : raw) v /= sum;
  return raw;
}

// --- Annotators -----------------------------------------------------------

Annotator::Annotator(AnnotatorSpec spec) : spec_(std::move(spec)) {
  if (!spec_.model) throw InvalidArgument("annotator needs a model");
  if (spec_.visible_features.empty()) throw InvalidArgument("annotator needs at least one visible feature");
  if (spec_.visible_features.size() != spec_.model->input_arity()) {
    throw InvalidArgument("annotator sees " + std::to_string(spec_.visible_features.size()) +
                          " features but its model needs " + std::to_string(spec_.model->input_arity()));
  }
  if (spec_.confidence_noise && !(spec_.confidence_noise->sigma >= 0.0)) {
    throw InvalidArgument("confidence noise sigma must be nonnegative");
  }
}

SoftLabelMatrix Annotator::Annotate(const FeatureMatrix& X_full, Stream stream) const {
  for (std::size_t j : spec_.visible_features) {
    if (j >= X_full.cols()) throw InvalidArgument("annotator visible feature " + std::to_string(j) + " out of range");
  }
  const FeatureMatrix visible = X_full.SelectColumns(spec_.visible_features);
  const TruthFunction& model = *spec_.model;
  const std::size_t C = model.class_count();
  Matrix out(visible.rows(), C);
  for (std::size_t i = 0; i < visible.rows(); ++i) {
    auto row = out.row(i);
    if (model.soft_capable()) {
      model.PredictSoftRow(visible.row(i), row);
    } else {
      row[model.PredictRow(visible.row(i))] = 1.0;
    }
    if (spec_.confidence_noise && spec_.confidence_noise->sigma > 0.0) {
      Stream row_stream = stream.Derive(i);
      double sum = 0.0;
      for (double& p : row) {
        const double z = row_stream.Normal();
        p *= std::exp(spec_.confidence_noise->sigma * z);
        sum += p;
      }
      for (double& p : row) p /= sum;
    }
  }
  return SoftLabelMatrix(std::move(out));
}

SoftLabelMatrix AverageSoftLabels(std::span<const SoftLabelMatrix> labels) {
  if (labels.empty()) throw InvalidArgument("nothing to average");
  Matrix out(labels.front().rows(), labels.front().classes());
  for (const auto& m : labels) {
    if (m.rows() != out.rows() || m.classes() != out.cols()) throw InvalidArgument("soft label shapes differ");
    for (std::size_t i = 0; i < out.rows(); ++i) {
      for (std::size_t c = 0; c < out.cols(); ++c) out(i, c) += m(i, c);
    }
  }
  const double k = static_cast<double>(labels.size());
  for (std::size_t i = 0; i < out.rows(); ++i) {
    for (double& v : out.row(i)) v /= k;
  }
  return SoftLabelMatrix(std::move(out));
}

}  // namespace synlabel
