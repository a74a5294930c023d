#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "synlabel/errors.hpp"
#include "synlabel/random.hpp"
#include "synlabel/truth_functions.hpp"

using namespace synlabel;

namespace {

FeatureMatrix Make(const Matrix& m) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < m.cols(); ++j) names.push_back("x" + std::to_string(j));
  return FeatureMatrix(names, m);
}

struct Data {
  FeatureMatrix X;
  HardLabelVector y;
};

// Two Gaussian blobs in 2-D whose centres lie 6 standard deviations apart.
Data Blobs(std::size_t n, std::uint64_t seed) {
  Stream s(seed);
  Matrix m(n, 2);
  std::vector<ClassId> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<ClassId>(i % 2);
    const double c = y[i] == 0 ? -3.0 : 3.0;
    m(i, 0) = c + s.Normal();
    m(i, 1) = s.Normal();
  }
  return {Make(m), HardLabelVector(y)};
}

Data Noisy(std::size_t n, std::size_t d, std::size_t C, std::uint64_t seed) {
  Stream s(seed);
  Matrix m(n, d);
  std::vector<ClassId> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) m(i, j) = s.Normal();
    y[i] = static_cast<ClassId>(s.UniformIndex(C));
  }
  return {Make(m), HardLabelVector(y)};
}

Matrix Probes(std::size_t n, std::size_t d, std::uint64_t seed) {
  Stream s(seed);
  Matrix m(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) m(i, j) = 2.0 * s.Normal();
  }
  return m;
}

std::shared_ptr<const DecisionTree> Leaf(std::vector<std::uint32_t> counts) {
  TreeNode node;
  node.class_counts = std::move(counts);
  return std::make_shared<const DecisionTree>(std::vector<TreeNode>{node}, 1, node.class_counts.size());
}

}  // namespace

TEST(DecisionTree, SingleClassIsConstant) {
  const auto X = Make(Probes(20, 3, 1));
  const auto t = FitDecisionTree(X, HardLabelVector(std::vector<ClassId>(20, 2)), 3, {}, 0);
  const auto P = Make(Probes(100, 3, 2));
  for (ClassId v : PredictHard(*t, P)) EXPECT_EQ(v, 2u);
  EXPECT_EQ(t->nodes().size(), 1u);
}

TEST(DecisionTree, TwoPointsSplitAtMidpoint) {
  const auto X = Make(Matrix::FromRows({{0.0}, {1.0}}));
  const auto t = FitDecisionTree(X, HardLabelVector({0, 1}), 2, {}, 0);
  ASSERT_EQ(t->nodes().size(), 3u);
  EXPECT_EQ(t->nodes()[0].feature, 0);
  EXPECT_EQ(t->nodes()[0].threshold, 0.5);
  EXPECT_EQ(PredictHard(*t, X), HardLabelVector({0, 1}));
}

TEST(DecisionTree, ChoosesLowestFeatureOnTiedGain) {
  // Both columns separate the classes perfectly.
  const auto X = Make(Matrix::FromRows({{0, 0}, {1, 1}}));
  const auto t = FitDecisionTree(X, HardLabelVector({0, 1}), 2, {}, 0);
  EXPECT_EQ(t->nodes()[0].feature, 0);
}

TEST(DecisionTree, RefitIsDeterministic) {
  const auto d = Noisy(200, 4, 3, 3);
  const TreeParams p{8, 1, 2};
  const auto a = FitDecisionTree(d.X, d.y, 3, p, 11);
  const auto b = FitDecisionTree(d.X, d.y, 3, p, 11);
  const auto P = Make(Probes(1000, 4, 4));
  EXPECT_EQ(PredictHard(*a, P), PredictHard(*b, P));
  EXPECT_EQ(a->ToJson(), b->ToJson());
}

TEST(DecisionTree, EmptyOrMismatchedInputThrows) {
  const auto X = Make(Matrix::FromRows({{0.0}, {1.0}}));
  EXPECT_THROW(FitDecisionTree(X, HardLabelVector({0}), 2, {}, 0), InvalidArgument);
}

TEST(DecisionTree, JsonRoundTrip) {
  const auto d = Noisy(100, 3, 3, 5);
  const auto t = FitDecisionTree(d.X, d.y, 3, {}, 0);
  const auto back = TruthFunctionFromJson(t->ToJson());
  const auto P = Make(Probes(500, 3, 6));
  EXPECT_EQ(PredictHard(*back, P), PredictHard(*t, P));
  EXPECT_EQ(PredictSoft(*back, P), PredictSoft(*t, P));
}

TEST(DecisionTree, UnlimitedDepthFitsTrainingSet) {
  const auto d = Noisy(150, 3, 4, 7);
  const auto t = FitDecisionTree(d.X, d.y, 4, {}, 0);
  EXPECT_EQ(PredictHard(*t, d.X), d.y);
}

TEST(RandomForest, SingleTreeNoBootstrapEqualsTree) {
  const auto d = Noisy(200, 4, 3, 8);
  ForestParams fp;
  fp.tree_count = 1;
  fp.bootstrap = false;
  fp.features_per_split = 4;
  fp.max_depth = kUnlimitedDepth;
  fp.seed = 5;
  const auto forest = FitRandomForest(d.X, d.y, 3, fp);
  const auto tree = FitDecisionTree(d.X, d.y, 3, {}, 0);
  const auto P = Make(Probes(1000, 4, 9));
  EXPECT_EQ(PredictHard(*forest, P), PredictHard(*tree, P));
  EXPECT_EQ(PredictSoft(*forest, P), PredictSoft(*tree, P));
}

TEST(RandomForest, SameSeedSameSoftPredictionsAcrossThreads) {
  const auto d = Noisy(300, 5, 3, 10);
  ForestParams fp;
  fp.tree_count = 20;
  fp.seed = 99;
  const auto a = FitRandomForest(d.X, d.y, 3, fp, 1);
  const auto b = FitRandomForest(d.X, d.y, 3, fp, 4);
  const auto P = Make(Probes(500, 5, 11));
  EXPECT_EQ(PredictSoft(*a, P, 1), PredictSoft(*b, P, 3));
}

TEST(RandomForest, SeparableBlobsHoldout) {
  const auto train = Blobs(200, 12);
  const auto test = Blobs(200, 13);
  ForestParams fp;
  fp.tree_count = 25;
  fp.seed = 1;
  const auto f = FitRandomForest(train.X, train.y, 2, fp);
  const auto acc = [&](const Data& d) {
    const auto p = PredictHard(*f, d.X);
    std::size_t ok = 0;
    for (std::size_t i = 0; i < d.y.size(); ++i) ok += p[i] == d.y[i];
    return static_cast<double>(ok) / static_cast<double>(d.y.size());
  };
  EXPECT_GE(acc(train), 0.95);
  EXPECT_GE(acc(test), 0.95);
}

TEST(RandomForest, TwoVotingTreesAverage) {
  const RandomForest f({Leaf({1, 0}), Leaf({0, 1})});
  const auto P = PredictSoft(f, Make(Matrix::FromRows({{0.3}})));
  EXPECT_EQ(P(0, 0), 0.5);
  EXPECT_EQ(P(0, 1), 0.5);
  EXPECT_EQ(PredictHard(f, Make(Matrix::FromRows({{0.3}})))[0], 0u);
}

TEST(RandomForest, SingleTreeRowsAreLeafFrequencies) {
  // x = 0..9; depth one lets the tree isolate only part of the structure.
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 10; ++i) rows.push_back({static_cast<double>(i)});
  const HardLabelVector y({0, 0, 0, 1, 0, 1, 1, 2, 1, 1});
  const auto X = Make(Matrix::FromRows(rows));
  ForestParams fp;
  fp.tree_count = 1;
  fp.bootstrap = false;
  fp.max_depth = 1;
  const auto f = FitRandomForest(X, y, 3, fp);
  const auto& tree = *f->trees().front();
  const auto& root = tree.nodes()[0];
  ASSERT_FALSE(root.is_leaf());
  const auto P = PredictSoft(*f, X);
  for (std::size_t i = 0; i < 10; ++i) {
    // Oracle: class frequencies of the training points on the same side of the root split.
    const bool left = rows[i][0] <= root.threshold;
    std::vector<double> freq(3, 0.0);
    double n = 0.0;
    for (std::size_t k = 0; k < 10; ++k) {
      if ((rows[k][0] <= root.threshold) == left) {
        freq[y[k]] += 1.0;
        n += 1.0;
      }
    }
    for (std::size_t c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(P(i, c), freq[c] / n);
  }
}

TEST(RandomForest, HardEqualsArgmaxOfSoft) {
  const auto d = Noisy(200, 4, 4, 14);
  ForestParams fp;
  fp.tree_count = 15;
  const auto f = FitRandomForest(d.X, d.y, 4, fp);
  const auto P = Make(Probes(1000, 4, 15));
  const auto soft = PredictSoft(*f, P);
  const auto hard = PredictHard(*f, P);
  for (std::size_t i = 0; i < soft.rows(); ++i) {
    EXPECT_EQ(hard[i], ArgmaxLowest(soft.row(i)));
    double sum = 0.0;
    for (double v : soft.row(i)) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(RandomForest, DefaultsMatchDocumentedValues) {
  const ForestParams fp;
  EXPECT_EQ(fp.tree_count, 100u);
  EXPECT_EQ(fp.max_depth, 16u);
  EXPECT_EQ(fp.min_samples_leaf, 1u);
  EXPECT_FALSE(fp.features_per_split);
  EXPECT_TRUE(fp.bootstrap);
}

TEST(Purity, RepeatedEvaluationIsBitIdentical) {
  const auto d = Noisy(100, 3, 3, 16);
  ForestParams fp;
  fp.tree_count = 10;
  const auto f = FitRandomForest(d.X, d.y, 3, fp);
  const auto row = d.X.row(17);
  std::vector<double> first(3), again(3);
  f->PredictSoftRow(row, first);
  const ClassId c = f->PredictRow(row);
  for (int k = 0; k < 1000; ++k) {
    f->PredictSoftRow(row, again);
    ASSERT_EQ(again, first);
    ASSERT_EQ(f->PredictRow(row), c);
  }
}

TEST(ClosedForm, LinearThreshold) {
  const LinearThresholdFunction f({1, 1}, 1.0);
  const std::vector<double> row = {0.3, 0.8};
  EXPECT_EQ(f.PredictRow(row), 1u);
  EXPECT_EQ(f.PredictRow(row), 1u);
  EXPECT_EQ(f.PredictRow(std::vector<double>{0.3, 0.7}), 0u);
  EXPECT_THROW(PredictSoft(f, Make(Matrix::FromRows({{0.3, 0.8}}))), UnsupportedOperation);
  EXPECT_THROW(FeatureImportances(f), UnsupportedOperation);
  EXPECT_THROW(PredictHard(f, Make(Matrix::FromRows({{0.3}}))), InvalidArgument);
}

TEST(ClosedForm, LinearArgmaxTiesToLowest) {
  const LinearArgmaxFunction f(Matrix::FromRows({{1, 0}, {0, 1}}), {0, 0});
  EXPECT_EQ(f.PredictRow(std::vector<double>{0.5, 0.5}), 0u);
  EXPECT_EQ(f.PredictRow(std::vector<double>{0.4, 0.5}), 1u);
  const auto back = TruthFunctionFromJson(f.ToJson());
  EXPECT_EQ(back->PredictRow(std::vector<double>{0.4, 0.5}), 1u);
}

TEST(Importances, OnlyPredictiveFeatureDominates) {
  Stream s(17);
  Matrix m(500, 2);
  std::vector<ClassId> y(500);
  for (std::size_t i = 0; i < 500; ++i) {
    m(i, 0) = s.Normal();
    m(i, 1) = s.Normal();
    y[i] = m(i, 0) > 0 ? 1 : 0;
  }
  ForestParams fp;
  fp.tree_count = 30;
  const auto f = FitRandomForest(Make(m), HardLabelVector(y), 2, fp);
  const auto imp = FeatureImportances(*f);
  EXPECT_GT(imp[0], 0.9);
  EXPECT_NEAR(imp[0] + imp[1], 1.0, 1e-9);
}

TEST(Importances, ConstantLabelsGiveUniform) {
  const auto X = Make(Probes(30, 4, 18));
  const auto f = FitRandomForest(X, HardLabelVector(std::vector<ClassId>(30, 1)), 2, ForestParams{});
  for (double v : FeatureImportances(*f)) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(Importances, NonnegativeAndNormalized) {
  const auto d = Noisy(200, 6, 3, 19);
  ForestParams fp;
  fp.tree_count = 10;
  const auto imp = FeatureImportances(*FitRandomForest(d.X, d.y, 3, fp));
  double sum = 0.0;
  for (double v : imp) {
    EXPECT_GE(v, 0.0);
    sum += v;
  }
  EXPECT_NEAR(sum, 1.0, 1e-9);
}

TEST(DecisionRule, ArgmaxExamples) {
  EXPECT_EQ(ApplyDecisionRule(SoftLabelMatrix(Matrix::FromRows({{0.2, 0.8}})), DecisionRule::Argmax(), Stream(1))[0], 1u);
  EXPECT_EQ(ApplyDecisionRule(SoftLabelMatrix(Matrix::FromRows({{0.5, 0.5}})), DecisionRule::Argmax(), Stream(1))[0], 0u);
  EXPECT_EQ(DecisionRule::FromName("sample").kind, DecisionRuleKind::kSampleProportional);
  EXPECT_THROW(DecisionRule::FromName("median"), InvalidArgument);
}

TEST(DecisionRule, SampledFrequencyWithinThreeSigma) {
  const std::size_t n = 100000;
  Matrix m(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    m(i, 0) = 0.2;
    m(i, 1) = 0.8;
  }
  const auto y = ApplyDecisionRule(SoftLabelMatrix(m), DecisionRule::SampleProportional(), Stream(21));
  double ones = 0.0;
  for (ClassId v : y) ones += v;
  // 3 * sqrt(0.8 * 0.2 / 1e5) = 0.0038
  EXPECT_NEAR(ones / n, 0.8, 0.004);
}

TEST(DecisionRule, SampleNeverPicksZeroProbabilityClass) {
  const std::vector<double> p = {0.0, 0.5, 0.0, 0.5, 0.0};
  Stream s(22);
  for (int k = 0; k < 10000; ++k) {
    const auto c = SampleCategorical(p, s.Uniform());
    ASSERT_TRUE(c == 1 || c == 3);
  }
  EXPECT_EQ(SampleCategorical(p, 0.0), 1u);
  EXPECT_EQ(SampleCategorical(p, std::nextafter(1.0, 0.0)), 3u);
}

TEST(DiscretizedModel, ArgmaxOfSoftModel) {
  const auto d = Noisy(100, 3, 3, 23);
  ForestParams fp;
  fp.tree_count = 5;
  const auto f = FitRandomForest(d.X, d.y, 3, fp);
  const DiscretizedModel g(f);
  const auto P = Make(Probes(200, 3, 24));
  EXPECT_EQ(PredictHard(g, P), PredictHard(*f, P));
  EXPECT_TRUE(g.tree_based());
  EXPECT_EQ(PredictHard(*TruthFunctionFromJson(g.ToJson()), P), PredictHard(g, P));
}

TEST(Annotator, IdentityAnnotatorGivesOneHot) {
  const auto d = Noisy(50, 2, 2, 25);
  const auto f = std::make_shared<const LinearThresholdFunction>(std::vector<double>{1, 1}, 0.0);
  const auto y = PredictHard(*f, d.X);
  const Annotator a({f, {0, 1}, std::nullopt});
  EXPECT_EQ(a.Annotate(d.X, Stream(1)), OneHot(y, 2));
}

TEST(Annotator, InvalidVisibleSets) {
  const auto f = std::make_shared<const LinearThresholdFunction>(std::vector<double>{1, 1}, 0.0);
  EXPECT_THROW(Annotator({f, {}, std::nullopt}), InvalidArgument);
  EXPECT_THROW(Annotator({f, {0}, std::nullopt}), InvalidArgument);
}

TEST(Annotator, CrowdAverageIsValid) {
  const auto d = Noisy(200, 3, 3, 26);
  ForestParams fp;
  fp.tree_count = 10;
  const std::vector<std::size_t> v1 = {0, 1}, v2 = {2};
  const auto f1 = FitRandomForest(d.X.SelectColumns(v1), d.y, 3, fp);
  const auto f2 = FitRandomForest(d.X.SelectColumns(v2), d.y, 3, fp);
  const std::vector<SoftLabelMatrix> outs = {Annotator({f1, v1, std::nullopt}).Annotate(d.X, Stream(1)),
                                             Annotator({f2, v2, ConfidenceNoise{0.5}}).Annotate(d.X, Stream(2))};
  const auto avg = AverageSoftLabels(outs);
  EXPECT_TRUE(Validate(avg).ok());
  EXPECT_DOUBLE_EQ(avg(3, 1), 0.5 * (outs[0](3, 1) + outs[1](3, 1)));
}

TEST(Annotator, ConfidenceNoiseKeepsZerosAndIsSeeded) {
  const auto f = std::make_shared<const LinearThresholdFunction>(std::vector<double>{1}, 0.0);
  const auto X = Make(Probes(20, 1, 27));
  const Annotator a({f, {0}, ConfidenceNoise{0.3}});
  const auto P = a.Annotate(X, Stream(5));
  EXPECT_EQ(P, a.Annotate(X, Stream(5)));
  // Hard-only models report one-hot vectors; jitter cannot move mass to a zero.
  const auto y = PredictHard(*f, X);
  for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ(P(i, 1 - y[i]), 0.0);
}
