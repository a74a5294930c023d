#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "synlabel/errors.hpp"
#include "synlabel/random.hpp"
#include "synlabel/samplers.hpp"

using namespace synlabel;

namespace {

FeatureMatrix Make(const Matrix& m) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < m.cols(); ++j) names.push_back("x" + std::to_string(j));
  return FeatureMatrix(names, m);
}

// Column 0 kept, column 1 = 2 * x0 + 1 hidden.
FeatureMatrix Linked(std::size_t n, std::uint64_t seed) {
  Stream s(seed);
  Matrix m(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    m(i, 0) = s.Normal();
    m(i, 1) = 2.0 * m(i, 0) + 1.0;
  }
  return Make(m);
}

double MeanSquaredError(const HiddenFeatureSampler& s, const FeatureMatrix& X, std::size_t draws) {
  double total = 0.0;
  const Stream root(3);
  for (std::size_t i = 0; i < X.rows(); ++i) {
    const double context = X(i, 0);
    const auto out = s.Sample(std::vector<double>{context}, std::nullopt, draws, root.Derive(i));
    for (std::size_t j = 0; j < draws; ++j) total += std::pow(out(j, 0) - (2.0 * context + 1.0), 2);
  }
  return total / static_cast<double>(X.rows() * draws);
}

}  // namespace

TEST(SamplerKind, Names) {
  for (auto k : AllSamplerKinds()) EXPECT_EQ(ParseSamplerKind(SamplerKindName(k)), k);
  EXPECT_EQ(AllSamplerKinds().size(), 5u);
  EXPECT_EQ(SamplerKindName(SamplerKind::kMicePmmLabel), "mice_pmm_label");
  EXPECT_THROW(ParseSamplerKind("copula"), InvalidArgument);
}

TEST(UniformBox, StoresObservedRange) {
  const auto X = Make(Matrix::FromRows({{0, 2}, {5, 1}, {9, 3}}));
  const auto s = FitSampler(SamplerKind::kUniformBox, X, FeaturePartition::Hiding(2, {1}), nullptr, 0);
  const auto& st = std::get<UniformBoxState>(s.state());
  EXPECT_EQ(st.low, std::vector<double>{1.0});
  EXPECT_EQ(st.high, std::vector<double>{3.0});
  EXPECT_FALSE(s.conditional());
}

TEST(UniformBox, MeanWithinThreeSigma) {
  const auto X = Make(Matrix::FromRows({{0, 0}, {1, 1}}));
  const auto s = FitSampler(SamplerKind::kUniformBox, X, FeaturePartition::Hiding(2, {1}), nullptr, 0);
  const std::size_t n = 100000;
  const auto out = s.Sample(std::vector<double>{0.0}, std::nullopt, n, Stream(4));
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    ASSERT_GE(out(j, 0), 0.0);
    ASSERT_LE(out(j, 0), 1.0);
    sum += out(j, 0);
  }
  // 3 * sqrt(1/12 / 1e5) = 0.0027
  EXPECT_NEAR(sum / n, 0.5, 0.003);
}

TEST(EmpiricalJoint, DrawsAreReferenceTuples) {
  Stream g(5);
  Matrix m(5, 3);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 3; ++j) m(i, j) = g.Normal();
  }
  const auto X = Make(m);
  const auto s = FitSampler(SamplerKind::kEmpiricalJoint, X, FeaturePartition::Hiding(3, {2, 0}), nullptr, 0);
  std::set<std::pair<double, double>> ref;
  for (std::size_t i = 0; i < 5; ++i) ref.insert({m(i, 2), m(i, 0)});
  const auto out = s.Sample(std::vector<double>{0.0}, std::nullopt, 1000, Stream(6));
  ASSERT_EQ(out.cols(), 2u);
  std::set<std::pair<double, double>> seen;
  for (std::size_t j = 0; j < out.rows(); ++j) {
    ASSERT_TRUE(ref.count({out(j, 0), out(j, 1)}));
    seen.insert({out(j, 0), out(j, 1)});
  }
  EXPECT_EQ(seen.size(), 5u);
}

TEST(GaussianKde, SilvermanOneDimension) {
  Stream g(7);
  Matrix m(1000, 1);
  for (std::size_t i = 0; i < 1000; ++i) m(i, 0) = g.Normal();
  double mean = 0.0;
  for (std::size_t i = 0; i < 1000; ++i) mean += m(i, 0);
  mean /= 1000.0;
  double ss = 0.0;
  for (std::size_t i = 0; i < 1000; ++i) ss += (m(i, 0) - mean) * (m(i, 0) - mean);
  const double sd = std::sqrt(ss / 999.0);
  const auto h = SilvermanBandwidths(m);
  ASSERT_EQ(h.size(), 1u);
  EXPECT_NEAR(h[0], 0.266, 0.03);
  EXPECT_NEAR(h[0], 1.06 * sd * std::pow(1000.0, -0.2), 1e-3);
}

TEST(GaussianKde, ZeroVarianceUsesFloor) {
  const auto h = SilvermanBandwidths(Matrix::FromRows({{1.0}, {1.0}, {1.0}}));
  EXPECT_EQ(h[0], kBandwidthFloor);
}

TEST(GaussianKde, TinyBandwidthDegeneratesToEmpirical) {
  Stream g(8);
  Matrix m(30, 2);
  for (std::size_t i = 0; i < 30; ++i) {
    m(i, 0) = g.Normal();
    m(i, 1) = g.Normal();
  }
  const auto X = Make(m);
  const auto part = FeaturePartition::Hiding(2, {1});
  SamplerOptions opt;
  opt.kde_bandwidth = std::vector<double>{1e-12};
  const auto kde = FitSampler(SamplerKind::kGaussianKde, X, part, nullptr, 0, opt);
  const auto emp = FitSampler(SamplerKind::kEmpiricalJoint, X, part, nullptr, 0);
  const auto a = kde.Sample(std::vector<double>{0.0}, std::nullopt, 500, Stream(9));
  const auto b = emp.Sample(std::vector<double>{0.0}, std::nullopt, 500, Stream(9));
  std::set<double> ref;
  for (std::size_t i = 0; i < 30; ++i) ref.insert(m(i, 1));
  for (std::size_t j = 0; j < 500; ++j) {
    EXPECT_NEAR(a(j, 0), b(j, 0), 1e-9);
    const auto it = ref.lower_bound(a(j, 0) - 1e-9);
    ASSERT_TRUE(it != ref.end() && std::abs(*it - a(j, 0)) < 1e-9);
  }
}

TEST(GaussianKde, SampleSpreadMatchesBandwidth) {
  // One reference row: draws are Normal(ref, h).
  const auto X = Make(Matrix::FromRows({{0, 3}, {1, 3}}));
  SamplerOptions opt;
  opt.kde_bandwidth = std::vector<double>{0.5};
  const auto s = FitSampler(SamplerKind::kGaussianKde, X, FeaturePartition::Hiding(2, {1}), nullptr, 0, opt);
  const std::size_t n = 100000;
  const auto out = s.Sample(std::vector<double>{0.0}, std::nullopt, n, Stream(10));
  double sum = 0.0, sq = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    sum += out(j, 0);
    sq += (out(j, 0) - 3.0) * (out(j, 0) - 3.0);
  }
  EXPECT_NEAR(sum / n, 3.0, 3.0 * 0.5 / std::sqrt(n));
  EXPECT_NEAR(sq / n, 0.25, 3.0 * 0.25 * std::sqrt(2.0 / n));
}

TEST(Samplers, DeterministicAndCountZero) {
  const auto X = Linked(100, 11);
  const auto part = FeaturePartition::Hiding(2, {1});
  HardLabelVector y(std::vector<ClassId>(100, 0));
  for (auto k : AllSamplerKinds()) {
    const auto s = FitSampler(k, X, part, &y, 12);
    const std::optional<ClassId> label = s.needs_label() ? std::optional<ClassId>(0) : std::nullopt;
    const auto a = s.Sample(std::vector<double>{0.3}, label, 50, Stream(13));
    const auto b = s.Sample(std::vector<double>{0.3}, label, 50, Stream(13));
    EXPECT_EQ(a, b) << SamplerKindName(k);
    EXPECT_EQ(a.rows(), 50u);
    EXPECT_EQ(a.cols(), 1u);
    EXPECT_EQ(s.Sample(std::vector<double>{0.3}, label, 0, Stream(13)).rows(), 0u);
    EXPECT_EQ(s.Descriptor()["kind"], SamplerKindName(k));
  }
}

TEST(Samplers, UnconditionalIgnoreContext) {
  const auto X = Linked(100, 14);
  const auto part = FeaturePartition::Hiding(2, {1});
  for (auto k : {SamplerKind::kUniformBox, SamplerKind::kEmpiricalJoint, SamplerKind::kGaussianKde}) {
    const auto s = FitSampler(k, X, part, nullptr, 0);
    EXPECT_EQ(s.Sample(std::vector<double>{-2.0}, std::nullopt, 30, Stream(15)),
              s.Sample(std::vector<double>{2.0}, std::nullopt, 30, Stream(15)));
  }
}

TEST(Samplers, LabelRequiredForLabelVariant) {
  const auto X = Linked(20, 16);
  EXPECT_THROW(FitSampler(SamplerKind::kMicePmmLabel, X, FeaturePartition::Hiding(2, {1}), nullptr, 0), InvalidArgument);
  const HardLabelVector y({0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1});
  const auto s = FitSampler(SamplerKind::kMicePmmLabel, X, FeaturePartition::Hiding(2, {1}), &y, 0);
  EXPECT_TRUE(s.conditional());
  EXPECT_THROW(s.Sample(std::vector<double>{0.0}, std::nullopt, 1, Stream(1)), InvalidArgument);
}

TEST(MicePmm, DrawsStayNearContext) {
  const auto X = Linked(500, 17);
  const auto part = FeaturePartition::Hiding(2, {1});
  const auto mice = FitSampler(SamplerKind::kMicePmm, X, part, nullptr, 0);
  const auto emp = FitSampler(SamplerKind::kEmpiricalJoint, X, part, nullptr, 0);
  const double mice_err = MeanSquaredError(mice, X, 20);
  const double emp_err = MeanSquaredError(emp, X, 20);
  // Marginal draws miss by about 2 * sqrt(2) standard deviations.
  EXPECT_LT(mice_err, emp_err);
  EXPECT_LT(mice_err, 0.05 * emp_err);
  // The hidden value is donated by one of the k rows nearest in prediction.
  const auto out = mice.Sample(std::vector<double>{0.0}, std::nullopt, 200, Stream(18));
  std::vector<double> gaps;
  for (std::size_t i = 0; i < 500; ++i) gaps.push_back(std::abs(X(i, 1) - 1.0));
  std::sort(gaps.begin(), gaps.end());
  for (std::size_t j = 0; j < 200; ++j) EXPECT_LE(std::abs(out(j, 0) - 1.0), gaps[4] + 1e-9);
}

TEST(MicePmm, LabelConditioningSeparatesClasses) {
  // Hidden column depends only on the label.
  Stream g(19);
  Matrix m(400, 2);
  std::vector<ClassId> y(400);
  for (std::size_t i = 0; i < 400; ++i) {
    y[i] = static_cast<ClassId>(i % 2);
    m(i, 0) = g.Normal();
    m(i, 1) = (y[i] == 0 ? -5.0 : 5.0) + 0.1 * g.Normal();
  }
  const HardLabelVector labels(y);
  const auto s = FitSampler(SamplerKind::kMicePmmLabel, Make(m), FeaturePartition::Hiding(2, {1}), &labels, 0);
  const auto a = s.Sample(std::vector<double>{0.0}, 0, 100, Stream(20));
  const auto b = s.Sample(std::vector<double>{0.0}, 1, 100, Stream(20));
  for (std::size_t j = 0; j < 100; ++j) {
    EXPECT_LT(a(j, 0), 0.0);
    EXPECT_GT(b(j, 0), 0.0);
  }
}

TEST(MicePmm, SeveralHiddenColumns) {
  Stream g(21);
  Matrix m(300, 4);
  for (std::size_t i = 0; i < 300; ++i) {
    m(i, 0) = g.Normal();
    m(i, 1) = g.Normal();
    m(i, 2) = m(i, 0) + m(i, 1);
    m(i, 3) = m(i, 0) - m(i, 1);
  }
  const auto s = FitSampler(SamplerKind::kMicePmm, Make(m), FeaturePartition::Hiding(4, {2, 3}), nullptr, 0);
  const auto out = s.Sample(std::vector<double>{1.0, 0.5}, std::nullopt, 100, Stream(22));
  ASSERT_EQ(out.cols(), 2u);
  double e2 = 0.0, e3 = 0.0;
  for (std::size_t j = 0; j < 100; ++j) {
    e2 += std::abs(out(j, 0) - 1.5);
    e3 += std::abs(out(j, 1) - 0.5);
  }
  EXPECT_LT(e2 / 100, 0.3);
  EXPECT_LT(e3 / 100, 0.3);
}

TEST(Samplers, PartitionMismatchRejected) {
  const auto X = Linked(10, 23);
  EXPECT_THROW(FitSampler(SamplerKind::kGaussianKde, X, FeaturePartition::Hiding(3, {1}), nullptr, 0), InvalidArgument);
}
