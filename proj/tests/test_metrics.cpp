#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "synlabel/errors.hpp"
#include "synlabel/metrics.hpp"
#include "synlabel/noise.hpp"
#include "synlabel/random.hpp"

using namespace synlabel;

namespace {

std::vector<double> RandomSimplex(Stream& s, std::size_t C) {
  // Normalized exponentials: uniform on the simplex.
  std::vector<double> p(C);
  double total = 0.0;
  for (double& v : p) {
    v = -std::log(1.0 - s.Uniform());
    total += v;
  }
  for (double& v : p) v /= total;
  return p;
}

SoftLabelMatrix Rows(const std::vector<std::vector<double>>& rows) { return SoftLabelMatrix(Matrix::FromRows(rows)); }

}  // namespace

TEST(Tvd, Examples) {
  const std::vector<double> p = {0.2, 0.3, 0.5};
  EXPECT_EQ(Tvd(p, p), 0.0);
  EXPECT_DOUBLE_EQ(Tvd(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 1.0);
  // 0.5 * (|0.5 - 0.75| + |0.5 - 0.25|)
  EXPECT_DOUBLE_EQ(Tvd(std::vector<double>{0.5, 0.5}, std::vector<double>{0.75, 0.25}), 0.25);
}

TEST(Tvd, LengthMismatchThrows) {
  EXPECT_THROW(Tvd(std::vector<double>{1.0}, std::vector<double>{0.5, 0.5}), InvalidArgument);
}

TEST(Tvd, MetricPropertiesOnRandomSimplexPoints) {
  Stream s(1);
  for (int t = 0; t < 2000; ++t) {
    const std::size_t C = 2 + t % 5;
    const auto a = RandomSimplex(s, C), b = RandomSimplex(s, C), c = RandomSimplex(s, C);
    const double ab = Tvd(a, b);
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
    EXPECT_EQ(ab, Tvd(b, a));
    EXPECT_LE(Tvd(a, c), ab + Tvd(b, c) + 1e-15);
    EXPECT_LT(Tvd(a, a), 1e-12);
  }
}

TEST(MeanTvd, Examples) {
  const auto P = Rows({{1, 0}, {0, 1}});
  EXPECT_EQ(MeanTvd(P, P), 0.0);
  const auto Q = Rows({{1, 0}, {1, 0}});
  EXPECT_DOUBLE_EQ(MeanTvd(P, Q), 0.5);
  EXPECT_THROW(MeanTvd(P, Rows({{1, 0}})), InvalidArgument);
}

TEST(MeanTvd, OneHotAgainstNcarEqualsRate) {
  const HardLabelVector y({0, 1, 2, 3, 2, 1});
  const auto P = OneHot(y, 4);
  for (double r : {0.0, 0.15, 0.3, 0.75}) {
    EXPECT_NEAR(MeanTvd(P, ApplyToSoft(P, NcarMatrix(4, r))), r, 1e-12);
  }
}

TEST(MeanTvd, OneHotReducesToDisagreement) {
  Stream s(4);
  std::vector<ClassId> a(300), b(300);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = static_cast<ClassId>(s.UniformIndex(3));
    b[i] = static_cast<ClassId>(s.UniformIndex(3));
  }
  const HardLabelVector ya(a), yb(b);
  EXPECT_EQ(MeanTvd(OneHot(ya, 3), OneHot(yb, 3)), DisagreementRate(ya, yb));
}

TEST(Entropy, Examples) {
  EXPECT_EQ(Entropy(std::vector<double>{0, 1, 0}), 0.0);
  EXPECT_NEAR(Entropy(std::vector<double>{0.25, 0.25, 0.25, 0.25}), 1.386294361119891, 1e-12);
  // -(0.5 ln 0.5 + 2 * 0.25 ln 0.25) = 0.5 ln 2 + ln 2 = 1.5 ln 2
  EXPECT_NEAR(Entropy(std::vector<double>{0.5, 0.25, 0.25}), 1.5 * std::log(2.0), 1e-12);
  EXPECT_NEAR(Entropy(std::vector<double>{0.5, 0.25, 0.25}), 1.039721, 1e-6);
}

TEST(Entropy, BelowLogCExceptAtUniform) {
  Stream s(6);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t C = 2 + t % 4;
    const auto p = RandomSimplex(s, C);
    EXPECT_LT(Entropy(p), std::log(static_cast<double>(C)));
    EXPECT_GE(Entropy(p), 0.0);
  }
}

TEST(Entropy, NcarMixingNeverDecreasesEntropy) {
  Stream s(8);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t C = 2 + t % 4;
    const auto p = RandomSimplex(s, C);
    const double r = s.Uniform();
    const auto q = ApplyToDistribution(p, NcarMatrix(C, r).matrix());
    EXPECT_GE(Entropy(q), Entropy(p) - 1e-12);
  }
}

TEST(MeanEntropy, Examples) {
  EXPECT_EQ(MeanEntropy(Rows({{1, 0}, {0, 1}})), 0.0);
  EXPECT_NEAR(MeanEntropy(Rows({{0.25, 0.25, 0.25, 0.25}, {0.25, 0.25, 0.25, 0.25}})), std::log(4.0), 1e-12);
  EXPECT_NEAR(MeanEntropy(Rows({{1, 0}, {0.5, 0.5}})), std::log(2.0) / 2.0, 1e-12);
}

TEST(DisagreementRate, Examples) {
  const HardLabelVector a({0, 1, 2, 3});
  EXPECT_EQ(DisagreementRate(a, a), 0.0);
  EXPECT_EQ(DisagreementRate(a, HardLabelVector({1, 2, 3, 0})), 1.0);
  EXPECT_EQ(DisagreementRate(a, HardLabelVector({0, 1, 2, 0})), 0.25);
  EXPECT_THROW(DisagreementRate(a, HardLabelVector({0})), InvalidArgument);
}

TEST(UncertaintyReport, JsonRecordsUnitAndAbsentFields) {
  UncertaintyReport r;
  r.mean_entropy = 0.5;
  r.named["delta1"] = 0.1;
  const auto j = r.ToJson();
  EXPECT_EQ(j["entropy_unit"], "nats");
  EXPECT_TRUE(j["mean_tvd"].is_null());
  EXPECT_EQ(j["mean_entropy"], 0.5);
  EXPECT_EQ(j["named"]["delta1"], 0.1);
}
