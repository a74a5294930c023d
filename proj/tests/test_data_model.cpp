#include <gtest/gtest.h>

#include <memory>

#include "synlabel/data_model.hpp"
#include "synlabel/errors.hpp"
#include "synlabel/truth_functions.hpp"

using namespace synlabel;

namespace {

FeatureMatrix Features(const std::vector<std::vector<double>>& rows) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < rows.front().size(); ++j) names.push_back("x" + std::to_string(j));
  return FeatureMatrix(names, Matrix::FromRows(rows));
}

TruthFunctionPtr SumAboveOne() { return std::make_shared<const LinearThresholdFunction>(std::vector<double>{1, 1}, 1.0); }

bool Mentions(const ValidationReport& r, const std::string& text) {
  for (const auto& v : r.violations()) {
    if (v.message.find(text) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST(LabelSchema, Basics) {
  const LabelSchema s({"cat", "dog"});
  EXPECT_EQ(s.class_count(), 2u);
  EXPECT_EQ(s.IndexOf("dog"), 1u);
  EXPECT_FALSE(s.IndexOf("cow"));
  EXPECT_EQ(LabelSchema::WithClassCount(3).class_names(), (std::vector<std::string>{"0", "1", "2"}));
  EXPECT_THROW(LabelSchema({"a"}), InvalidArgument);
  EXPECT_THROW(LabelSchema({"a", "a"}), InvalidArgument);
}

TEST(FeatureMatrix, RejectsBadInput) {
  EXPECT_THROW(FeatureMatrix({"a", "a"}, Matrix(1, 2)), InvalidArgument);
  EXPECT_THROW(FeatureMatrix({"a"}, Matrix(1, 2)), InvalidArgument);
  EXPECT_THROW(FeatureMatrix({"a"}, Matrix(0, 1)), InvalidArgument);
  EXPECT_THROW(FeatureMatrix({"a"}, Matrix(1, 1, std::numeric_limits<double>::quiet_NaN())), InvalidArgument);
}

TEST(FeatureMatrix, SelectColumns) {
  const auto X = Features({{1, 2, 3}, {4, 5, 6}});
  const std::vector<std::size_t> cols = {2, 0};
  const auto S = X.SelectColumns(cols);
  EXPECT_EQ(S.column_names(), (std::vector<std::string>{"x2", "x0"}));
  EXPECT_EQ(S(1, 0), 6.0);
  EXPECT_EQ(S(1, 1), 4.0);
  EXPECT_EQ(X.ColumnIndex("x1"), 1u);
}

TEST(FeaturePartition, HidingComplement) {
  const auto p = FeaturePartition::Hiding(5, {3, 1});
  EXPECT_EQ(p.kept(), (std::vector<std::size_t>{0, 2, 4}));
  EXPECT_EQ(p.hidden(), (std::vector<std::size_t>{3, 1}));
  EXPECT_EQ(FeaturePartition::FromJson(p.ToJson()), p);
  EXPECT_THROW(FeaturePartition({0, 1}, {1}), InvalidArgument);
  EXPECT_THROW(FeaturePartition({0, 2}, {}), InvalidArgument);
}

TEST(Validate, WellFormedSoftMatrixPasses) {
  const SoftLabelMatrix P(Matrix::FromRows({{0.25, 0.25, 0.25, 0.25}, {1, 0, 0, 0}, {0.1, 0.2, 0.3, 0.4}}));
  EXPECT_TRUE(Validate(P).ok());
}

TEST(Validate, SoftRowSumViolationNamesRow) {
  const SoftLabelMatrix P(Matrix::FromRows({{1, 0}, {0.5, 0.5}, {0, 1}, {0.49, 0.49}}));
  const auto r = Validate(P);
  ASSERT_EQ(r.violations().size(), 1u);
  EXPECT_EQ(r.violations()[0].message, "row 3 sum 0.98 ∉ 1±1e-9");
  EXPECT_EQ(r.violations()[0].row, 3u);
}

TEST(Validate, SoftRowWithinToleranceAccepted) {
  const SoftLabelMatrix P(Matrix::FromRows({{0.5 + 4e-10, 0.5}}));
  EXPECT_TRUE(Validate(P).ok());
  const SoftLabelMatrix Q(Matrix::FromRows({{0.5 + 2e-9, 0.5}}));
  EXPECT_FALSE(Validate(Q).ok());
}

TEST(Validate, NegativeProbabilityReported) {
  const SoftLabelMatrix P(Matrix::FromRows({{1.2, -0.2}}));
  EXPECT_FALSE(Validate(P).ok());
}

TEST(Validate, HardLabelOutOfRange) {
  const auto r = Validate(HardLabelVector({0, 4, 1}), LabelSchema::WithClassCount(4));
  ASSERT_EQ(r.violations().size(), 1u);
  EXPECT_TRUE(Mentions(r, "out of range"));
  EXPECT_EQ(r.violations()[0].row, 1u);
}

TEST(Validate, GroundTruthMismatchDetected) {
  const auto X = Features({{0.2, 0.2}, {0.9, 0.9}});
  const GroundTruthDataset good(X, HardLabelVector({0, 1}), SumAboveOne(), LabelSchema::WithClassCount(2));
  EXPECT_TRUE(Validate(good).ok());
  const GroundTruthDataset bad(X, HardLabelVector({1, 1}), SumAboveOne(), LabelSchema::WithClassCount(2));
  const auto r = Validate(bad);
  EXPECT_FALSE(r.ok());
  EXPECT_EQ(r.violations()[0].row, 0u);
}

TEST(GroundTruthDataset, FromTruthFunctionLabels) {
  const auto gt = GroundTruthDataset::FromTruthFunction(Features({{0.2, 0.2}, {0.9, 0.9}, {0.5, 0.6}}), SumAboveOne(),
                                                        LabelSchema::WithClassCount(2));
  EXPECT_EQ(gt.labels(), HardLabelVector({0, 1, 1}));
  EXPECT_TRUE(Validate(AnyDataset(gt)).ok());
  EXPECT_THROW(GroundTruthDataset::FromTruthFunction(Features({{1, 2, 3}}), SumAboveOne(), LabelSchema::WithClassCount(2)),
               InvalidArgument);
}

TEST(ObservedDatasets, ProvenanceMandatory) {
  const auto X = Features({{1, 2}});
  const ObservedHardDataset oh(X, HardLabelVector({0}), LabelSchema::WithClassCount(2), {});
  EXPECT_FALSE(Validate(oh).ok());
  const auto tagged = oh.WithRecord({"ingest", {}, std::nullopt});
  EXPECT_TRUE(Validate(tagged).ok());
  EXPECT_EQ(oh.provenance().size(), 0u);
  const ObservedSoftDataset os(X, SoftLabelMatrix(Matrix::FromRows({{0.5, 0.5}})), LabelSchema::WithClassCount(2),
                               {{"x", {}, 3}});
  EXPECT_TRUE(Validate(os).ok());
}

TEST(OneHot, Examples) {
  EXPECT_EQ(OneHot(HardLabelVector({0, 2}), 3).probs(), Matrix::FromRows({{1, 0, 0}, {0, 0, 1}}));
  EXPECT_EQ(OneHot(HardLabelVector({1}), 2).probs(), Matrix::FromRows({{0, 1}}));
  EXPECT_THROW(OneHot(HardLabelVector({3}), 3), InvalidArgument);
}

TEST(OneHot, ArgmaxRoundTripAndValid) {
  const HardLabelVector y({3, 0, 1, 2, 2, 0});
  const auto P = OneHot(y, LabelSchema::WithClassCount(4));
  EXPECT_TRUE(Validate(P).ok());
  EXPECT_EQ(ApplyDecisionRule(P, DecisionRule::Argmax(), Stream(0)), y);
}

TEST(SoftLabelMatrix, RenormalizedOnlyOnRequest) {
  const SoftLabelMatrix P(Matrix::FromRows({{0.49, 0.49}}));
  EXPECT_EQ(P(0, 0), 0.49);
  const auto Q = P.Renormalized();
  EXPECT_DOUBLE_EQ(Q(0, 0), 0.5);
  EXPECT_TRUE(Validate(Q).ok());
}

TEST(ProvenanceRecord, JsonRoundTrip) {
  const ProvenanceRecord r{"noise", {{"rate", 0.25}}, 18446744073709551615ull};
  const auto back = ProvenanceRecord::FromJson(r.ToJson());
  EXPECT_EQ(back.name, "noise");
  EXPECT_EQ(back.parameters, r.parameters);
  EXPECT_EQ(back.seed, r.seed);
}
