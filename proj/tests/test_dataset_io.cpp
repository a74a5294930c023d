#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <memory>

#include "synlabel/data_model.hpp"
#include "synlabel/dataset_io.hpp"
#include "synlabel/errors.hpp"
#include "synlabel/random.hpp"
#include "synlabel/truth_functions.hpp"

using namespace synlabel;
namespace fs = std::filesystem;

namespace {

class DatasetIo : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("synlabel_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                        "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path Write(const std::string& name, const std::string& text) {
    const auto p = dir_ / name;
    std::ofstream(p, std::ios::binary) << text;
    return p;
  }

  fs::path dir_;
};

FeatureMatrix RandomFeatures(std::size_t n, std::size_t d, std::uint64_t seed) {
  Stream s(seed);
  Matrix m(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) m(i, j) = s.Normal() * std::pow(10.0, static_cast<double>(j) - 3.0);
  }
  std::vector<std::string> names;
  for (std::size_t j = 0; j < d; ++j) names.push_back("f" + std::to_string(j));
  return FeatureMatrix(names, m);
}

}  // namespace

TEST(FormatReal, RoundTripsExactly) {
  Stream s(2);
  for (int i = 0; i < 10000; ++i) {
    const double v = (s.Uniform() - 0.5) * std::pow(10.0, static_cast<double>(s.UniformIndex(40)) - 20.0);
    EXPECT_EQ(std::stod(FormatReal(v)), v);
  }
  EXPECT_EQ(FormatReal(0.1), "0.1");
  EXPECT_EQ(std::stod(FormatReal(0.1)), 0.1);
  EXPECT_EQ(FormatReal(1.0), "1");
}

TEST_F(DatasetIo, SoftCsvWithoutSidecar) {
  const auto p = Write("soft.csv", "a,b,p_0,p_1,p_2,p_3\n1,2,0.25,0.25,0.25,0.25\n3,4,1,0,0,0\n5,6,0,0.5,0.5,0\n");
  const auto d = ReadDataset(p);
  ASSERT_EQ(KindOf(d), DatasetKind::kObservedSoft);
  const auto& os = std::get<ObservedSoftDataset>(d);
  EXPECT_EQ(os.size(), 3u);
  EXPECT_EQ(os.schema().class_count(), 4u);
  EXPECT_EQ(os.soft_labels()(2, 1), 0.5);
  EXPECT_EQ(os.features()(1, 1), 4.0);
  EXPECT_TRUE(Validate(d).ok());
}

TEST_F(DatasetIo, MissingSoftColumnIsParseError) {
  const auto p = Write("gap.csv", "a,p_0,p_2\n1,0.5,0.5\n");
  EXPECT_THROW(ReadDataset(p), ParseError);
}

TEST_F(DatasetIo, MissingLabelColumnForcedHard) {
  const auto p = Write("nolabel.csv", "a,b\n1,2\n");
  EXPECT_THROW(ReadDataset(p), ParseError);
  EXPECT_THROW(ReadDataset(p, {DatasetKind::kObservedHard}), ParseError);
}

TEST_F(DatasetIo, NonNumericCellNamesRowAndColumn) {
  const auto p = Write("bad.csv", "a,b,label\n1,2,0\n3,oops,1\n");
  try {
    ReadDataset(p);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 1);
    EXPECT_EQ(e.column(), 1);
  }
}

TEST_F(DatasetIo, RaggedRowAndDuplicateHeader) {
  EXPECT_THROW(ReadDataset(Write("ragged.csv", "a,b,label\n1,2,0\n3,1\n")), ParseError);
  EXPECT_THROW(ReadDataset(Write("dup.csv", "a,a,label\n1,2,0\n")), ParseError);
  EXPECT_THROW(ReadDataset(Write("inf.csv", "a,label\ninf,0\n")), ParseError);
}

TEST_F(DatasetIo, MissingFileIsDataError) { EXPECT_THROW(ReadDataset(dir_ / "absent.csv"), DataError); }

TEST_F(DatasetIo, HardCsvWithNamesAndCrlf) {
  const auto p = Write("names.csv", "\xEF\xBB\xBFx,label\r\n1,van\r\n2,bus\r\n3,van\r\n");
  const auto d = ReadDataset(p);
  const auto& oh = std::get<ObservedHardDataset>(d);
  EXPECT_EQ(oh.schema().class_names(), (std::vector<std::string>{"bus", "van"}));
  EXPECT_EQ(oh.labels(), HardLabelVector({1, 0, 1}));
  ASSERT_EQ(oh.provenance().size(), 1u);
  EXPECT_EQ(oh.provenance()[0].name, "ingest");
}

TEST_F(DatasetIo, IntegerLabelsUseClassCount) {
  const auto d = ReadDataset(Write("ints.csv", "x,label\n1,0\n2,3\n"));
  const auto& oh = std::get<ObservedHardDataset>(d);
  EXPECT_EQ(oh.schema().class_count(), 4u);
  EXPECT_EQ(oh.labels(), HardLabelVector({0, 3}));
}

TEST_F(DatasetIo, GroundTruthRoundTripBitIdentical) {
  const auto X = RandomFeatures(60, 4, 5);
  Stream s(9);
  std::vector<ClassId> y(60);
  for (auto& v : y) v = static_cast<ClassId>(s.UniformIndex(3));
  const auto tree = FitDecisionTree(X, HardLabelVector(y), 3, {}, 1);
  const auto gt = GroundTruthDataset::FromTruthFunction(X, tree, LabelSchema({"a", "b", "c"}), {{"synthetic", {}, 4}});
  const auto p = dir_ / "gt.csv";
  WriteDataset(gt, p, 77);
  EXPECT_TRUE(fs::exists(SidecarPath(p)));
  const auto back = ReadDataset(p);
  ASSERT_EQ(KindOf(back), DatasetKind::kGroundTruth);
  const auto& g2 = std::get<GroundTruthDataset>(back);
  EXPECT_EQ(g2.features().values(), gt.features().values());
  EXPECT_EQ(g2.features().column_names(), gt.features().column_names());
  EXPECT_EQ(g2.labels(), gt.labels());
  EXPECT_EQ(g2.schema(), gt.schema());
  ASSERT_EQ(g2.provenance().size(), 1u);
  EXPECT_EQ(g2.provenance()[0].seed, 4u);
  EXPECT_TRUE(Validate(back).ok());
  EXPECT_EQ(PredictHard(*g2.truth_fn(), g2.features()), gt.labels());
  EXPECT_EQ(SidecarJson(back, 77), SidecarJson(AnyDataset(gt), 77));
}

TEST_F(DatasetIo, PartialGroundTruthRoundTrip) {
  const auto X = RandomFeatures(5, 3, 6);
  const auto f = std::make_shared<const LinearThresholdFunction>(std::vector<double>{1, 1, 1}, 0.0);
  const auto partition = FeaturePartition::Hiding(3, {1});
  const std::vector<std::size_t> kept = partition.kept();
  Matrix soft(5, 2);
  for (std::size_t i = 0; i < 5; ++i) {
    soft(i, 0) = 0.1 * static_cast<double>(i + 1) / 3.0;
    soft(i, 1) = 1.0 - soft(i, 0);
  }
  const PartialGroundTruthDataset pg(X.SelectColumns(kept), partition, f, SoftLabelMatrix(soft),
                                     LabelSchema::WithClassCount(2), {{"kind", "uniform_box"}}, {{"feature_hide", {}, 1}});
  const auto p = dir_ / "pg.csv";
  WriteDataset(pg, p);
  const auto back = ReadDataset(p);
  const auto& pg2 = std::get<PartialGroundTruthDataset>(back);
  EXPECT_EQ(pg2.soft_labels(), pg.soft_labels());
  EXPECT_EQ(pg2.kept_features(), pg.kept_features());
  EXPECT_EQ(pg2.partition(), partition);
  EXPECT_EQ(pg2.sampler_descriptor(), pg.sampler_descriptor());
}

TEST_F(DatasetIo, ObservedRoundTripPreservesProvenance) {
  const auto X = RandomFeatures(4, 2, 7);
  const ObservedHardDataset oh(X, HardLabelVector({0, 1, 1, 0}), LabelSchema({"no", "yes"}),
                               {{"ingest", {}, std::nullopt}, {"noise_hard", {{"rate", 0.2}}, 12345}});
  const auto p = dir_ / "oh.csv";
  WriteDataset(oh, p, 3);
  const auto any = ReadDataset(p);
  const auto& back = std::get<ObservedHardDataset>(any);
  EXPECT_EQ(back.labels(), oh.labels());
  EXPECT_EQ(back.schema(), oh.schema());
  ASSERT_EQ(back.provenance().size(), 2u);
  EXPECT_EQ(back.provenance()[1].name, "noise_hard");
  EXPECT_EQ(back.provenance()[1].seed, 12345u);
  EXPECT_EQ(back.provenance()[1].parameters["rate"], 0.2);
}

TEST_F(DatasetIo, ReservedColumnNamesRejectedOnWrite) {
  const FeatureMatrix X({"label"}, Matrix(1, 1));
  const ObservedHardDataset oh(X, HardLabelVector({0}), LabelSchema::WithClassCount(2), {{"ingest", {}, std::nullopt}});
  EXPECT_THROW(WriteDataset(oh, dir_ / "r.csv"), Error);
}

TEST_F(DatasetIo, GroundTruthWithoutSidecarRejected) {
  const auto p = Write("g.csv", "x,label\n1,0\n");
  EXPECT_THROW(ReadDataset(p, {DatasetKind::kGroundTruth}), ParseError);
}
