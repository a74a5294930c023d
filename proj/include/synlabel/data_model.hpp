#pragma once

// Dataset types of the ground-truth chain:
//   GroundTruthDataset (G) -> PartialGroundTruthDataset (PG)
//   -> ObservedSoftDataset (OS) -> ObservedHardDataset (OH).
// All types are immutable once built; "modifying" a dataset means building
// a new one, usually with an extra provenance record.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "synlabel/matrix.hpp"

namespace synlabel {

class TruthFunction;
using TruthFunctionPtr = std::shared_ptr<const TruthFunction>;

using ClassId = std::uint32_t;

// Absolute tolerance on soft-label row sums.
inline constexpr double kSoftLabelTolerance = 1e-9;

class LabelSchema {
 public:
  explicit LabelSchema(std::vector<std::string> class_names);
  // Classes named "0" .. "C-1".
  static LabelSchema WithClassCount(std::size_t class_count);

  std::size_t class_count() const { return names_.size(); }
  const std::vector<std::string>& class_names() const { return names_; }
  std::optional<ClassId> IndexOf(std::string_view name) const;

  friend bool operator==(const LabelSchema&, const LabelSchema&) = default;

 private:
  std::vector<std::string> names_;
};

class FeatureMatrix {
 public:
  // Throws InvalidArgument unless names are unique, there is at least one
  // row and every cell is finite. Zero columns are accepted only so that a
  // partial ground truth with every feature hidden can be represented;
  // Validate() flags zero-column matrices on every other dataset type.
  FeatureMatrix(std::vector<std::string> column_names, Matrix values);

  std::size_t rows() const { return values_.rows(); }
  std::size_t cols() const { return values_.cols(); }
  const std::vector<std::string>& column_names() const { return names_; }
  const Matrix& values() const { return values_; }
  std::span<const double> row(std::size_t i) const { return values_.row(i); }
  double operator()(std::size_t r, std::size_t c) const { return values_(r, c); }

  std::optional<std::size_t> ColumnIndex(std::string_view name) const;
  FeatureMatrix SelectColumns(std::span<const std::size_t> columns) const;

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

 private:
  std::vector<std::string> names_;
  Matrix values_;
};

class HardLabelVector {
 public:
  HardLabelVector() = default;
  explicit HardLabelVector(std::vector<ClassId> labels) : labels_(std::move(labels)) {}

  std::size_t size() const { return labels_.size(); }
  ClassId operator[](std::size_t i) const { return labels_[i]; }
  const std::vector<ClassId>& values() const { return labels_; }
  auto begin() const { return labels_.begin(); }
  auto end() const { return labels_.end(); }

  friend bool operator==(const HardLabelVector&, const HardLabelVector&) = default;

 private:
  std::vector<ClassId> labels_;
};

// n x C matrix of class probabilities. Construction checks the shape only;
// Validate() checks the simplex constraints so broken inputs can be reported.
class SoftLabelMatrix {
 public:
  SoftLabelMatrix() = default;
  explicit SoftLabelMatrix(Matrix probs) : probs_(std::move(probs)) {}

  std::size_t rows() const { return probs_.rows(); }
  std::size_t classes() const { return probs_.cols(); }
  std::span<const double> row(std::size_t i) const { return probs_.row(i); }
  double operator()(std::size_t r, std::size_t c) const { return probs_(r, c); }
  const Matrix& probs() const { return probs_; }

  // Rows divided by their sums. Only on explicit request; nothing in the
  // toolkit renormalizes implicitly.
  SoftLabelMatrix Renormalized() const;

  friend bool operator==(const SoftLabelMatrix&, const SoftLabelMatrix&) = default;

 private:
  Matrix probs_;
};

// Disjoint split of the feature indices {0..d-1} into kept and hidden sets.
class FeaturePartition {
 public:
  FeaturePartition(std::vector<std::size_t> kept, std::vector<std::size_t> hidden);
  // Kept set is the ascending complement of `hidden`.
  static FeaturePartition Hiding(std::size_t feature_count, std::vector<std::size_t> hidden);
  static FeaturePartition KeepAll(std::size_t feature_count);

  const std::vector<std::size_t>& kept() const { return kept_; }
  const std::vector<std::size_t>& hidden() const { return hidden_; }
  std::size_t feature_count() const { return kept_.size() + hidden_.size(); }

  nlohmann::json ToJson() const;
  static FeaturePartition FromJson(const nlohmann::json& j);

  friend bool operator==(const FeaturePartition&, const FeaturePartition&) = default;

 private:
  std::vector<std::size_t> kept_;
  std::vector<std::size_t> hidden_;
};

// One applied transformation: name, parameters and the seed it consumed.
struct ProvenanceRecord {
  std::string name;
  nlohmann::json parameters = nlohmann::json::object();
  std::optional<std::uint64_t> seed;

  nlohmann::json ToJson() const;
  static ProvenanceRecord FromJson(const nlohmann::json& j);
};
using Provenance = std::vector<ProvenanceRecord>;

class GroundTruthDataset {
 public:
  GroundTruthDataset(FeatureMatrix features, HardLabelVector labels, TruthFunctionPtr truth_fn,
                     LabelSchema schema, Provenance provenance = {});
  // Labels are computed as truth_fn(features).
  static GroundTruthDataset FromTruthFunction(FeatureMatrix features, TruthFunctionPtr truth_fn,
                                              LabelSchema schema, Provenance provenance = {});

  const FeatureMatrix& features() const { return features_; }
  const HardLabelVector& labels() const { return labels_; }
  const TruthFunctionPtr& truth_fn() const { return truth_fn_; }
  const LabelSchema& schema() const { return schema_; }
  const Provenance& provenance() const { return provenance_; }
  std::size_t size() const { return labels_.size(); }

  GroundTruthDataset WithRecord(ProvenanceRecord record) const;

 private:
  FeatureMatrix features_;
  HardLabelVector labels_;
  TruthFunctionPtr truth_fn_;
  LabelSchema schema_;
  Provenance provenance_;
};

class PartialGroundTruthDataset {
 public:
  PartialGroundTruthDataset(FeatureMatrix kept_features, FeaturePartition partition,
                            TruthFunctionPtr truth_fn, SoftLabelMatrix soft_labels,
                            LabelSchema schema, nlohmann::json sampler_descriptor,
                            Provenance provenance = {});

  const FeatureMatrix& kept_features() const { return kept_features_; }
  const FeaturePartition& partition() const { return partition_; }
  const TruthFunctionPtr& truth_fn() const { return truth_fn_; }
  const SoftLabelMatrix& soft_labels() const { return soft_labels_; }
  const LabelSchema& schema() const { return schema_; }
  const nlohmann::json& sampler_descriptor() const { return sampler_descriptor_; }
  const Provenance& provenance() const { return provenance_; }
  std::size_t size() const { return soft_labels_.rows(); }

  PartialGroundTruthDataset WithRecord(ProvenanceRecord record) const;

 private:
  FeatureMatrix kept_features_;
  FeaturePartition partition_;
  TruthFunctionPtr truth_fn_;
  SoftLabelMatrix soft_labels_;
  LabelSchema schema_;
  nlohmann::json sampler_descriptor_;
  Provenance provenance_;
};

class ObservedSoftDataset {
 public:
  ObservedSoftDataset(FeatureMatrix features, SoftLabelMatrix soft_labels, LabelSchema schema,
                      Provenance provenance);

  const FeatureMatrix& features() const { return features_; }
  const SoftLabelMatrix& soft_labels() const { return soft_labels_; }
  const LabelSchema& schema() const { return schema_; }
  const Provenance& provenance() const { return provenance_; }
  std::size_t size() const { return soft_labels_.rows(); }

  ObservedSoftDataset WithRecord(ProvenanceRecord record) const;

 private:
  FeatureMatrix features_;
  SoftLabelMatrix soft_labels_;
  LabelSchema schema_;
  Provenance provenance_;
};

class ObservedHardDataset {
 public:
  ObservedHardDataset(FeatureMatrix features, HardLabelVector labels, LabelSchema schema,
                      Provenance provenance);

  const FeatureMatrix& features() const { return features_; }
  const HardLabelVector& labels() const { return labels_; }
  const LabelSchema& schema() const { return schema_; }
  const Provenance& provenance() const { return provenance_; }
  std::size_t size() const { return labels_.size(); }

  ObservedHardDataset WithRecord(ProvenanceRecord record) const;

 private:
  FeatureMatrix features_;
  HardLabelVector labels_;
  LabelSchema schema_;
  Provenance provenance_;
};

using AnyDataset = std::variant<GroundTruthDataset, PartialGroundTruthDataset,
                                ObservedSoftDataset, ObservedHardDataset>;

struct Violation {
  std::string message;
  std::optional<std::size_t> row;
  std::optional<std::size_t> column;
};

class ValidationReport {
 public:
  bool ok() const { return violations_.empty(); }
  const std::vector<Violation>& violations() const { return violations_; }
  void Add(std::string message, std::optional<std::size_t> row = std::nullopt,
           std::optional<std::size_t> column = std::nullopt);
  void Merge(const ValidationReport& other);
  std::string ToString() const;

 private:
  std::vector<Violation> violations_;
};

ValidationReport Validate(const SoftLabelMatrix& soft);
ValidationReport Validate(const HardLabelVector& labels, const LabelSchema& schema);
ValidationReport Validate(const GroundTruthDataset& dataset);
ValidationReport Validate(const PartialGroundTruthDataset& dataset);
ValidationReport Validate(const ObservedSoftDataset& dataset);
ValidationReport Validate(const ObservedHardDataset& dataset);
ValidationReport Validate(const AnyDataset& dataset);

// Row i is the indicator vector of labels[i]. Throws InvalidArgument when a
// label is outside the schema.
SoftLabelMatrix OneHot(const HardLabelVector& labels, const LabelSchema& schema);
SoftLabelMatrix OneHot(const HardLabelVector& labels, std::size_t class_count);

}  // namespace synlabel
