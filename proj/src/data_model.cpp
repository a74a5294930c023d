#include "synlabel/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <unordered_set>

#include "synlabel/errors.hpp"
#include "synlabel/truth_functions.hpp"

namespace synlabel {
namespace {

std::string ShortReal(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

template <typename Names>
bool AllUnique(const Names& names) {
  std::unordered_set<std::string> seen;
  for (const auto& n : names) {
    if (!seen.insert(n).second) return false;
  }
  return true;
}

void RequireRows(std::size_t expected, std::size_t actual, const char* what) {
  if (expected != actual) {
    throw InvalidArgument(std::string(what) + ": row count " + std::to_string(actual) +
                          " does not match feature rows " + std::to_string(expected));
  }
}

void CheckFeatureColumns(const FeatureMatrix& features, ValidationReport& report) {
  if (features.cols() == 0) report.Add("feature matrix has no columns");
}

}  // namespace

// --- LabelSchema ----------------------------------------------------------

LabelSchema::LabelSchema(std::vector<std::string> class_names) : names_(std::move(class_names)) {
  if (names_.size() < 2) throw InvalidArgument("label schema needs at least 2 classes");
  if (!AllUnique(names_)) throw InvalidArgument("label schema class names must be unique");
}

LabelSchema LabelSchema::WithClassCount(std::size_t class_count) {
  std::vector<std::string> names;
  names.reserve(class_count);
  for (std::size_t c = 0; c < class_count; ++c) names.push_back(std::to_string(c));
  return LabelSchema(std::move(names));
}

std::optional<ClassId> LabelSchema::IndexOf(std::string_view name) const {
  for (std::size_t c = 0; c < names_.size(); ++c) {
    if (names_[c] == name) return static_cast<ClassId>(c);
  }
  return std::nullopt;
}

// --- FeatureMatrix --------------------------------------------------------

FeatureMatrix::FeatureMatrix(std::vector<std::string> column_names, Matrix values)
    : names_(std::move(column_names)), values_(std::move(values)) {
  if (names_.size() != values_.cols()) {
    throw InvalidArgument("feature matrix has " + std::to_string(values_.cols()) +
                          " columns but " + std::to_string(names_.size()) + " names");
  }
  if (values_.rows() == 0) throw InvalidArgument("feature matrix needs at least one row");
  if (!AllUnique(names_)) throw InvalidArgument("feature column names must be unique");
  for (std::size_t r = 0; r < values_.rows(); ++r) {
    for (std::size_t c = 0; c < values_.cols(); ++c) {
      if (!std::isfinite(values_(r, c))) {
        throw InvalidArgument("non-finite feature value at row " + std::to_string(r) +
                              ", column " + std::to_string(c));
      }
    }
  }
}

std::optional<std::size_t> FeatureMatrix::ColumnIndex(std::string_view name) const {
  for (std::size_t c = 0; c < names_.size(); ++c) {
    if (names_[c] == name) return c;
  }
  return std::nullopt;
}

FeatureMatrix FeatureMatrix::SelectColumns(std::span<const std::size_t> columns) const {
  std::vector<std::string> names;
  Matrix out(rows(), columns.size());
  for (std::size_t k = 0; k < columns.size(); ++k) {
    if (columns[k] >= cols()) throw InvalidArgument("column index out of range");
    names.push_back(names_[columns[k]]);
    for (std::size_t r = 0; r < rows(); ++r) out(r, k) = values_(r, columns[k]);
  }
  return FeatureMatrix(std::move(names), std::move(out));
}

// --- SoftLabelMatrix ------------------------------------------------------

SoftLabelMatrix SoftLabelMatrix::Renormalized() const {
  Matrix out = probs_;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    double sum = 0.0;
    for (double v : out.row(r)) sum += v;
    if (sum <= 0.0) throw InvalidArgument("cannot renormalize row " + std::to_string(r) + " with sum 0");
    for (double& v : out.row(r)) v /= sum;
  }
  return SoftLabelMatrix(std::move(out));
}

// --- FeaturePartition -----------------------------------------------------

FeaturePartition::FeaturePartition(std::vector<std::size_t> kept, std::vector<std::size_t> hidden)
    : kept_(std::move(kept)), hidden_(std::move(hidden)) {
  const std::size_t d = kept_.size() + hidden_.size();
  std::vector<bool> seen(d, false);
  for (const auto* set : {&kept_, &hidden_}) {
    for (std::size_t idx : *set) {
      if (idx >= d) {
        throw InvalidArgument("partition index " + std::to_string(idx) +
                              " is outside the feature range [0, " + std::to_string(d) + ")");
      }
      if (seen[idx]) throw InvalidArgument("partition index " + std::to_string(idx) + " appears twice");
      seen[idx] = true;
    }
  }
}

FeaturePartition FeaturePartition::Hiding(std::size_t feature_count, std::vector<std::size_t> hidden) {
  std::vector<bool> is_hidden(feature_count, false);
  for (std::size_t idx : hidden) {
    if (idx >= feature_count) throw InvalidArgument("hidden feature index out of range");
    is_hidden[idx] = true;
  }
  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < feature_count; ++j) {
    if (!is_hidden[j]) kept.push_back(j);
  }
  return FeaturePartition(std::move(kept), std::move(hidden));
}

FeaturePartition FeaturePartition::KeepAll(std::size_t feature_count) { return Hiding(feature_count, {}); }

nlohmann::json FeaturePartition::ToJson() const { return {{"kept", kept_}, {"hidden", hidden_}}; }

FeaturePartition FeaturePartition::FromJson(const nlohmann::json& j) {
  return FeaturePartition(j.at("kept").get<std::vector<std::size_t>>(),
                          j.at("hidden").get<std::vector<std::size_t>>());
}

// --- Provenance -----------------------------------------------------------

nlohmann::json ProvenanceRecord::ToJson() const {
  nlohmann::json j = {{"name", name}, {"parameters", parameters}};
  j["seed"] = seed ? nlohmann::json(*seed) : nlohmann::json(nullptr);
  return j;
}

ProvenanceRecord ProvenanceRecord::FromJson(const nlohmann::json& j) {
  ProvenanceRecord r;
  r.name = j.at("name").get<std::string>();
  r.parameters = j.value("parameters", nlohmann::json::object());
  if (j.contains("seed") && !j.at("seed").is_null()) r.seed = j.at("seed").get<std::uint64_t>();
  return r;
}

// --- Datasets -------------------------------------------------------------

GroundTruthDataset::GroundTruthDataset(FeatureMatrix features, HardLabelVector labels,
                                       TruthFunctionPtr truth_fn, LabelSchema schema,
                                       Provenance provenance)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      truth_fn_(std::move(truth_fn)),
      schema_(std::move(schema)),
      provenance_(std::move(provenance)) {
  RequireRows(features_.rows(), labels_.size(), "ground truth labels");
  if (!truth_fn_) throw InvalidArgument("ground truth dataset needs a truth function");
  if (truth_fn_->input_arity() != features_.cols()) {
    throw InvalidArgument("truth function arity " + std::to_string(truth_fn_->input_arity()) +
                          " does not match feature count " + std::to_string(features_.cols()));
  }
  if (truth_fn_->class_count() != schema_.class_count()) {
    throw InvalidArgument("truth function class count does not match the label schema");
  }
}

GroundTruthDataset GroundTruthDataset::FromTruthFunction(FeatureMatrix features, TruthFunctionPtr truth_fn,
                                                         LabelSchema schema, Provenance provenance) {
  if (!truth_fn) throw InvalidArgument("ground truth dataset needs a truth function");
  HardLabelVector labels = PredictHard(*truth_fn, features);
  return GroundTruthDataset(std::move(features), std::move(labels), std::move(truth_fn), std::move(schema),
                            std::move(provenance));
}

GroundTruthDataset GroundTruthDataset::WithRecord(ProvenanceRecord record) const {
  GroundTruthDataset copy = *this;
  copy.provenance_.push_back(std::move(record));
  return copy;
}

PartialGroundTruthDataset::PartialGroundTruthDataset(FeatureMatrix kept_features, FeaturePartition partition,
                                                     TruthFunctionPtr truth_fn, SoftLabelMatrix soft_labels,
                                                     LabelSchema schema, nlohmann::json sampler_descriptor,
                                                     Provenance provenance)
    : kept_features_(std::move(kept_features)),
      partition_(std::move(partition)),
      truth_fn_(std::move(truth_fn)),
      soft_labels_(std::move(soft_labels)),
      schema_(std::move(schema)),
      sampler_descriptor_(std::move(sampler_descriptor)),
      provenance_(std::move(provenance)) {
  RequireRows(kept_features_.rows(), soft_labels_.rows(), "partial ground truth soft labels");
  if (kept_features_.cols() != partition_.kept().size()) {
    throw InvalidArgument("kept feature count does not match the partition");
  }
  if (!truth_fn_) throw InvalidArgument("partial ground truth dataset needs a truth function");
  if (truth_fn_->input_arity() != partition_.feature_count()) {
    throw InvalidArgument("truth function arity does not match the partition feature count");
  }
  if (soft_labels_.classes() != schema_.class_count()) {
    throw InvalidArgument("soft label width does not match the label schema");
  }
}

PartialGroundTruthDataset PartialGroundTruthDataset::WithRecord(ProvenanceRecord record) const {
  PartialGroundTruthDataset copy = *this;
  copy.provenance_.push_back(std::move(record));
  return copy;
}

ObservedSoftDataset::ObservedSoftDataset(FeatureMatrix features, SoftLabelMatrix soft_labels,
                                         LabelSchema schema, Provenance provenance)
    : features_(std::move(features)),
      soft_labels_(std::move(soft_labels)),
      schema_(std::move(schema)),
      provenance_(std::move(provenance)) {
  RequireRows(features_.rows(), soft_labels_.rows(), "observed soft labels");
  if (soft_labels_.classes() != schema_.class_count()) {
    throw InvalidArgument("soft label width does not match the label schema");
  }
}

ObservedSoftDataset ObservedSoftDataset::WithRecord(ProvenanceRecord record) const {
  ObservedSoftDataset copy = *this;
  copy.provenance_.push_back(std::move(record));
  return copy;
}

ObservedHardDataset::ObservedHardDataset(FeatureMatrix features, HardLabelVector labels, LabelSchema schema,
                                         Provenance provenance)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      schema_(std::move(schema)),
      provenance_(std::move(provenance)) {
  RequireRows(features_.rows(), labels_.size(), "observed hard labels");
}

ObservedHardDataset ObservedHardDataset::WithRecord(ProvenanceRecord record) const {
  ObservedHardDataset copy = *this;
  copy.provenance_.push_back(std::move(record));
  return copy;
}

// --- Validation -----------------------------------------------------------

void ValidationReport::Add(std::string message, std::optional<std::size_t> row,
                           std::optional<std::size_t> column) {
  violations_.push_back({std::move(message), row, column});
}

void ValidationReport::Merge(const ValidationReport& other) {
  violations_.insert(violations_.end(), other.violations_.begin(), other.violations_.end());
}

std::string ValidationReport::ToString() const {
  if (ok()) return "pass";
  std::ostringstream out;
  out << violations_.size() << " violation(s)";
  for (const auto& v : violations_) out << "\n  " << v.message;
  return out.str();
}

ValidationReport Validate(const SoftLabelMatrix& soft) {
  ValidationReport report;
  for (std::size_t r = 0; r < soft.rows(); ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < soft.classes(); ++c) {
      const double v = soft(r, c);
      if (!(v >= 0.0 && v <= 1.0)) {
        report.Add("row " + std::to_string(r) + " class " + std::to_string(c) + " probability " +
                       ShortReal(v) + " ∉ [0,1]",
                   r, c);
      }
      sum += v;
    }
    if (!(std::abs(sum - 1.0) <= kSoftLabelTolerance)) {
      report.Add("row " + std::to_string(r) + " sum " + ShortReal(sum) + " ∉ 1±1e-9", r);
    }
  }
  return report;
}

ValidationReport Validate(const HardLabelVector& labels, const LabelSchema& schema) {
  ValidationReport report;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= schema.class_count()) {
      report.Add("row " + std::to_string(i) + " label " + std::to_string(labels[i]) +
                     " out of range for " + std::to_string(schema.class_count()) + " classes",
                 i);
    }
  }
  return report;
}

ValidationReport Validate(const GroundTruthDataset& dataset) {
  ValidationReport report;
  CheckFeatureColumns(dataset.features(), report);
  report.Merge(Validate(dataset.labels(), dataset.schema()));
  const HardLabelVector reevaluated = PredictHard(*dataset.truth_fn(), dataset.features());
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < reevaluated.size(); ++i) {
    if (reevaluated[i] != dataset.labels()[i]) {
      if (++mismatches <= 20) {
        report.Add("row " + std::to_string(i) + " label " + std::to_string(dataset.labels()[i]) +
                       " differs from truth function output " + std::to_string(reevaluated[i]),
                   i);
      }
    }
  }
  if (mismatches > 20) report.Add(std::to_string(mismatches - 20) + " further truth function mismatches");
  return report;
}

ValidationReport Validate(const PartialGroundTruthDataset& dataset) {
  ValidationReport report = Validate(dataset.soft_labels());
  if (dataset.partition().hidden().empty()) {
    // Nothing hidden: the soft labels must be the one-hot truth.
    const auto& kept = dataset.partition().kept();
    const FeatureMatrix& features = dataset.kept_features();
    Matrix full(features.rows(), kept.size());
    std::vector<std::string> names(kept.size());
    for (std::size_t a = 0; a < kept.size(); ++a) {
      names[kept[a]] = features.column_names()[a];
      for (std::size_t i = 0; i < features.rows(); ++i) full(i, kept[a]) = features(i, a);
    }
    const HardLabelVector truth =
        PredictHard(*dataset.truth_fn(), FeatureMatrix(std::move(names), std::move(full)));
    for (std::size_t i = 0; i < truth.size(); ++i) {
      for (std::size_t c = 0; c < dataset.soft_labels().classes(); ++c) {
        const double expected = (c == truth[i]) ? 1.0 : 0.0;
        if (dataset.soft_labels()(i, c) != expected) {
          report.Add("row " + std::to_string(i) + " is not the one-hot truth label although no feature is hidden",
                     i, c);
          break;
        }
      }
    }
  }
  return report;
}

ValidationReport Validate(const ObservedSoftDataset& dataset) {
  ValidationReport report;
  CheckFeatureColumns(dataset.features(), report);
  report.Merge(Validate(dataset.soft_labels()));
  if (dataset.provenance().empty()) report.Add("observed dataset has no provenance records");
  return report;
}

ValidationReport Validate(const ObservedHardDataset& dataset) {
  ValidationReport report;
  CheckFeatureColumns(dataset.features(), report);
  report.Merge(Validate(dataset.labels(), dataset.schema()));
  if (dataset.provenance().empty()) report.Add("observed dataset has no provenance records");
  return report;
}

ValidationReport Validate(const AnyDataset& dataset) {
  return std::visit([](const auto& d) { return Validate(d); }, dataset);
}

// --- One-hot --------------------------------------------------------------

SoftLabelMatrix OneHot(const HardLabelVector& labels, std::size_t class_count) {
  Matrix out(labels.size(), class_count);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= class_count) {
      throw InvalidArgument("label " + std::to_string(labels[i]) + " at row " + std::to_string(i) +
                            " out of range for " + std::to_string(class_count) + " classes");
    }
    out(i, labels[i]) = 1.0;
  }
  return SoftLabelMatrix(std::move(out));
}

SoftLabelMatrix OneHot(const HardLabelVector& labels, const LabelSchema& schema) {
  return OneHot(labels, schema.class_count());
}

}  // namespace synlabel
