#pragma once

// Densities over the hidden features used by feature hiding.
//
//   uniform_box      independent Uniform(min, max) per hidden column
//   empirical_joint  bootstrap of whole hidden-column tuples
//   gaussian_kde     empirical_joint plus per-dimension Gaussian kernel noise
//   mice_pmm         chained equations with predictive mean matching,
//                    conditioned on the kept features
//   mice_pmm_label   as mice_pmm, also conditioned on the ground-truth label

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"
#include "synlabel/data_model.hpp"
#include "synlabel/random.hpp"

namespace synlabel {

enum class SamplerKind { kUniformBox, kEmpiricalJoint, kGaussianKde, kMicePmm, kMicePmmLabel };

std::string SamplerKindName(SamplerKind kind);
SamplerKind ParseSamplerKind(const std::string& name);
std::vector<SamplerKind> AllSamplerKinds();

struct SamplerOptions {
  // Replaces the Silverman bandwidths when set; one entry per hidden column.
  std::optional<std::vector<double>> kde_bandwidth;
  std::size_t mice_donors = 5;
  std::size_t mice_iterations = 5;
};

inline constexpr double kBandwidthFloor = 1e-12;

// Per-dimension Silverman bandwidths for a diagonal Gaussian kernel:
// h_j = sigma_j * (4 / ((dims + 2) * m))^(1 / (dims + 4)), floored at 1e-12.
// For one dimension this is the familiar 1.06 * sigma * m^(-1/5).
std::vector<double> SilvermanBandwidths(const Matrix& rows);

struct UniformBoxState {
  std::vector<double> low;
  std::vector<double> high;
};

struct EmpiricalJointState {
  Matrix rows;  // m x h hidden tuples
};

struct KdeState {
  Matrix rows;
  std::vector<double> bandwidth;
};

struct MiceState {
  struct FeatureModel {
    // Coefficients over [1, kept..., label one-hot..., other hidden...].
    std::vector<double> coefficients;
    // (predicted value, reference row) sorted ascending; the donor pool.
    std::vector<std::pair<double, std::size_t>> donors;
  };

  Matrix hidden;  // m x h reference values
  std::size_t kept_dims = 0;
  std::size_t label_classes = 0;  // 0 unless conditioned on the label
  std::size_t donor_count = 5;
  std::size_t chain_iterations = 5;
  std::vector<FeatureModel> models;
};

class HiddenFeatureSampler {
 public:
  using State = std::variant<UniformBoxState, EmpiricalJointState, KdeState, MiceState>;

  HiddenFeatureSampler(SamplerKind kind, FeaturePartition partition, State state, std::uint64_t seed);

  SamplerKind kind() const { return kind_; }
  const FeaturePartition& partition() const { return partition_; }
  std::size_t hidden_dims() const { return partition_.hidden().size(); }
  bool conditional() const;
  bool needs_label() const { return kind_ == SamplerKind::kMicePmmLabel; }
  const State& state() const { return state_; }

  // count x hidden_dims draws. Draw j uses stream.Derive(j). `context_kept`
  // holds the kept-feature values of the instance in partition order;
  // unconditional kinds ignore it and the label.
  Matrix Sample(std::span<const double> context_kept, std::optional<ClassId> label, std::size_t count,
                const Stream& stream) const;

  // Kind, hyperparameters and seed, for provenance.
  nlohmann::json Descriptor() const;

 private:
  void DrawMice(const MiceState& s, std::span<const double> context_kept, std::optional<ClassId> label,
                Stream& stream, std::span<double> out) const;

  SamplerKind kind_;
  FeaturePartition partition_;
  State state_;
  std::uint64_t seed_;
};

// `labels` is required for mice_pmm_label and ignored otherwise.
HiddenFeatureSampler FitSampler(SamplerKind kind, const FeatureMatrix& X_full, const FeaturePartition& partition,
                                const HardLabelVector* labels, std::uint64_t seed,
                                const SamplerOptions& options = {});

}  // namespace synlabel
