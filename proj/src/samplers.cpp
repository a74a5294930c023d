#include "synlabel/samplers.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "synlabel/errors.hpp"

namespace synlabel {
namespace {

Matrix Columns(const FeatureMatrix& X, std::span<const std::size_t> cols) {
  Matrix out(X.rows(), cols.size());
  for (std::size_t i = 0; i < X.rows(); ++i) {
    for (std::size_t k = 0; k < cols.size(); ++k) out(i, k) = X(i, cols[k]);
  }
  return out;
}

// Fills the predictor vector [1, kept..., one-hot label..., hidden except `skip`...].
void FillDesign(std::span<const double> kept, std::size_t label_classes, std::optional<ClassId> label,
                std::span<const double> hidden, std::size_t skip, std::span<double> out) {
  std::size_t k = 0;
  out[k++] = 1.0;
  for (double v : kept) out[k++] = v;
  for (std::size_t c = 0; c < label_classes; ++c) out[k++] = (label && *label == c) ? 1.0 : 0.0;
  for (std::size_t j = 0; j < hidden.size(); ++j) {
    if (j != skip) out[k++] = hidden[j];
  }
}

double Dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

MiceState FitMice(const FeatureMatrix& X, const FeaturePartition& partition, const HardLabelVector* labels,
                  const SamplerOptions& options) {
  if (options.mice_donors < 1) throw InvalidArgument("MICE donor count must be at least 1");
  if (options.mice_iterations < 1) throw InvalidArgument("MICE chain iterations must be at least 1");
  MiceState s;
  s.hidden = Columns(X, partition.hidden());
  const Matrix kept = Columns(X, partition.kept());
  s.kept_dims = partition.kept().size();
  s.donor_count = options.mice_donors;
  s.chain_iterations = options.mice_iterations;
  if (labels) {
    ClassId max_label = 1;
    for (ClassId c : *labels) max_label = std::max(max_label, c);
    s.label_classes = static_cast<std::size_t>(max_label) + 1;
  }

  const std::size_t m = X.rows();
  const std::size_t h = s.hidden.cols();
  if (h == 0) return s;
  const std::size_t p = s.kept_dims + s.label_classes + h;
  std::vector<double> design_row(p);
  for (std::size_t j = 0; j < h; ++j) {
    Eigen::MatrixXd A(m, p);
    Eigen::VectorXd b(m);
    for (std::size_t i = 0; i < m; ++i) {
      std::optional<ClassId> label;
      if (labels) label = (*labels)[i];
      FillDesign(kept.row(i), s.label_classes, label, s.hidden.row(i), j, design_row);
      for (std::size_t k = 0; k < p; ++k) A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = design_row[k];
      b(static_cast<Eigen::Index>(i)) = s.hidden(i, j);
    }
    // Minimum-norm least squares; tolerates collinear predictors such as an
    // intercept next to a full one-hot block.
    const Eigen::VectorXd beta = A.completeOrthogonalDecomposition().solve(b);
    const Eigen::VectorXd fitted = A * beta;

    MiceState::FeatureModel model;
    model.coefficients.assign(beta.data(), beta.data() + beta.size());
    model.donors.reserve(m);
    for (std::size_t i = 0; i < m; ++i) model.donors.emplace_back(fitted(static_cast<Eigen::Index>(i)), i);
    std::sort(model.donors.begin(), model.donors.end());
    s.models.push_back(std::move(model));
  }
  return s;
}

// Reference row of one of the k donors whose prediction is nearest to
// `target`, chosen uniformly. Equal distances prefer the lower prediction.
std::size_t PickDonor(const std::vector<std::pair<double, std::size_t>>& donors, double target, std::size_t k,
                      Stream& stream) {
  k = std::min(k, donors.size());
  auto pos = std::lower_bound(donors.begin(), donors.end(), std::make_pair(target, std::size_t{0}));
  std::ptrdiff_t right = pos - donors.begin();
  std::ptrdiff_t left = right - 1;
  const auto n = static_cast<std::ptrdiff_t>(donors.size());
  std::vector<std::size_t> chosen;
  chosen.reserve(k);
  while (chosen.size() < k) {
    const bool left_ok = left >= 0;
    const bool right_ok = right < n;
    if (left_ok && (!right_ok || target - donors[static_cast<std::size_t>(left)].first <=
                                     donors[static_cast<std::size_t>(right)].first - target)) {
      chosen.push_back(donors[static_cast<std::size_t>(left--)].second);
    } else {
      chosen.push_back(donors[static_cast<std::size_t>(right++)].second);
    }
  }
  return chosen[stream.UniformIndex(chosen.size())];
}

}  // namespace

std::string SamplerKindName(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::kUniformBox: return "uniform_box";
    case SamplerKind::kEmpiricalJoint: return "empirical_joint";
    case SamplerKind::kGaussianKde: return "gaussian_kde";
    case SamplerKind::kMicePmm: return "mice_pmm";
    case SamplerKind::kMicePmmLabel: return "mice_pmm_label";
  }
  return "unknown";
}

SamplerKind ParseSamplerKind(const std::string& name) {
  for (SamplerKind k : AllSamplerKinds()) {
    if (SamplerKindName(k) == name) return k;
  }
  throw InvalidArgument("unknown sampler kind '" + name + "'");
}

std::vector<SamplerKind> AllSamplerKinds() {
  return {SamplerKind::kUniformBox, SamplerKind::kEmpiricalJoint, SamplerKind::kGaussianKde, SamplerKind::kMicePmm,
          SamplerKind::kMicePmmLabel};
}

std::vector<double> SilvermanBandwidths(const Matrix& rows) {
  const std::size_t m = rows.rows();
  const std::size_t dims = rows.cols();
  const double factor = std::pow(4.0 / ((static_cast<double>(dims) + 2.0) * static_cast<double>(m)),
                                 1.0 / (static_cast<double>(dims) + 4.0));
  std::vector<double> out(dims, kBandwidthFloor);
  if (m < 2) return out;
  for (std::size_t j = 0; j < dims; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < m; ++i) mean += rows(i, j);
    mean /= static_cast<double>(m);
    double ss = 0.0;
    for (std::size_t i = 0; i < m; ++i) ss += (rows(i, j) - mean) * (rows(i, j) - mean);
    const double sd = std::sqrt(ss / static_cast<double>(m - 1));
    out[j] = std::max(sd * factor, kBandwidthFloor);
  }
  return out;
}

HiddenFeatureSampler::HiddenFeatureSampler(SamplerKind kind, FeaturePartition partition, State state,
                                           std::uint64_t seed)
    : kind_(kind), partition_(std::move(partition)), state_(std::move(state)), seed_(seed) {}

bool HiddenFeatureSampler::conditional() const {
  return kind_ == SamplerKind::kMicePmm || kind_ == SamplerKind::kMicePmmLabel;
}

Matrix HiddenFeatureSampler::Sample(std::span<const double> context_kept, std::optional<ClassId> label,
                                    std::size_t count, const Stream& stream) const {
  const std::size_t h = hidden_dims();
  Matrix out(count, h);
  if (count == 0 || h == 0) return out;
  if (conditional() && context_kept.size() != partition_.kept().size()) {
    throw InvalidArgument("sampler context has " + std::to_string(context_kept.size()) + " values, expected " +
                          std::to_string(partition_.kept().size()));
  }
  if (needs_label() && !label) throw InvalidArgument("mice_pmm_label sampling needs the instance label");

  for (std::size_t j = 0; j < count; ++j) {
    Stream draw = stream.Derive(j);
    auto row = out.row(j);
    std::visit(
        [&](const auto& s) {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, UniformBoxState>) {
            for (std::size_t d = 0; d < h; ++d) row[d] = s.low[d] + draw.Uniform() * (s.high[d] - s.low[d]);
          } else if constexpr (std::is_same_v<S, EmpiricalJointState>) {
            const auto src = s.rows.row(draw.UniformIndex(s.rows.rows()));
            std::copy(src.begin(), src.end(), row.begin());
          } else if constexpr (std::is_same_v<S, KdeState>) {
            const auto src = s.rows.row(draw.UniformIndex(s.rows.rows()));
            for (std::size_t d = 0; d < h; ++d) row[d] = src[d] + s.bandwidth[d] * draw.Normal();
          } else {
            DrawMice(s, context_kept, label, draw, row);
          }
        },
        state_);
  }
  return out;
}

void HiddenFeatureSampler::DrawMice(const MiceState& s, std::span<const double> context_kept,
                                    std::optional<ClassId> label, Stream& stream, std::span<double> out) const {
  const std::size_t h = s.hidden.cols();
  const std::size_t m = s.hidden.rows();
  // Marginal bootstrap start: each column from an independent random row.
  for (std::size_t j = 0; j < h; ++j) out[j] = s.hidden(stream.UniformIndex(m), j);
  if (s.label_classes == 0) label.reset();

  std::vector<double> design(s.kept_dims + s.label_classes + h);
  for (std::size_t it = 0; it < s.chain_iterations; ++it) {
    for (std::size_t j = 0; j < h; ++j) {
      FillDesign(context_kept, s.label_classes, label, out, j, design);
      const double predicted = Dot(design, s.models[j].coefficients);
      out[j] = s.hidden(PickDonor(s.models[j].donors, predicted, s.donor_count, stream), j);
    }
  }
}

nlohmann::json HiddenFeatureSampler::Descriptor() const {
  nlohmann::json j = {{"kind", SamplerKindName(kind_)}, {"seed", seed_}, {"partition", partition_.ToJson()}};
  std::visit(
      [&](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, UniformBoxState>) {
          j["low"] = s.low;
          j["high"] = s.high;
        } else if constexpr (std::is_same_v<S, EmpiricalJointState>) {
          j["reference_rows"] = s.rows.rows();
        } else if constexpr (std::is_same_v<S, KdeState>) {
          j["reference_rows"] = s.rows.rows();
          j["bandwidth"] = s.bandwidth;
          j["bandwidth_rule"] = "silverman_diagonal";
        } else {
          j["reference_rows"] = s.hidden.rows();
          j["donors"] = s.donor_count;
          j["chain_iterations"] = s.chain_iterations;
          j["include_label"] = s.label_classes > 0;
        }
      },
      state_);
  return j;
}

HiddenFeatureSampler FitSampler(SamplerKind kind, const FeatureMatrix& X_full, const FeaturePartition& partition,
                                const HardLabelVector* labels, std::uint64_t seed, const SamplerOptions& options) {
  if (partition.feature_count() != X_full.cols()) {
    throw InvalidArgument("partition covers " + std::to_string(partition.feature_count()) +
                          " features, data has " + std::to_string(X_full.cols()));
  }
  if (kind == SamplerKind::kMicePmmLabel) {
    if (!labels) throw InvalidArgument("mice_pmm_label needs ground-truth labels");
    if (labels->size() != X_full.rows()) throw InvalidArgument("label count does not match feature rows");
  }

  Matrix hidden = Columns(X_full, partition.hidden());
  HiddenFeatureSampler::State state;
  switch (kind) {
    case SamplerKind::kUniformBox: {
      UniformBoxState s;
      for (std::size_t j = 0; j < hidden.cols(); ++j) {
        double lo = hidden(0, j);
        double hi = hidden(0, j);
        for (std::size_t i = 1; i < hidden.rows(); ++i) {
          lo = std::min(lo, hidden(i, j));
          hi = std::max(hi, hidden(i, j));
        }
        s.low.push_back(lo);
        s.high.push_back(hi);
      }
      state = std::move(s);
      break;
    }
    case SamplerKind::kEmpiricalJoint:
      state = EmpiricalJointState{std::move(hidden)};
      break;
    case SamplerKind::kGaussianKde: {
      std::vector<double> bandwidth = options.kde_bandwidth.value_or(SilvermanBandwidths(hidden));
      if (bandwidth.size() != hidden.cols()) throw InvalidArgument("KDE bandwidth length mismatch");
      for (double& b : bandwidth) {
        if (!(b > 0.0)) throw InvalidArgument("KDE bandwidths must be positive");
        b = std::max(b, kBandwidthFloor);
      }
      state = KdeState{std::move(hidden), std::move(bandwidth)};
      break;
    }
    case SamplerKind::kMicePmm:
      state = FitMice(X_full, partition, nullptr, options);
      break;
    case SamplerKind::kMicePmmLabel:
      state = FitMice(X_full, partition, labels, options);
      break;
  }
  return HiddenFeatureSampler(kind, partition, std::move(state), seed);
}

}  // namespace synlabel
