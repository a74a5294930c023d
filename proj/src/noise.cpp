#include "synlabel/noise.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "synlabel/errors.hpp"
#include "synlabel/metrics.hpp"
#include "synlabel/truth_functions.hpp"

namespace synlabel {
namespace {

void CheckRate(double rate) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw InvalidArgument("noise rate must lie in [0, 1]");
}

void CheckProfile(const InstanceNoiseProfile& profile, std::size_t n) {
  if (profile.size() != n || profile.boosted.size() != n) {
    throw InvalidArgument("instance profile length does not match the label count");
  }
}

ClassId Flip(ClassId label, const TransitionMatrix& T, Stream& stream) {
  return SampleCategorical(T.matrix().row(label), stream.Uniform());
}

}  // namespace

TransitionMatrix::TransitionMatrix(Matrix matrix) : matrix_(std::move(matrix)) {
  const std::size_t C = matrix_.rows();
  if (C < 2 || matrix_.cols() != C) throw InvalidArgument("transition matrix must be square with C >= 2");
  const double diag = matrix_(0, 0);
  for (std::size_t r = 0; r < C; ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      const double v = matrix_(r, c);
      if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("transition matrix entries must lie in [0, 1]");
      sum += v;
    }
    if (!(std::abs(sum - 1.0) <= kTransitionTolerance)) {
      throw InvalidArgument("transition matrix row " + std::to_string(r) + " does not sum to 1");
    }
    if (matrix_(r, r) != diag) throw InvalidArgument("transition matrix diagonal must be constant");
  }
}

nlohmann::json TransitionMatrix::ToJson() const {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < matrix_.rows(); ++r) {
    rows.push_back(std::vector<double>(matrix_.row(r).begin(), matrix_.row(r).end()));
  }
  return rows;
}

TransitionMatrix TransitionMatrix::FromJson(const nlohmann::json& j) {
  return TransitionMatrix(Matrix::FromRows(j.get<std::vector<std::vector<double>>>()));
}

TransitionMatrix NcarMatrix(std::size_t classes, double rate) {
  CheckRate(rate);
  if (classes < 2) throw InvalidArgument("NCAR matrix needs at least 2 classes");
  const double off = rate / static_cast<double>(classes - 1);
  Matrix m(classes, classes, off);
  for (std::size_t c = 0; c < classes; ++c) m(c, c) = 1.0 - rate;
  return TransitionMatrix(std::move(m));
}

TransitionMatrix NarRandomMatrix(std::size_t classes, double rate, const Stream& stream) {
  CheckRate(rate);
  if (classes < 2) throw InvalidArgument("NAR matrix needs at least 2 classes");
  Matrix m(classes, classes);
  for (std::size_t r = 0; r < classes; ++r) {
    Stream row_stream = stream.Derive(r);
    std::vector<double> weights(classes, 0.0);
    double total = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      if (c == r) continue;
      // (0, 1]: a zero weight everywhere would leave the row undefined.
      weights[c] = 1.0 - row_stream.Uniform();
      total += weights[c];
    }
    for (std::size_t c = 0; c < classes; ++c) m(r, c) = (c == r) ? 1.0 - rate : rate * weights[c] / total;
  }
  return TransitionMatrix(std::move(m));
}

std::vector<double> ApplyToDistribution(std::span<const double> p, const Matrix& T) {
  if (p.size() != T.rows()) throw InvalidArgument("distribution length does not match transition matrix");
  std::vector<double> out(T.cols(), 0.0);
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] == 0.0) continue;
    for (std::size_t c = 0; c < T.cols(); ++c) out[c] += p[k] * T(k, c);
  }
  return out;
}

SoftLabelMatrix ApplyToSoft(const SoftLabelMatrix& soft, const TransitionMatrix& T) {
  if (soft.classes() != T.classes()) {
    throw InvalidArgument("soft labels have " + std::to_string(soft.classes()) + " classes, matrix has " +
                          std::to_string(T.classes()));
  }
  Matrix out(soft.rows(), soft.classes());
  for (std::size_t i = 0; i < soft.rows(); ++i) {
    const auto row = ApplyToDistribution(soft.row(i), T.matrix());
    std::copy(row.begin(), row.end(), out.row(i).begin());
  }
  return SoftLabelMatrix(std::move(out));
}

HardLabelVector ApplyToHard(const HardLabelVector& labels, const TransitionMatrix& T, const Stream& stream) {
  std::vector<ClassId> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= T.classes()) throw InvalidArgument("label out of range for transition matrix");
    Stream row_stream = stream.Derive(i);
    out[i] = Flip(labels[i], T, row_stream);
  }
  return HardLabelVector(std::move(out));
}

std::size_t InstanceNoiseProfile::boosted_count() const {
  return static_cast<std::size_t>(std::count(boosted.begin(), boosted.end(), true));
}

InstanceNoiseProfile ComputeInstanceProfile(const FeatureMatrix& X, const HardLabelVector& labels,
                                            double boost_fraction) {
  if (X.rows() != labels.size()) throw InvalidArgument("feature rows and label count differ");
  if (!(boost_fraction >= 0.0 && boost_fraction <= 1.0)) throw InvalidArgument("boost fraction must lie in [0, 1]");
  const std::size_t n = labels.size();
  const double inf = std::numeric_limits<double>::infinity();
  InstanceNoiseProfile profile;
  profile.ratio.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double same = inf;
    double other = inf;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i) continue;
      double ss = 0.0;
      for (std::size_t j = 0; j < X.cols(); ++j) {
        const double d = X(i, j) - X(k, j);
        ss += d * d;
      }
      if (labels[k] == labels[i]) {
        same = std::min(same, ss);
      } else {
        other = std::min(other, ss);
      }
    }
    same = std::sqrt(same);
    other = std::sqrt(other);
    if (std::isinf(same)) {
      profile.ratio[i] = inf;
    } else if (std::isinf(other)) {
      profile.ratio[i] = 0.0;
    } else {
      profile.ratio[i] = same / std::max(other, kRatioDenominatorFloor);
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return profile.ratio[a] > profile.ratio[b]; });
  const auto boosted = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * boost_fraction));
  profile.boosted.assign(n, false);
  for (std::size_t k = 0; k < std::min(boosted, n); ++k) profile.boosted[order[k]] = true;
  return profile;
}

SoftLabelMatrix ApplyNnar(const SoftLabelMatrix& soft, const InstanceNoiseProfile& profile,
                          const TransitionMatrix& T) {
  CheckProfile(profile, soft.rows());
  if (soft.classes() != T.classes()) throw InvalidArgument("soft labels and transition matrix differ in classes");
  Matrix out(soft.rows(), soft.classes());
  for (std::size_t i = 0; i < soft.rows(); ++i) {
    auto row = ApplyToDistribution(soft.row(i), T.matrix());
    if (profile.boosted[i]) row = ApplyToDistribution(row, T.matrix());
    std::copy(row.begin(), row.end(), out.row(i).begin());
  }
  return SoftLabelMatrix(std::move(out));
}

HardLabelVector ApplyNnar(const HardLabelVector& labels, const InstanceNoiseProfile& profile,
                          const TransitionMatrix& T, const Stream& stream) {
  CheckProfile(profile, labels.size());
  std::vector<ClassId> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= T.classes()) throw InvalidArgument("label out of range for transition matrix");
    Stream row_stream = stream.Derive(i);
    ClassId label = Flip(labels[i], T, row_stream);
    if (profile.boosted[i]) label = Flip(label, T, row_stream);
    out[i] = label;
  }
  return HardLabelVector(std::move(out));
}

CalibrationResult CalibrateRate(double target_mean_tvd, const SoftLabelMatrix& reference,
                                const MatrixBuilder& builder, double tolerance) {
  if (!(tolerance > 0.0)) throw InvalidArgument("calibration tolerance must be positive");
  auto achieved = [&](double r) { return MeanTvd(reference, ApplyToSoft(reference, builder(r))); };

  CalibrationResult result;
  const double at_zero = achieved(0.0);
  if (std::abs(at_zero - target_mean_tvd) <= tolerance) return {0.0, at_zero, 0};
  const double at_one = achieved(1.0);
  if (std::abs(at_one - target_mean_tvd) <= tolerance) return {1.0, at_one, 0};
  if (target_mean_tvd > at_one || target_mean_tvd < at_zero) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "target mean TVD %.6g is not achievable; achievable range is [%.6g, %.6g]",
                  target_mean_tvd, at_zero, at_one);
    throw InvalidArgument(buf);
  }

  double lo = 0.0;
  double hi = 1.0;
  for (std::size_t it = 1; it <= 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double value = achieved(mid);
    result = {mid, value, it};
    if (std::abs(value - target_mean_tvd) <= tolerance) return result;
    if (value < target_mean_tvd) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return result;
}

}  // namespace synlabel
