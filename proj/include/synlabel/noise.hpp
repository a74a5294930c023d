#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "json.hpp"
#include "synlabel/data_model.hpp"
#include "synlabel/random.hpp"

namespace synlabel {

// C x C row-stochastic matrix; entry (c, k) is the probability that true
// class c is observed as k. Every diagonal entry equals 1 - rate.
class TransitionMatrix {
 public:
  // Throws InvalidArgument if rows do not sum to 1 within 1e-12, an entry
  // leaves [0, 1], or the diagonal is not constant.
  explicit TransitionMatrix(Matrix matrix);

  std::size_t classes() const { return matrix_.rows(); }
  double rate() const { return 1.0 - matrix_(0, 0); }
  double operator()(std::size_t from, std::size_t to) const { return matrix_(from, to); }
  const Matrix& matrix() const { return matrix_; }

  // Row-major nested arrays.
  nlohmann::json ToJson() const;
  static TransitionMatrix FromJson(const nlohmann::json& j);

 private:
  Matrix matrix_;
};

inline constexpr double kTransitionTolerance = 1e-12;

// Uniform (NCAR) noise: diagonal 1 - r, off-diagonal r / (C - 1).
TransitionMatrix NcarMatrix(std::size_t classes, double rate);

// Class-conditional (NAR) noise: diagonal 1 - r, each row's off-diagonal mass
// r split in proportion to i.i.d. Uniform(0,1) draws. The draws depend only
// on the stream, so one stream yields one matrix shape at every r.
TransitionMatrix NarRandomMatrix(std::size_t classes, double rate, const Stream& stream);

// Each row p becomes p * T. Exact, no randomness.
SoftLabelMatrix ApplyToSoft(const SoftLabelMatrix& soft, const TransitionMatrix& T);
// Row vector times matrix for a single distribution.
std::vector<double> ApplyToDistribution(std::span<const double> p, const Matrix& T);

// Label i is replaced by a draw from row labels[i] of T using stream.Derive(i).
HardLabelVector ApplyToHard(const HardLabelVector& labels, const TransitionMatrix& T, const Stream& stream);

inline constexpr double kRatioDenominatorFloor = 1e-12;

// Instance hardness used for instance-dependent (NNAR) noise: the ratio of
// an instance's distance to its nearest same-label neighbour over its
// distance to its nearest other-label neighbour. The instances with the
// largest ratios are boosted.
struct InstanceNoiseProfile {
  std::vector<double> ratio;
  std::vector<bool> boosted;

  std::size_t size() const { return ratio.size(); }
  std::size_t boosted_count() const;
};

// Euclidean distances over all columns. A label with a single member has
// ratio +inf; an other-label distance of zero is floored at 1e-12. The
// ceil(n * boost_fraction) largest ratios are boosted, ties to lower index.
InstanceNoiseProfile ComputeInstanceProfile(const FeatureMatrix& X, const HardLabelVector& labels,
                                            double boost_fraction = 0.5);

// Boosted rows get T applied twice in sequence, the others once.
SoftLabelMatrix ApplyNnar(const SoftLabelMatrix& soft, const InstanceNoiseProfile& profile,
                          const TransitionMatrix& T);
// Boosted labels are drawn twice in sequence (both draws from stream.Derive(i)).
HardLabelVector ApplyNnar(const HardLabelVector& labels, const InstanceNoiseProfile& profile,
                          const TransitionMatrix& T, const Stream& stream);

struct CalibrationResult {
  double rate = 0.0;
  double achieved_mean_tvd = 0.0;
  std::size_t iterations = 0;
};

using MatrixBuilder = std::function<TransitionMatrix(double rate)>;

// Bisection on r in [0, 1] until |MeanTvd(reference, reference * T_r) - target|
// <= tolerance, at most 60 iterations. Throws InvalidArgument when the target
// exceeds what r = 1 achieves; the message reports that maximum.
CalibrationResult CalibrateRate(double target_mean_tvd, const SoftLabelMatrix& reference,
                                const MatrixBuilder& builder, double tolerance = 1e-3);

}  // namespace synlabel
