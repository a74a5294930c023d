#pragma once

// Synthetic stand-ins for the benchmark data, used when no CSV is supplied.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "json.hpp"
#include "synlabel/data_model.hpp"

namespace synlabel {

struct VehicleLikeParams {
  std::size_t rows = 846;
  // Probability that an observed label is replaced by a uniformly drawn class.
  double label_noise = 0.1;
  std::uint64_t seed = 0;
};

// 18 continuous features in three correlated blocks of six, 4 classes,
// noisy observed labels. Shaped after the vehicle silhouettes data.
ObservedHardDataset VehicleLike(const VehicleLikeParams& params);

struct LinearHiddenParams {
  std::size_t rows = 500;
  std::size_t kept = 5;
  std::size_t hidden = 5;
  std::size_t classes = 4;
  // Residual noise of each hidden column relative to its signal scale.
  double noise = 0.1;
  std::uint64_t seed = 0;
};

struct LinearHiddenData {
  GroundTruthDataset dataset;
  // Indices of the columns built as functions of the others.
  std::vector<std::size_t> hidden;
};

// Kept columns ~ N(0, 1); hidden column j = a_j . kept + noise * |a_j| * N(0, 1).
// f^G is a closed-form linear argmax over all columns.
LinearHiddenData LinearHidden(const LinearHiddenParams& params);

}  // namespace synlabel
