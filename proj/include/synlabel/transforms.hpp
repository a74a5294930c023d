#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <variant>

#include "synlabel/data_model.hpp"
#include "synlabel/noise.hpp"
#include "synlabel/random.hpp"
#include "synlabel/samplers.hpp"
#include "synlabel/truth_functions.hpp"

namespace synlabel {

struct FeatureHidingConfig {
  FeaturePartition partition;
  // May be null only when nothing is hidden.
  std::shared_ptr<const HiddenFeatureSampler> sampler;
  std::size_t samples_per_instance = 100;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

// y[i, c] = (1/n) * #{ j : f(x_i kept, x'_ij hidden) = c }, with the hidden
// values of draw j for instance i taken from stream (seed, i, j). Every
// entry is a multiple of 1/n. Kept features are copied bit-for-bit.
PartialGroundTruthDataset FeatureHide(const GroundTruthDataset& gt, const FeatureHidingConfig& cfg);

// Soft labels become one_hot(y); nothing is hidden.
PartialGroundTruthDataset IdentityToPg(const GroundTruthDataset& gt);
// X^O = X^PG, y^OS = y^PG.
ObservedSoftDataset IdentityToOs(const PartialGroundTruthDataset& pg);

ObservedSoftDataset ApplyNoiseToPg(const PartialGroundTruthDataset& pg, const TransitionMatrix& T,
                                   const std::string& record_name, nlohmann::json parameters);

ObservedHardDataset Discretize(const ObservedSoftDataset& os, DecisionRule rule, std::uint64_t seed);

using LearnerParams = std::variant<TreeParams, ForestParams>;

struct Reconstruction {
  GroundTruthDataset dataset;
  // Fraction of rows where the new y^G differs from the observed labels.
  double disagreement_rate = 0.0;
};

// Learns f^O on (X^O, y^OH) and sets f^G = argmax o f^O, X^G = X^O and
// y^G = f^G(X^O). For a tree learner `seed` drives the tree; for a forest
// it overrides ForestParams::seed.
Reconstruction ReconstructGroundTruth(const ObservedHardDataset& observed, const LearnerParams& learner,
                                      std::uint64_t seed, std::size_t threads = 1);

// Column name -> Gaussian standard deviation.
using FeatureNoiseDescriptor = std::map<std::string, double>;

// Adds N(0, sigma^2) to every cell of the named columns; cell (i, j) uses
// stream.Derive({i, j}). Other columns are untouched.
FeatureMatrix PerturbFeatures(const FeatureMatrix& X, const FeatureNoiseDescriptor& descriptor,
                              const Stream& stream);

}  // namespace synlabel
