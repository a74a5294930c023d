#include "synlabel/synthetic.hpp"

#include <cmath>
#include <cstdio>

#include "synlabel/errors.hpp"
#include "synlabel/random.hpp"
#include "synlabel/truth_functions.hpp"

namespace synlabel {
namespace {

std::string ColumnName(const char* prefix, std::size_t j) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%02zu", prefix, j);
  return buf;
}

}  // namespace

ObservedHardDataset VehicleLike(const VehicleLikeParams& params) {
  if (params.rows < 2) throw InvalidArgument("vehicle_like needs at least 2 rows");
  if (!(params.label_noise >= 0.0 && params.label_noise <= 1.0)) {
    throw InvalidArgument("label_noise must lie in [0, 1]");
  }
  constexpr std::size_t kClasses = 4;
  constexpr std::size_t kBlocks = 3;
  constexpr std::size_t kLatent = 2;  // per block
  constexpr std::size_t kPerBlock = 6;
  const Stream root(params.seed);

  // Class centres in latent space and per-feature loadings, offsets, scales.
  Stream shape = root.Derive(0);
  double centre[kClasses][kBlocks * kLatent];
  for (auto& c : centre) {
    for (double& v : c) v = 1.5 * shape.Normal();
  }
  double loading[kBlocks * kPerBlock][kLatent];
  double offset[kBlocks * kPerBlock];
  double scale[kBlocks * kPerBlock];
  for (std::size_t f = 0; f < kBlocks * kPerBlock; ++f) {
    for (double& v : loading[f]) v = shape.Normal();
    offset[f] = 50.0 + 100.0 * shape.Uniform();
    scale[f] = 2.0 + 8.0 * shape.Uniform();
  }

  const std::size_t d = kBlocks * kPerBlock;
  Matrix X(params.rows, d);
  std::vector<ClassId> labels(params.rows);
  for (std::size_t i = 0; i < params.rows; ++i) {
    Stream s = root.Derive({1, i});
    const auto cls = static_cast<ClassId>(s.UniformIndex(kClasses));
    double z[kBlocks * kLatent];
    for (std::size_t q = 0; q < kBlocks * kLatent; ++q) z[q] = centre[cls][q] + s.Normal();
    for (std::size_t f = 0; f < d; ++f) {
      const std::size_t b = f / kPerBlock;
      double v = 0.0;
      for (std::size_t q = 0; q < kLatent; ++q) v += loading[f][q] * z[b * kLatent + q];
      X(i, f) = offset[f] + scale[f] * (v + 0.3 * s.Normal());
    }
    labels[i] = s.Uniform() < params.label_noise ? static_cast<ClassId>(s.UniformIndex(kClasses)) : cls;
  }

  std::vector<std::string> names;
  for (std::size_t f = 0; f < d; ++f) names.push_back(ColumnName("f", f));
  nlohmann::json record = {{"generator", "vehicle_like"}, {"rows", params.rows}, {"label_noise", params.label_noise}};
  return ObservedHardDataset(FeatureMatrix(std::move(names), std::move(X)), HardLabelVector(std::move(labels)),
                             LabelSchema({"bus", "opel", "saab", "van"}),
                             {{"synthetic", std::move(record), params.seed}});
}

LinearHiddenData LinearHidden(const LinearHiddenParams& params) {
  if (params.rows < 2 || params.kept < 1 || params.classes < 2) {
    throw InvalidArgument("linear_hidden needs rows >= 2, kept >= 1 and classes >= 2");
  }
  const std::size_t k = params.kept;
  const std::size_t h = params.hidden;
  const std::size_t d = k + h;
  const Stream root(params.seed);

  Stream shape = root.Derive(0);
  Matrix A(h, k);
  std::vector<double> norm(h, 0.0);
  for (std::size_t j = 0; j < h; ++j) {
    for (std::size_t q = 0; q < k; ++q) {
      A(j, q) = shape.Normal() / std::sqrt(static_cast<double>(k));
      norm[j] += A(j, q) * A(j, q);
    }
    norm[j] = std::sqrt(norm[j]);
  }
  Matrix W(params.classes, d);
  for (std::size_t c = 0; c < params.classes; ++c) {
    for (std::size_t j = 0; j < d; ++j) W(c, j) = shape.Normal();
  }

  Matrix X(params.rows, d);
  for (std::size_t i = 0; i < params.rows; ++i) {
    Stream s = root.Derive({1, i});
    for (std::size_t q = 0; q < k; ++q) X(i, q) = s.Normal();
    for (std::size_t j = 0; j < h; ++j) {
      double v = 0.0;
      for (std::size_t q = 0; q < k; ++q) v += A(j, q) * X(i, q);
      X(i, k + j) = v + params.noise * norm[j] * s.Normal();
    }
  }

  std::vector<std::string> names;
  for (std::size_t q = 0; q < d; ++q) names.push_back(ColumnName("x", q));
  auto truth = std::make_shared<const LinearArgmaxFunction>(W, std::vector<double>(params.classes, 0.0));
  nlohmann::json record = {{"generator", "linear_hidden"}, {"rows", params.rows}, {"kept", k},
                           {"hidden", h},                  {"classes", params.classes}, {"noise", params.noise}};
  LinearHiddenData out{GroundTruthDataset::FromTruthFunction(FeatureMatrix(std::move(names), std::move(X)), truth,
                                                             LabelSchema::WithClassCount(params.classes),
                                                             {{"synthetic", std::move(record), params.seed}}),
                       {}};
  for (std::size_t j = 0; j < h; ++j) out.hidden.push_back(k + j);
  return out;
}

}  // namespace synlabel
