#include "synlabel/transforms.hpp"

#include <algorithm>
#include <cmath>

#include "synlabel/errors.hpp"
#include "synlabel/metrics.hpp"
#include "synlabel/parallel.hpp"

namespace synlabel {

PartialGroundTruthDataset FeatureHide(const GroundTruthDataset& gt, const FeatureHidingConfig& cfg) {
  const FeaturePartition& partition = cfg.partition;
  const std::size_t d = gt.features().cols();
  if (partition.feature_count() != d) {
    throw InvalidArgument("partition covers " + std::to_string(partition.feature_count()) +
                          " features, dataset has " + std::to_string(d));
  }
  if (cfg.samples_per_instance < 1) throw InvalidArgument("samples_per_instance must be at least 1");
  const bool hides = !partition.hidden().empty();
  if (hides && !cfg.sampler) throw InvalidArgument("feature hiding needs a sampler when features are hidden");
  if (cfg.sampler && !(cfg.sampler->partition() == partition)) {
    throw InvalidArgument("sampler was fitted for a different feature partition");
  }

  const FeatureMatrix kept = gt.features().SelectColumns(partition.kept());
  const std::size_t n = gt.size();
  const std::size_t C = gt.schema().class_count();
  const TruthFunction& f = *gt.truth_fn();

  nlohmann::json params = {{"partition", partition.ToJson()}, {"samples_per_instance", cfg.samples_per_instance}};
  nlohmann::json descriptor = cfg.sampler ? cfg.sampler->Descriptor() : nlohmann::json(nullptr);
  params["sampler"] = descriptor;

  Matrix probs(n, C);
  if (!hides) {
    probs = OneHot(gt.labels(), gt.schema()).probs();
  } else {
    const HiddenFeatureSampler& sampler = *cfg.sampler;
    const Stream root(cfg.seed);
    const std::size_t draws = cfg.samples_per_instance;
    const double weight = 1.0 / static_cast<double>(draws);
    ParallelFor(n, cfg.threads, [&](std::size_t i) {
      std::optional<ClassId> label;
      if (sampler.needs_label()) label = gt.labels()[i];
      const Matrix hidden = sampler.Sample(kept.row(i), label, draws, root.Derive(i));
      std::vector<double> full(d);
      for (std::size_t k = 0; k < partition.kept().size(); ++k) full[partition.kept()[k]] = kept(i, k);
      std::vector<std::size_t> counts(C, 0);
      for (std::size_t j = 0; j < draws; ++j) {
        for (std::size_t k = 0; k < partition.hidden().size(); ++k) full[partition.hidden()[k]] = hidden(j, k);
        const ClassId c = f.PredictRow(full);
        if (c >= C) throw InvalidArgument("truth function returned a class outside the schema");
        ++counts[c];
      }
      for (std::size_t c = 0; c < C; ++c) probs(i, c) = static_cast<double>(counts[c]) * weight;
    });
  }

  Provenance provenance = gt.provenance();
  provenance.push_back({"feature_hide", std::move(params), cfg.seed});
  return PartialGroundTruthDataset(kept, partition, gt.truth_fn(), SoftLabelMatrix(std::move(probs)), gt.schema(),
                                   std::move(descriptor), std::move(provenance));
}

PartialGroundTruthDataset IdentityToPg(const GroundTruthDataset& gt) {
  const auto partition = FeaturePartition::KeepAll(gt.features().cols());
  Provenance provenance = gt.provenance();
  provenance.push_back({"identity_to_pg", nlohmann::json::object(), std::nullopt});
  return PartialGroundTruthDataset(gt.features(), partition, gt.truth_fn(), OneHot(gt.labels(), gt.schema()),
                                   gt.schema(), nullptr, std::move(provenance));
}

ObservedSoftDataset IdentityToOs(const PartialGroundTruthDataset& pg) {
  Provenance provenance = pg.provenance();
  provenance.push_back({"identity_to_os", nlohmann::json::object(), std::nullopt});
  return ObservedSoftDataset(pg.kept_features(), pg.soft_labels(), pg.schema(), std::move(provenance));
}

ObservedSoftDataset ApplyNoiseToPg(const PartialGroundTruthDataset& pg, const TransitionMatrix& T,
                                   const std::string& record_name, nlohmann::json parameters) {
  parameters["matrix"] = T.ToJson();
  parameters["rate"] = T.rate();
  Provenance provenance = pg.provenance();
  provenance.push_back({record_name, std::move(parameters), std::nullopt});
  return ObservedSoftDataset(pg.kept_features(), ApplyToSoft(pg.soft_labels(), T), pg.schema(),
                             std::move(provenance));
}

ObservedHardDataset Discretize(const ObservedSoftDataset& os, DecisionRule rule, std::uint64_t seed) {
  HardLabelVector labels = ApplyDecisionRule(os.soft_labels(), rule, Stream(seed));
  Provenance provenance = os.provenance();
  std::optional<std::uint64_t> used_seed;
  if (rule.kind == DecisionRuleKind::kSampleProportional) used_seed = seed;
  provenance.push_back({"discretize", {{"rule", rule.name()}}, used_seed});
  return ObservedHardDataset(os.features(), std::move(labels), os.schema(), std::move(provenance));
}

Reconstruction ReconstructGroundTruth(const ObservedHardDataset& observed, const LearnerParams& learner,
                                      std::uint64_t seed, std::size_t threads) {
  if (observed.size() < 2) throw InvalidArgument("reconstruction needs at least 2 rows");
  if (observed.features().cols() == 0) throw InvalidArgument("reconstruction needs at least one feature");
  const std::size_t C = observed.schema().class_count();
  TruthFunctionPtr model;
  nlohmann::json params;
  if (const auto* tree = std::get_if<TreeParams>(&learner)) {
    model = FitDecisionTree(observed.features(), observed.labels(), C, *tree, seed);
    params = {{"learner", "decision_tree"},
              {"max_depth", tree->max_depth == kUnlimitedDepth ? nlohmann::json(nullptr) : nlohmann::json(tree->max_depth)},
              {"min_samples_leaf", tree->min_samples_leaf},
              {"features_per_split", tree->features_per_split}};
  } else {
    ForestParams forest = std::get<ForestParams>(learner);
    forest.seed = seed;
    model = FitRandomForest(observed.features(), observed.labels(), C, forest, threads);
    params = forest.ToJson();
    params["learner"] = "random_forest";
  }
  auto truth = std::make_shared<const DiscretizedModel>(model);
  HardLabelVector labels = PredictHard(*truth, observed.features(), threads);
  const double disagreement = DisagreementRate(labels, observed.labels());
  params["disagreement_rate"] = disagreement;

  Provenance provenance = observed.provenance();
  provenance.push_back({"reconstruct", std::move(params), seed});
  return {GroundTruthDataset(observed.features(), std::move(labels), std::move(truth), observed.schema(),
                             std::move(provenance)),
          disagreement};
}

FeatureMatrix PerturbFeatures(const FeatureMatrix& X, const FeatureNoiseDescriptor& descriptor,
                              const Stream& stream) {
  std::vector<std::pair<std::size_t, double>> targets;
  for (const auto& [name, sigma] : descriptor) {
    const auto col = X.ColumnIndex(name);
    if (!col) throw InvalidArgument("unknown feature column '" + name + "'");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidArgument("noise sigma for '" + name + "' must be >= 0");
    targets.emplace_back(*col, sigma);
  }
  Matrix values = X.values();
  for (const auto& [col, sigma] : targets) {
    if (sigma == 0.0) continue;
    for (std::size_t i = 0; i < X.rows(); ++i) {
      Stream cell = stream.Derive({i, col});
      values(i, col) += sigma * cell.Normal();
    }
  }
  return FeatureMatrix(X.column_names(), std::move(values));
}

}  // namespace synlabel
