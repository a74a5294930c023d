#include <cstdio>
#include <fstream>
#include <set>

#include "config_util.hpp"
#include "synlabel/errors.hpp"
#include "synlabel/harness.hpp"
#include "synlabel/noise.hpp"
#include "synlabel/synthetic.hpp"
#include "synlabel/transforms.hpp"

namespace synlabel {
namespace {

using config::Get;
using config::Require;

const std::set<std::string>& StageKinds() {
  static const std::set<std::string> kinds = {"reconstruct", "feature_hide", "identity",         "noise_soft",
                                              "noise_hard",  "nnar",         "discretize",       "perturb_features",
                                              "annotate",    "measure"};
  return kinds;
}

struct ChainState {
  std::optional<GroundTruthDataset> gt;
  std::optional<PartialGroundTruthDataset> pg;
  std::optional<AnyDataset> current;
};

std::string StageName(std::size_t index, const std::string& kind) {
  return "stage " + std::to_string(index) + " (" + kind + ")";
}

bool IsSoft(DatasetKind k) { return k == DatasetKind::kPartialGroundTruth || k == DatasetKind::kObservedSoft; }

void CheckMatrixParams(const nlohmann::json& p, const std::string& where) {
  const auto matrix = Get<std::string>(p, "matrix", "ncar", where);
  if (matrix != "ncar" && matrix != "nar") throw ConfigError(where + ": matrix must be 'ncar' or 'nar'");
  const double rate = Require<double>(p, "rate", where);
  if (!(rate >= 0.0 && rate <= 1.0)) throw ConfigError(where + ": rate must lie in [0, 1]");
}

TransitionMatrix BuildMatrix(const nlohmann::json& p, std::size_t classes, std::uint64_t seed) {
  const auto matrix = Get<std::string>(p, "matrix", "ncar", "noise");
  const double rate = p.at("rate").get<double>();
  if (matrix == "nar") return NarRandomMatrix(classes, rate, Stream(seed));
  return NcarMatrix(classes, rate);
}

LearnerParams LearnerFromJson(const nlohmann::json& p, const std::string& where) {
  const auto learner = Get<std::string>(p, "learner", "random_forest", where);
  if (learner == "random_forest") return ForestParamsFromJson(p.value("forest", nlohmann::json::object()));
  if (learner == "decision_tree") {
    const auto t = p.value("tree", nlohmann::json::object());
    TreeParams tree;
    if (t.contains("max_depth") && !t["max_depth"].is_null()) tree.max_depth = Get<std::size_t>(t, "max_depth", 0, where);
    tree.min_samples_leaf = Get<std::size_t>(t, "min_samples_leaf", 1, where);
    tree.features_per_split = Get<std::size_t>(t, "features_per_split", 0, where);
    return tree;
  }
  throw ConfigError(where + ": learner must be 'random_forest' or 'decision_tree'");
}

// Stage parameter checks that do not need the data.
void CheckStageParams(const StageConfig& stage, const std::string& where) {
  const auto& p = stage.params;
  config::RequireObject(p, where);
  if (stage.kind == "reconstruct") {
    config::AllowKeys(p, {"learner", "forest", "tree"}, where);
    LearnerFromJson(p, where);
  } else if (stage.kind == "feature_hide") {
    config::AllowKeys(p, {"hidden", "hide_count", "sampler", "samples", "kde_bandwidth", "mice_donors",
                          "mice_iterations"},
                      where);
    if (p.contains("hidden") == p.contains("hide_count")) {
      throw ConfigError(where + ": give exactly one of 'hidden' or 'hide_count'");
    }
    if (p.contains("hidden")) Require<std::vector<std::string>>(p, "hidden", where);
    if (p.contains("hide_count")) Require<std::size_t>(p, "hide_count", where);
    try {
      ParseSamplerKind(Get<std::string>(p, "sampler", "gaussian_kde", where));
    } catch (const InvalidArgument& e) {
      throw ConfigError(where + ": " + e.what());
    }
    if (Get<std::size_t>(p, "samples", 100, where) < 1) throw ConfigError(where + ": samples must be at least 1");
  } else if (stage.kind == "identity") {
    config::AllowKeys(p, {}, where);
  } else if (stage.kind == "noise_soft" || stage.kind == "noise_hard") {
    config::AllowKeys(p, {"matrix", "rate"}, where);
    CheckMatrixParams(p, where);
  } else if (stage.kind == "nnar") {
    config::AllowKeys(p, {"matrix", "rate", "boost_fraction"}, where);
    CheckMatrixParams(p, where);
    const double b = Get<double>(p, "boost_fraction", 0.5, where);
    if (!(b >= 0.0 && b <= 1.0)) throw ConfigError(where + ": boost_fraction must lie in [0, 1]");
  } else if (stage.kind == "discretize") {
    config::AllowKeys(p, {"rule"}, where);
    try {
      DecisionRule::FromName(Get<std::string>(p, "rule", "argmax", where));
    } catch (const InvalidArgument& e) {
      throw ConfigError(where + ": " + e.what());
    }
  } else if (stage.kind == "perturb_features") {
    config::AllowKeys(p, {"columns"}, where);
    const auto cols = Require<std::map<std::string, double>>(p, "columns", where);
    for (const auto& [name, sigma] : cols) {
      if (!(sigma >= 0.0)) throw ConfigError(where + ": sigma for '" + name + "' must be >= 0");
    }
  } else if (stage.kind == "annotate") {
    config::AllowKeys(p, {"annotators"}, where);
    const auto& list = p.contains("annotators") ? p["annotators"] : nlohmann::json();
    if (!list.is_array() || list.empty()) throw ConfigError(where + ": 'annotators' must be a non-empty array");
    for (const auto& a : list) {
      config::RequireObject(a, where);
      config::AllowKeys(a, {"visible", "model", "forest", "confidence_noise"}, where);
      if (Require<std::vector<std::string>>(a, "visible", where).empty()) {
        throw ConfigError(where + ": annotator visible feature set is empty");
      }
      const auto model = Get<std::string>(a, "model", "forest", where);
      if (model != "truth" && model != "forest") throw ConfigError(where + ": annotator model must be 'truth' or 'forest'");
      if (Get<double>(a, "confidence_noise", 0.0, where) < 0.0) throw ConfigError(where + ": confidence_noise must be >= 0");
    }
  } else if (stage.kind == "measure") {
    config::AllowKeys(p, {"reference", "per_instance"}, where);
    const auto ref = Get<std::string>(p, "reference", "G", where);
    if (ref != "G" && ref != "PG") throw ConfigError(where + ": reference must be 'G' or 'PG'");
  }
}

UncertaintyReport Measure(const ChainState& s, const nlohmann::json& p) {
  const auto ref_name = Get<std::string>(p, "reference", "G", "measure");
  const bool per_instance = Get<bool>(p, "per_instance", false, "measure");
  std::optional<SoftLabelMatrix> reference;
  if (ref_name == "G" && s.gt) reference = OneHot(s.gt->labels(), s.gt->schema());
  if (ref_name == "PG" && s.pg) reference = s.pg->soft_labels();
  if (!reference && ref_name == "PG") throw ConfigError("measure: reference PG requires feature_hide or identity upstream");

  UncertaintyReport report;
  const AnyDataset& cur = *s.current;
  std::optional<SoftLabelMatrix> soft;
  std::optional<HardLabelVector> hard;
  if (const auto* pg = std::get_if<PartialGroundTruthDataset>(&cur)) soft = pg->soft_labels();
  if (const auto* os = std::get_if<ObservedSoftDataset>(&cur)) soft = os->soft_labels();
  if (const auto* oh = std::get_if<ObservedHardDataset>(&cur)) hard = oh->labels();
  if (const auto* gt = std::get_if<GroundTruthDataset>(&cur)) hard = gt->labels();
  const std::size_t C = std::visit([](const auto& d) { return d.schema().class_count(); }, cur);
  if (hard) soft = OneHot(*hard, C);

  report.mean_entropy = MeanEntropy(*soft);
  if (per_instance) report.per_instance_entropy = RowEntropy(*soft);
  if (reference) {
    report.mean_tvd = MeanTvd(*reference, *soft);
    if (per_instance) report.per_instance_tvd = RowTvd(*reference, *soft);
  }
  if (hard && s.gt && ref_name == "G") {
    report.disagreement_rate = DisagreementRate(*hard, s.gt->labels());
    if (per_instance) {
      std::vector<int> flags(hard->size());
      for (std::size_t i = 0; i < hard->size(); ++i) flags[i] = (*hard)[i] != s.gt->labels()[i] ? 1 : 0;
      report.per_instance_disagreement = std::move(flags);
    }
  }
  report.named["rows"] = static_cast<double>(soft->rows());
  return report;
}

SoftLabelMatrix Annotate(const ChainState& s, const nlohmann::json& p, std::uint64_t seed, std::size_t threads) {
  const GroundTruthDataset& gt = *s.gt;
  const FeatureMatrix& base = gt.features();
  const FeatureMatrix* current = std::visit(
      [](const auto& d) -> const FeatureMatrix* {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, PartialGroundTruthDataset>) {
          return &d.kept_features();
        } else {
          return &d.features();
        }
      },
      *s.current);
  // X_full: ground-truth columns, replaced by same-named observed columns.
  Matrix values = base.values();
  for (std::size_t j = 0; j < base.cols(); ++j) {
    if (const auto c = current->ColumnIndex(base.column_names()[j])) {
      for (std::size_t i = 0; i < base.rows(); ++i) values(i, j) = (*current)(i, *c);
    }
  }
  const FeatureMatrix full(base.column_names(), std::move(values));

  std::vector<SoftLabelMatrix> outputs;
  const auto& list = p["annotators"];
  for (std::size_t a = 0; a < list.size(); ++a) {
    const auto names = list[a]["visible"].get<std::vector<std::string>>();
    std::vector<std::size_t> visible;
    for (const auto& name : names) {
      const auto c = full.ColumnIndex(name);
      if (!c) throw InvalidArgument("annotator " + std::to_string(a) + ": unknown feature '" + name + "'");
      visible.push_back(*c);
    }
    AnnotatorSpec spec;
    spec.visible_features = visible;
    if (Get<std::string>(list[a], "model", "forest", "annotate") == "truth") {
      for (std::size_t k = 0; k < visible.size(); ++k) {
        if (visible.size() != base.cols() || visible[k] != k) {
          throw InvalidArgument("annotator " + std::to_string(a) +
                                ": model 'truth' needs every ground-truth feature in column order");
        }
      }
      spec.model = gt.truth_fn();
    } else {
      ForestParams forest = ForestParamsFromJson(list[a].value("forest", nlohmann::json::object()));
      forest.seed = DeriveSeed(seed, 2 * a);
      spec.model = FitRandomForest(base.SelectColumns(visible), gt.labels(), gt.schema().class_count(), forest, threads);
    }
    const double sigma = Get<double>(list[a], "confidence_noise", 0.0, "annotate");
    if (sigma > 0.0) spec.confidence_noise = ConfidenceNoise{sigma};
    outputs.push_back(Annotator(std::move(spec)).Annotate(full, Stream(DeriveSeed(seed, 2 * a + 1))));
  }
  return AverageSoftLabels(outputs);
}

template <typename Fn>
auto WithStageContext(const std::string& where, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(where + ": " + e.what());
  } catch (const ParseError& e) {
    throw DataError(where + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(where + ": " + e.what());
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(where + ": " + e.what());
  } catch (const UnsupportedOperation& e) {
    throw UnsupportedOperation(where + ": " + e.what());
  } catch (const Error& e) {
    throw Error(where + ": " + e.what());
  }
}

void RunStage(ChainState& s, const StageConfig& stage, std::size_t index, const PipelineConfig& cfg) {
  const auto& p = stage.params;
  const std::uint64_t seed = DeriveSeed(cfg.master_seed, index);
  const AnyDataset& cur = *s.current;
  const std::size_t C = std::visit([](const auto& d) { return d.schema().class_count(); }, cur);

  if (stage.kind == "reconstruct") {
    auto result = ReconstructGroundTruth(std::get<ObservedHardDataset>(cur), LearnerFromJson(p, "reconstruct"), seed,
                                         cfg.threads);
    s.gt = result.dataset;
    s.pg.reset();
    s.current = std::move(result.dataset);
  } else if (stage.kind == "feature_hide") {
    const auto& gt = std::get<GroundTruthDataset>(cur);
    std::vector<std::size_t> hidden;
    if (p.contains("hidden")) {
      for (const auto& name : p["hidden"].get<std::vector<std::string>>()) {
        const auto c = gt.features().ColumnIndex(name);
        if (!c) throw InvalidArgument("unknown feature '" + name + "'");
        hidden.push_back(*c);
      }
    } else {
      const auto k = p["hide_count"].get<std::size_t>();
      if (k > gt.features().cols()) throw ConfigError("hide_count exceeds the feature count");
      const auto order = HidingOrder(gt, std::nullopt);
      hidden.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    }
    const auto partition = FeaturePartition::Hiding(gt.features().cols(), hidden);
    FeatureHidingConfig fh{partition, nullptr, Get<std::size_t>(p, "samples", 100, "feature_hide"),
                           DeriveSeed(seed, 1), cfg.threads};
    if (!partition.hidden().empty()) {
      SamplerOptions options;
      if (p.contains("kde_bandwidth")) options.kde_bandwidth = p["kde_bandwidth"].get<std::vector<double>>();
      options.mice_donors = Get<std::size_t>(p, "mice_donors", 5, "feature_hide");
      options.mice_iterations = Get<std::size_t>(p, "mice_iterations", 5, "feature_hide");
      const auto kind = ParseSamplerKind(Get<std::string>(p, "sampler", "gaussian_kde", "feature_hide"));
      fh.sampler = std::make_shared<const HiddenFeatureSampler>(
          FitSampler(kind, gt.features(), partition, &gt.labels(), DeriveSeed(seed, 0), options));
    }
    s.pg = FeatureHide(gt, fh);
    s.current = *s.pg;
  } else if (stage.kind == "identity") {
    if (const auto* gt = std::get_if<GroundTruthDataset>(&cur)) {
      s.pg = IdentityToPg(*gt);
      s.current = *s.pg;
    } else {
      s.current = IdentityToOs(std::get<PartialGroundTruthDataset>(cur));
    }
  } else if (stage.kind == "noise_soft") {
    const TransitionMatrix T = BuildMatrix(p, C, seed);
    nlohmann::json params = {{"kind", Get<std::string>(p, "matrix", "ncar", "")}};
    if (const auto* pg = std::get_if<PartialGroundTruthDataset>(&cur)) {
      s.current = ApplyNoiseToPg(*pg, T, "noise_soft", params);
    } else {
      const auto& os = std::get<ObservedSoftDataset>(cur);
      params["matrix"] = T.ToJson();
      params["rate"] = T.rate();
      s.current = ObservedSoftDataset(os.features(), ApplyToSoft(os.soft_labels(), T), os.schema(), os.provenance())
                      .WithRecord({"noise_soft", params, seed});
    }
  } else if (stage.kind == "noise_hard") {
    const TransitionMatrix T = BuildMatrix(p, C, seed);
    const auto& oh = std::get<ObservedHardDataset>(cur);
    nlohmann::json params = {{"kind", Get<std::string>(p, "matrix", "ncar", "")}, {"matrix", T.ToJson()}, {"rate", T.rate()}};
    s.current = ObservedHardDataset(oh.features(), ApplyToHard(oh.labels(), T, Stream(DeriveSeed(seed, 1))),
                                    oh.schema(), oh.provenance())
                    .WithRecord({"noise_hard", params, seed});
  } else if (stage.kind == "nnar") {
    const TransitionMatrix T = BuildMatrix(p, C, seed);
    const double boost = Get<double>(p, "boost_fraction", 0.5, "nnar");
    const auto* oh = std::get_if<ObservedHardDataset>(&cur);
    const InstanceNoiseProfile profile = s.gt ? ComputeInstanceProfile(s.gt->features(), s.gt->labels(), boost)
                                              : ComputeInstanceProfile(oh->features(), oh->labels(), boost);
    nlohmann::json params = {{"kind", Get<std::string>(p, "matrix", "ncar", "")},
                             {"matrix", T.ToJson()},
                             {"rate", T.rate()},
                             {"boost_fraction", boost},
                             {"boosted", profile.boosted_count()},
                             {"application", "double"},
                             {"profile_source", s.gt ? "ground_truth" : "observed"}};
    if (oh) {
      s.current = ObservedHardDataset(oh->features(), ApplyNnar(oh->labels(), profile, T, Stream(DeriveSeed(seed, 1))),
                                      oh->schema(), oh->provenance())
                      .WithRecord({"nnar", params, seed});
    } else if (const auto* pg = std::get_if<PartialGroundTruthDataset>(&cur)) {
      s.current = ObservedSoftDataset(pg->kept_features(), ApplyNnar(pg->soft_labels(), profile, T), pg->schema(),
                                      pg->provenance())
                      .WithRecord({"nnar", params, seed});
    } else {
      const auto& os = std::get<ObservedSoftDataset>(cur);
      s.current = ObservedSoftDataset(os.features(), ApplyNnar(os.soft_labels(), profile, T), os.schema(),
                                      os.provenance())
                      .WithRecord({"nnar", params, seed});
    }
  } else if (stage.kind == "discretize") {
    s.current = Discretize(std::get<ObservedSoftDataset>(cur),
                           DecisionRule::FromName(Get<std::string>(p, "rule", "argmax", "discretize")), seed);
  } else if (stage.kind == "perturb_features") {
    const auto cols = p["columns"].get<FeatureNoiseDescriptor>();
    nlohmann::json params = {{"columns", cols}};
    if (const auto* os = std::get_if<ObservedSoftDataset>(&cur)) {
      s.current = ObservedSoftDataset(PerturbFeatures(os->features(), cols, Stream(seed)), os->soft_labels(),
                                      os->schema(), os->provenance())
                      .WithRecord({"perturb_features", params, seed});
    } else {
      const auto& oh = std::get<ObservedHardDataset>(cur);
      s.current = ObservedHardDataset(PerturbFeatures(oh.features(), cols, Stream(seed)), oh.labels(), oh.schema(),
                                      oh.provenance())
                      .WithRecord({"perturb_features", params, seed});
    }
  } else if (stage.kind == "annotate") {
    SoftLabelMatrix soft = Annotate(s, p, seed, cfg.threads);
    const auto [features, provenance] = std::visit(
        [](const auto& d) {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, PartialGroundTruthDataset>) {
            return std::make_pair(d.kept_features(), d.provenance());
          } else {
            return std::make_pair(d.features(), d.provenance());
          }
        },
        cur);
    s.current = ObservedSoftDataset(features, std::move(soft), s.gt->schema(), provenance)
                    .WithRecord({"annotate", p, seed});
  }
}

}  // namespace

ForestParams ForestParamsFromJson(const nlohmann::json& j) {
  const std::string where = "forest";
  config::RequireObject(j, where);
  config::AllowKeys(j, {"tree_count", "max_depth", "min_samples_leaf", "features_per_split", "bootstrap", "seed"},
                    where);
  ForestParams f;
  f.tree_count = Get<std::size_t>(j, "tree_count", f.tree_count, where);
  if (f.tree_count < 1) throw ConfigError("forest: tree_count must be at least 1");
  if (j.contains("max_depth") && j["max_depth"].is_null()) {
    f.max_depth = kUnlimitedDepth;
  } else {
    f.max_depth = Get<std::size_t>(j, "max_depth", f.max_depth, where);
  }
  f.min_samples_leaf = Get<std::size_t>(j, "min_samples_leaf", f.min_samples_leaf, where);
  if (f.min_samples_leaf < 1) throw ConfigError("forest: min_samples_leaf must be at least 1");
  if (j.contains("features_per_split") && !(j["features_per_split"].is_string() && j["features_per_split"] == "sqrt")) {
    f.features_per_split = Get<std::size_t>(j, "features_per_split", 0, where);
  }
  f.bootstrap = Get<bool>(j, "bootstrap", f.bootstrap, where);
  f.seed = Get<std::uint64_t>(j, "seed", f.seed, where);
  return f;
}

AnyDataset LoadInput(const nlohmann::json& input) {
  if (input.is_string()) return ReadDataset(input.get<std::string>());
  if (!input.is_object()) throw ConfigError("input: expected a path or an object");
  if (input.contains("path")) {
    config::AllowKeys(input, {"path", "kind"}, "input");
    FormatDescriptor format;
    if (input.contains("kind")) {
      try {
        format.kind = ParseDatasetKind(input["kind"].get<std::string>());
      } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("input: ") + e.what());
      }
    }
    return ReadDataset(Require<std::string>(input, "path", "input"), format);
  }
  const auto generator = Require<std::string>(input, "synthetic", "input");
  if (generator == "vehicle_like") {
    config::AllowKeys(input, {"synthetic", "rows", "label_noise", "seed"}, "input");
    VehicleLikeParams v;
    v.rows = Get<std::size_t>(input, "rows", v.rows, "input");
    v.label_noise = Get<double>(input, "label_noise", v.label_noise, "input");
    v.seed = Get<std::uint64_t>(input, "seed", v.seed, "input");
    return VehicleLike(v);
  }
  if (generator == "linear_hidden") {
    config::AllowKeys(input, {"synthetic", "rows", "kept", "hidden", "classes", "noise", "seed"}, "input");
    LinearHiddenParams l;
    l.rows = Get<std::size_t>(input, "rows", l.rows, "input");
    l.kept = Get<std::size_t>(input, "kept", l.kept, "input");
    l.hidden = Get<std::size_t>(input, "hidden", l.hidden, "input");
    l.classes = Get<std::size_t>(input, "classes", l.classes, "input");
    l.noise = Get<double>(input, "noise", l.noise, "input");
    l.seed = Get<std::uint64_t>(input, "seed", l.seed, "input");
    return LinearHidden(l).dataset;
  }
  throw ConfigError("input: unknown synthetic generator '" + generator + "'");
}

PipelineConfig PipelineConfig::FromJson(const nlohmann::json& j) {
  config::RequireObject(j, "pipeline");
  config::AllowKeys(j, {"input", "master_seed", "output_dir", "threads", "stages"}, "pipeline");
  PipelineConfig c;
  if (!j.contains("input")) throw ConfigError("pipeline: missing key 'input'");
  c.input = j["input"];
  c.master_seed = Get<std::uint64_t>(j, "master_seed", 0, "pipeline");
  c.output_dir = Get<std::string>(j, "output_dir", "", "pipeline");
  c.threads = Get<std::size_t>(j, "threads", 1, "pipeline");
  if (!j.contains("stages") || !j["stages"].is_array()) throw ConfigError("pipeline: 'stages' must be an array");
  for (std::size_t i = 0; i < j["stages"].size(); ++i) {
    const auto& s = j["stages"][i];
    const std::string where = "stage " + std::to_string(i);
    config::RequireObject(s, where);
    StageConfig stage;
    stage.kind = Require<std::string>(s, "kind", where);
    stage.params = s;
    stage.params.erase("kind");
    c.stages.push_back(std::move(stage));
  }
  return c;
}

void ValidatePipeline(const PipelineConfig& config, DatasetKind start) {
  DatasetKind kind = start;
  bool has_gt = start == DatasetKind::kGroundTruth;
  bool has_pg = start == DatasetKind::kPartialGroundTruth;
  for (std::size_t i = 0; i < config.stages.size(); ++i) {
    const auto& stage = config.stages[i];
    const std::string where = StageName(i, stage.kind);
    if (!StageKinds().count(stage.kind)) throw ConfigError(where + ": unknown stage kind");
    CheckStageParams(stage, where);
    auto illegal = [&](const std::string& needs) {
      throw ConfigError(where + ": requires " + needs + " upstream, found " + DatasetKindName(kind));
    };
    const std::string& k = stage.kind;
    if (k == "reconstruct") {
      if (kind != DatasetKind::kObservedHard) illegal("an observed hard dataset");
      kind = DatasetKind::kGroundTruth;
      has_gt = true;
      has_pg = false;
    } else if (k == "feature_hide") {
      if (kind != DatasetKind::kGroundTruth) illegal("a ground truth dataset");
      kind = DatasetKind::kPartialGroundTruth;
      has_pg = true;
    } else if (k == "identity") {
      if (kind == DatasetKind::kGroundTruth) {
        kind = DatasetKind::kPartialGroundTruth;
        has_pg = true;
      } else if (kind == DatasetKind::kPartialGroundTruth) {
        kind = DatasetKind::kObservedSoft;
      } else {
        illegal("a ground truth or partial ground truth dataset");
      }
    } else if (k == "noise_soft") {
      if (!IsSoft(kind)) illegal("a soft-labelled dataset");
      kind = DatasetKind::kObservedSoft;
    } else if (k == "noise_hard") {
      if (kind != DatasetKind::kObservedHard) illegal("an observed hard dataset");
    } else if (k == "nnar") {
      if (IsSoft(kind)) {
        if (!has_gt) illegal("a ground truth dataset (for the instance profile)");
        kind = DatasetKind::kObservedSoft;
      } else if (kind != DatasetKind::kObservedHard) {
        illegal("a soft-labelled or observed hard dataset");
      }
    } else if (k == "discretize") {
      if (kind != DatasetKind::kObservedSoft) illegal("an observed soft dataset");
      kind = DatasetKind::kObservedHard;
    } else if (k == "perturb_features") {
      if (kind != DatasetKind::kObservedSoft && kind != DatasetKind::kObservedHard) illegal("an observed dataset");
    } else if (k == "annotate") {
      if (!has_gt || kind == DatasetKind::kGroundTruth) illegal("a ground truth dataset followed by a later stage");
      kind = DatasetKind::kObservedSoft;
    } else if (k == "measure") {
      if (Get<std::string>(stage.params, "reference", "G", where) == "PG" && !has_pg) {
        illegal("a partial ground truth dataset");
      }
    }
  }
}

PipelineResult RunPipeline(const PipelineConfig& config) {
  // Statically invalid configs fail before the input is touched.
  for (std::size_t i = 0; i < config.stages.size(); ++i) {
    const auto where = StageName(i, config.stages[i].kind);
    if (!StageKinds().count(config.stages[i].kind)) throw ConfigError(where + ": unknown stage kind");
    CheckStageParams(config.stages[i], where);
  }
  return RunPipeline(config, LoadInput(config.input));
}

PipelineResult RunPipeline(const PipelineConfig& config, const AnyDataset& input) {
  ValidatePipeline(config, KindOf(input));
  ChainState state;
  state.current = input;
  if (const auto* gt = std::get_if<GroundTruthDataset>(&input)) state.gt = *gt;
  if (const auto* pg = std::get_if<PartialGroundTruthDataset>(&input)) state.pg = *pg;

  const bool write = !config.output_dir.empty();
  if (write) std::filesystem::create_directories(config.output_dir);

  PipelineResult result{input, {}};
  nlohmann::json summary = {{"master_seed", config.master_seed}, {"stages", nlohmann::json::array()}};
  for (std::size_t i = 0; i < config.stages.size(); ++i) {
    const auto& stage = config.stages[i];
    const std::string where = StageName(i, stage.kind);
    StageReport report{i, stage.kind, std::nullopt, std::nullopt};
    char stem[64];
    std::snprintf(stem, sizeof(stem), "stage_%02zu_%s", i, stage.kind.c_str());
    WithStageContext(where, [&] {
      if (stage.kind == "measure") {
        report.report = Measure(state, stage.params);
        if (write) {
          const auto path = config.output_dir / (std::string(stem) + ".json");
          std::ofstream(path, std::ios::binary) << report.report->ToJson().dump(2) << '\n';
          if (report.report->per_instance_entropy) {
            report.report->WritePerInstanceCsv(config.output_dir / (std::string(stem) + "_per_instance.csv"));
          }
          report.output = path;
        }
      } else {
        RunStage(state, stage, i, config);
        if (write) {
          const auto path = config.output_dir / (std::string(stem) + ".csv");
          WriteDataset(*state.current, path, config.master_seed);
          report.output = path;
        }
      }
    });
    nlohmann::json entry = {{"index", i}, {"kind", stage.kind}};
    if (report.output) entry["output"] = report.output->filename().string();
    if (report.report) entry["report"] = report.report->ToJson();
    summary["stages"].push_back(entry);
    result.stages.push_back(std::move(report));
  }
  result.final_dataset = *state.current;
  if (write) std::ofstream(config.output_dir / "report.json", std::ios::binary) << summary.dump(2) << '\n';
  return result;
}

}  // namespace synlabel
