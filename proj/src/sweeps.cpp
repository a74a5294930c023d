#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include "config_util.hpp"
#include "synlabel/errors.hpp"
#include "synlabel/harness.hpp"
#include "synlabel/noise.hpp"
#include "synlabel/parallel.hpp"
#include "synlabel/transforms.hpp"

namespace synlabel {
namespace {

using config::Get;

constexpr const char* kTvdG = "mean_tvd_vs_G";
constexpr const char* kTvdPG = "mean_tvd_vs_PG";
constexpr const char* kEntropy = "mean_entropy";

SweepCommon CommonFromJson(const nlohmann::json& j, const std::string& where) {
  SweepCommon c;
  c.input = j.contains("input") ? j["input"] : nlohmann::json(nullptr);
  if (c.input.is_null()) c.input = {{"synthetic", "vehicle_like"}};
  c.master_seed = Get<std::uint64_t>(j, "master_seed", 0, where);
  c.output_dir = Get<std::string>(j, "output_dir", "", where);
  c.threads = Get<std::size_t>(j, "threads", 1, where);
  c.runs = Get<std::size_t>(j, "runs", c.runs, where);
  c.samples = Get<std::size_t>(j, "samples", c.samples, where);
  if (c.runs < 1) throw ConfigError(where + ": runs must be at least 1");
  if (c.samples < 1) throw ConfigError(where + ": samples must be at least 1");
  if (j.contains("forest")) c.forest = ForestParamsFromJson(j["forest"]);
  if (j.contains("hidden_order")) c.hidden_order = config::Require<std::vector<std::string>>(j, "hidden_order", where);
  return c;
}

const std::initializer_list<const char*> kCommonKeys = {"input", "master_seed", "output_dir", "threads",
                                                         "runs",  "samples",     "forest",     "hidden_order"};

void AllowCommonPlus(const nlohmann::json& j, std::initializer_list<const char*> extra, const std::string& where) {
  std::vector<const char*> keys(kCommonKeys);
  keys.insert(keys.end(), extra.begin(), extra.end());
  for (const auto& item : j.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return item.key() == k; })) {
      throw ConfigError(where + ": unknown key '" + item.key() + "'");
    }
  }
}

SamplerKind SamplerFromConfig(const std::string& name, const std::string& where) {
  try {
    return ParseSamplerKind(name);
  } catch (const InvalidArgument& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

AnyDataset SweepInput(const SweepCommon& c) { return c.dataset ? *c.dataset : LoadInput(c.input); }

std::size_t FeatureCount(const AnyDataset& d) {
  if (const auto* gt = std::get_if<GroundTruthDataset>(&d)) return gt->features().cols();
  if (const auto* oh = std::get_if<ObservedHardDataset>(&d)) return oh->features().cols();
  throw ConfigError("sweep input must be a ground truth or observed hard dataset, found " +
                    DatasetKindName(KindOf(d)));
}

struct RunGroundTruth {
  GroundTruthDataset gt;
  std::optional<double> disagreement;
};

// G for one run: a ground-truth input is used as is; an observed hard input
// is reconstructed with a run-specific forest seed.
RunGroundTruth GroundTruthForRun(const AnyDataset& input, const SweepCommon& c, std::uint64_t run_seed) {
  if (const auto* gt = std::get_if<GroundTruthDataset>(&input)) return {*gt, std::nullopt};
  const auto& oh = std::get<ObservedHardDataset>(input);
  auto rec = ReconstructGroundTruth(oh, c.forest, DeriveSeed(run_seed, 0), c.threads);
  return {std::move(rec.dataset), rec.disagreement_rate};
}

std::shared_ptr<const HiddenFeatureSampler> MaybeSampler(SamplerKind kind, const GroundTruthDataset& gt,
                                                         const FeaturePartition& partition, std::uint64_t seed) {
  if (partition.hidden().empty()) return nullptr;
  return std::make_shared<const HiddenFeatureSampler>(
      FitSampler(kind, gt.features(), partition, &gt.labels(), seed));
}

FeaturePartition HideFirst(const std::vector<std::size_t>& order, std::size_t k) {
  return FeaturePartition::Hiding(order.size(), std::vector<std::size_t>(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k)));
}

nlohmann::json CommonJson(const SweepCommon& c) {
  nlohmann::json j = {{"master_seed", c.master_seed}, {"runs", c.runs}, {"samples", c.samples},
                      {"forest", c.forest.ToJson()}, {"input", c.dataset ? nlohmann::json("in-memory") : c.input}};
  if (c.hidden_order) j["hidden_order"] = *c.hidden_order;
  return j;
}

// Mean over runs of every (series, variable, value, metric) cell.
void WriteSummary(const SweepResult& result, const std::filesystem::path& path) {
  struct Cell {
    double sum = 0.0;
    std::size_t count = 0;
  };
  std::vector<std::tuple<std::string, std::string, double, std::string>> order;
  std::map<std::tuple<std::string, std::string, double, std::string>, Cell> cells;
  for (const auto& row : result.rows) {
    auto key = std::make_tuple(row.series, row.sweep_variable, row.sweep_value, row.metric_name);
    auto [it, inserted] = cells.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.sum += row.metric_value;
    ++it->second.count;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "series,sweep_variable,sweep_value,metric_name,mean_value,runs\n";
  for (const auto& key : order) {
    const auto& cell = cells[key];
    out << std::get<0>(key) << ',' << std::get<1>(key) << ',' << FormatReal(std::get<2>(key)) << ','
        << std::get<3>(key) << ',' << FormatReal(cell.sum / static_cast<double>(cell.count)) << ',' << cell.count
        << '\n';
  }
}

void WriteOutputs(const SweepResult& result, const SweepCommon& c) {
  if (c.output_dir.empty()) return;
  std::filesystem::create_directories(c.output_dir);
  result.WriteCsv(c.output_dir / "sweep.csv");
  WriteSummary(result, c.output_dir / "sweep_summary.csv");
  std::ofstream(c.output_dir / "sweep.meta.json", std::ios::binary) << result.metadata.dump(2) << '\n';
}

}  // namespace

std::vector<SweepRow> SweepResult::Select(const std::string& series, const std::string& metric) const {
  std::vector<SweepRow> out;
  for (const auto& r : rows) {
    if (r.series == series && r.metric_name == metric) out.push_back(r);
  }
  return out;
}

void SweepResult::WriteCsv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "run_index,series,sweep_variable,sweep_value,metric_name,metric_value\n";
  for (const auto& r : rows) {
    out << r.run_index << ',' << r.series << ',' << r.sweep_variable << ',' << FormatReal(r.sweep_value) << ','
        << r.metric_name << ',' << FormatReal(r.metric_value) << '\n';
  }
  if (!out) throw DataError("failed writing " + path.string());
}

std::vector<std::size_t> HidingOrder(const GroundTruthDataset& gt,
                                     const std::optional<std::vector<std::string>>& names) {
  const std::size_t d = gt.features().cols();
  if (names) {
    std::vector<std::size_t> order;
    std::set<std::size_t> seen;
    for (const auto& name : *names) {
      const auto c = gt.features().ColumnIndex(name);
      if (!c) throw ConfigError("hidden_order: unknown feature '" + name + "'");
      if (!seen.insert(*c).second) throw ConfigError("hidden_order: feature '" + name + "' listed twice");
      order.push_back(*c);
    }
    // Unlisted features follow in column order.
    for (std::size_t j = 0; j < d; ++j) {
      if (!seen.count(j)) order.push_back(j);
    }
    return order;
  }
  if (!gt.truth_fn()->tree_based()) {
    throw ConfigError("hiding by importance needs a tree-based truth function; give hidden_order instead");
  }
  const auto importance = FeatureImportances(*gt.truth_fn());
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return importance[a] < importance[b]; });
  return order;
}

EntropySweepConfig EntropySweepConfig::FromJson(const nlohmann::json& j) {
  const std::string where = "sweep-entropy";
  config::RequireObject(j, where);
  AllowCommonPlus(j, {"samplers", "hidden_counts"}, where);
  EntropySweepConfig c;
  c.common = CommonFromJson(j, where);
  c.common.runs = Get<std::size_t>(j, "runs", 50, where);
  if (c.common.runs < 1) throw ConfigError(where + ": runs must be at least 1");
  if (j.contains("samplers")) {
    c.samplers.clear();
    for (const auto& name : config::Require<std::vector<std::string>>(j, "samplers", where)) {
      c.samplers.push_back(SamplerFromConfig(name, where));
    }
    if (c.samplers.empty()) throw ConfigError(where + ": samplers must not be empty");
  }
  if (j.contains("hidden_counts")) {
    c.hidden_counts = config::Require<std::vector<std::size_t>>(j, "hidden_counts", where);
  }
  return c;
}

NoiseSweepConfig NoiseSweepConfig::FromJson(const nlohmann::json& j) {
  const std::string where = "sweep-noise";
  config::RequireObject(j, where);
  AllowCommonPlus(j, {"rates", "matrix", "sampler", "hidden_count", "sampled_labels", "flips", "boost_fraction"},
                  where);
  NoiseSweepConfig c;
  c.common = CommonFromJson(j, where);
  c.rates = Get<std::vector<double>>(j, "rates", c.rates, where);
  c.matrix = Get<std::string>(j, "matrix", c.matrix, where);
  c.sampler = SamplerFromConfig(Get<std::string>(j, "sampler", SamplerKindName(c.sampler), where), where);
  if (j.contains("hidden_count")) c.hidden_count = config::Require<std::size_t>(j, "hidden_count", where);
  c.sampled_labels = Get<std::size_t>(j, "sampled_labels", c.sampled_labels, where);
  c.flips = Get<std::size_t>(j, "flips", c.flips, where);
  c.boost_fraction = Get<double>(j, "boost_fraction", c.boost_fraction, where);
  return c;
}

MatchedTvdConfig MatchedTvdConfig::FromJson(const nlohmann::json& j) {
  const std::string where = "matched-tvd";
  config::RequireObject(j, where);
  AllowCommonPlus(j, {"hidden_counts", "sampler", "tolerance"}, where);
  MatchedTvdConfig c;
  c.common = CommonFromJson(j, where);
  c.hidden_counts = Get<std::vector<std::size_t>>(j, "hidden_counts", c.hidden_counts, where);
  c.sampler = SamplerFromConfig(Get<std::string>(j, "sampler", SamplerKindName(c.sampler), where), where);
  c.tolerance = Get<double>(j, "tolerance", c.tolerance, where);
  return c;
}

SweepResult RunEntropySweep(const EntropySweepConfig& config) {
  const SweepCommon& c = config.common;
  if (c.runs < 1 || c.samples < 1) throw ConfigError("sweep-entropy: runs and samples must be at least 1");
  if (config.samplers.empty()) throw ConfigError("sweep-entropy: samplers must not be empty");
  const AnyDataset input = SweepInput(c);
  const std::size_t d = FeatureCount(input);
  std::vector<std::size_t> ks;
  if (config.hidden_counts) {
    ks = *config.hidden_counts;
  } else {
    ks.resize(d + 1);
    std::iota(ks.begin(), ks.end(), 0);
  }
  for (std::size_t k : ks) {
    if (k > d) {
      throw ConfigError("sweep-entropy: hidden count " + std::to_string(k) + " exceeds the feature count " +
                        std::to_string(d));
    }
  }

  SweepResult result;
  result.metadata = CommonJson(c);
  result.metadata["sweep"] = "entropy";
  result.metadata["hidden_counts"] = ks;
  nlohmann::json sampler_names = nlohmann::json::array();
  for (auto s : config.samplers) sampler_names.push_back(SamplerKindName(s));
  result.metadata["samplers"] = sampler_names;
  result.metadata["entropy_unit"] = "nats";
  nlohmann::json runs = nlohmann::json::array();

  for (std::size_t r = 0; r < c.runs; ++r) {
    const std::uint64_t run_seed = DeriveSeed(c.master_seed, r);
    const RunGroundTruth g = GroundTruthForRun(input, c, run_seed);
    const auto order = HidingOrder(g.gt, c.hidden_order);
    nlohmann::json run = {{"run_index", r}, {"seed", run_seed}};
    if (g.disagreement) run["reconstruction_disagreement"] = *g.disagreement;
    nlohmann::json order_names = nlohmann::json::array();
    for (std::size_t j : order) order_names.push_back(g.gt.features().column_names()[j]);
    run["hiding_order"] = order_names;
    runs.push_back(run);

    for (SamplerKind kind : config.samplers) {
      for (std::size_t k : ks) {
        const auto partition = HideFirst(order, k);
        // Fit and hiding seeds depend on (run, k) only, so samplers are
        // compared on common random numbers.
        FeatureHidingConfig fh{partition, MaybeSampler(kind, g.gt, partition, DeriveSeed(DeriveSeed(run_seed, 1), k)),
                               c.samples, DeriveSeed(DeriveSeed(run_seed, 2), k), c.threads};
        const auto pg = FeatureHide(g.gt, fh);
        result.rows.push_back({r, SamplerKindName(kind), "hidden_count", static_cast<double>(k), kEntropy,
                               MeanEntropy(pg.soft_labels())});
      }
    }
  }
  result.metadata["runs_detail"] = runs;
  WriteOutputs(result, c);
  return result;
}

SweepResult RunNoiseSweep(const NoiseSweepConfig& config) {
  const SweepCommon& c = config.common;
  if (config.rates.empty()) throw ConfigError("sweep-noise: rate grid is empty");
  for (double r : config.rates) {
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("sweep-noise: rate " + FormatReal(r) + " outside [0, 1]");
  }
  if (config.matrix != "ncar" && config.matrix != "nar") throw ConfigError("sweep-noise: matrix must be 'ncar' or 'nar'");
  if (config.sampled_labels < 1 || config.flips < 1) throw ConfigError("sweep-noise: sampled_labels and flips must be >= 1");
  if (!(config.boost_fraction >= 0.0 && config.boost_fraction <= 1.0)) {
    throw ConfigError("sweep-noise: boost_fraction must lie in [0, 1]");
  }
  if (c.runs < 1 || c.samples < 1) throw ConfigError("sweep-noise: runs and samples must be at least 1");
  const AnyDataset input = SweepInput(c);
  const std::size_t d = FeatureCount(input);
  const std::size_t hidden_count = config.hidden_count.value_or(d / 2);
  if (hidden_count > d) throw ConfigError("sweep-noise: hidden_count exceeds the feature count");

  SweepResult result;
  result.metadata = CommonJson(c);
  result.metadata["sweep"] = "noise";
  result.metadata["rates"] = config.rates;
  result.metadata["matrix"] = config.matrix;
  result.metadata["sampler"] = SamplerKindName(config.sampler);
  result.metadata["hidden_count"] = hidden_count;
  result.metadata["sampled_labels"] = config.sampled_labels;
  result.metadata["flips"] = config.flips;
  result.metadata["boost_fraction"] = config.boost_fraction;
  result.metadata["nnar_application"] = "double";
  result.metadata["entropy_unit"] = "nats";
  nlohmann::json runs = nlohmann::json::array();

  for (std::size_t run = 0; run < c.runs; ++run) {
    const std::uint64_t run_seed = DeriveSeed(c.master_seed, run);
    const RunGroundTruth g = GroundTruthForRun(input, c, run_seed);
    const GroundTruthDataset& gt = g.gt;
    const std::size_t C = gt.schema().class_count();
    const std::size_t n = gt.size();
    const auto partition = HideFirst(HidingOrder(gt, c.hidden_order), hidden_count);
    FeatureHidingConfig fh{partition, MaybeSampler(config.sampler, gt, partition, DeriveSeed(run_seed, 1)), c.samples,
                           DeriveSeed(run_seed, 2), c.threads};
    const auto pg = FeatureHide(gt, fh);
    const SoftLabelMatrix& ypg = pg.soft_labels();
    const SoftLabelMatrix y1 = OneHot(gt.labels(), gt.schema());
    const auto profile = ComputeInstanceProfile(gt.features(), gt.labels(), config.boost_fraction);
    const Stream nar_stream(DeriveSeed(run_seed, 3));

    const double delta1 = MeanTvd(y1, ypg);
    const double fh_entropy = MeanEntropy(ypg);
    nlohmann::json run_meta = {{"run_index", run}, {"seed", run_seed}, {"delta1", delta1},
                               {"boosted", profile.boosted_count()}};
    if (g.disagreement) run_meta["reconstruction_disagreement"] = *g.disagreement;
    nlohmann::json matrices = nlohmann::json::array();

    for (std::size_t ri = 0; ri < config.rates.size(); ++ri) {
      const double rate = config.rates[ri];
      const TransitionMatrix T = config.matrix == "nar" ? NarRandomMatrix(C, rate, nar_stream) : NcarMatrix(C, rate);
      matrices.push_back(T.ToJson());
      const SoftLabelMatrix pt = ApplyToSoft(ypg, T);
      const SoftLabelMatrix gtT = ApplyToSoft(y1, T);
      const SoftLabelMatrix nnar_soft = ApplyNnar(ypg, profile, T);

      // Sampled path: S hard draws from y^PG, each flipped M times; the
      // empirical distribution of the flipped labels per instance.
      Matrix sampled(n, C);
      Matrix sampled_nnar(n, C);
      const Stream path_stream(DeriveSeed(DeriveSeed(run_seed, 4), ri));
      const Stream nnar_stream(DeriveSeed(DeriveSeed(run_seed, 5), ri));
      const double weight = 1.0 / static_cast<double>(config.sampled_labels * config.flips);
      ParallelFor(n, c.threads, [&](std::size_t i) {
        const Stream si = path_stream.Derive(i);
        const Stream ni = nnar_stream.Derive(i);
        for (std::size_t s = 0; s < config.sampled_labels; ++s) {
          Stream a = si.Derive(s);
          Stream b = ni.Derive(s);
          const ClassId ca = SampleCategorical(ypg.row(i), a.Uniform());
          const ClassId cb = SampleCategorical(ypg.row(i), b.Uniform());
          for (std::size_t m = 0; m < config.flips; ++m) {
            sampled(i, SampleCategorical(T.matrix().row(ca), a.Uniform())) += weight;
            ClassId flipped = SampleCategorical(T.matrix().row(cb), b.Uniform());
            if (profile.boosted[i]) flipped = SampleCategorical(T.matrix().row(flipped), b.Uniform());
            sampled_nnar(i, flipped) += weight;
          }
        }
      });
      const SoftLabelMatrix sampled_soft(std::move(sampled));
      const SoftLabelMatrix sampled_nnar_soft(std::move(sampled_nnar));

      const double delta2 = MeanTvd(y1, gtT);
      const double delta3 = MeanTvd(ypg, pt);
      auto add = [&](const char* series, const char* metric, double value) {
        result.rows.push_back({run, series, "noise_rate", rate, metric, value});
      };
      add("delta1", kTvdG, delta1);
      add("delta2", kTvdG, delta2);
      add("delta3", kTvdPG, delta3);
      add("delta1_plus_delta2", kTvdG, delta1 + delta2);
      add("delta1_plus_delta3", kTvdG, delta1 + delta3);
      add("fh_then_T", kTvdG, MeanTvd(y1, pt));
      add("sampled_path", kTvdG, MeanTvd(y1, sampled_soft));
      add("sampled_path", kTvdPG, MeanTvd(ypg, sampled_soft));
      add("nnar_soft", kTvdG, MeanTvd(y1, nnar_soft));
      add("nnar_sampled", kTvdG, MeanTvd(y1, sampled_nnar_soft));
      add("fh", kEntropy, fh_entropy);
      add("ground_truth_then_T", kEntropy, MeanEntropy(gtT));
      add("fh_then_T", kEntropy, MeanEntropy(pt));
      add("sampled_path", kEntropy, MeanEntropy(sampled_soft));
      add("nnar_soft", kEntropy, MeanEntropy(nnar_soft));
      add("nnar_sampled", kEntropy, MeanEntropy(sampled_nnar_soft));
    }
    run_meta["matrices"] = matrices;
    runs.push_back(run_meta);
  }
  result.metadata["runs_detail"] = runs;
  WriteOutputs(result, c);
  return result;
}

SweepResult RunMatchedTvd(const MatchedTvdConfig& config) {
  const SweepCommon& c = config.common;
  if (config.hidden_counts.empty()) throw ConfigError("matched-tvd: hidden_counts must not be empty");
  if (!(config.tolerance > 0.0)) throw ConfigError("matched-tvd: tolerance must be positive");
  if (c.runs < 1 || c.samples < 1) throw ConfigError("matched-tvd: runs and samples must be at least 1");
  const AnyDataset input = SweepInput(c);
  const std::size_t d = FeatureCount(input);
  for (std::size_t k : config.hidden_counts) {
    if (k > d) {
      throw ConfigError("matched-tvd: hidden count " + std::to_string(k) + " exceeds the feature count " +
                        std::to_string(d));
    }
  }
  const bool write = !c.output_dir.empty();
  if (write) std::filesystem::create_directories(c.output_dir);

  SweepResult result;
  result.metadata = CommonJson(c);
  result.metadata["sweep"] = "matched_tvd";
  result.metadata["sampler"] = SamplerKindName(config.sampler);
  result.metadata["hidden_counts"] = config.hidden_counts;
  result.metadata["tolerance"] = config.tolerance;
  result.metadata["entropy_unit"] = "nats";
  // Values reported for the original vehicle data; kept for comparison only.
  result.metadata["reference_values"] = {{"mean_tvd_low", 0.17},   {"mean_tvd_high", 0.45},
                                         {"fh_entropy_high", 0.90}, {"ncar_entropy_high", 1.18},
                                         {"nar_entropy_high", 1.15}, {"asserted", false}};
  nlohmann::json levels = nlohmann::json::array();

  for (std::size_t run = 0; run < c.runs; ++run) {
    const std::uint64_t run_seed = DeriveSeed(c.master_seed, run);
    const RunGroundTruth g = GroundTruthForRun(input, c, run_seed);
    const GroundTruthDataset& gt = g.gt;
    const std::size_t C = gt.schema().class_count();
    const auto order = HidingOrder(gt, c.hidden_order);
    const SoftLabelMatrix y1 = OneHot(gt.labels(), gt.schema());
    const Stream nar_stream(DeriveSeed(run_seed, 3));

    for (std::size_t k : config.hidden_counts) {
      const auto partition = HideFirst(order, k);
      FeatureHidingConfig fh{partition, MaybeSampler(config.sampler, gt, partition, DeriveSeed(DeriveSeed(run_seed, 1), k)),
                             c.samples, DeriveSeed(DeriveSeed(run_seed, 2), k), c.threads};
      const auto pg = FeatureHide(gt, fh);
      const double target = MeanTvd(y1, pg.soft_labels());
      const auto ncar = CalibrateRate(target, y1, [C](double r) { return NcarMatrix(C, r); }, config.tolerance);
      const auto nar = CalibrateRate(
          target, y1, [C, &nar_stream](double r) { return NarRandomMatrix(C, r, nar_stream); }, config.tolerance);
      const TransitionMatrix T_ncar = NcarMatrix(C, ncar.rate);
      const TransitionMatrix T_nar = NarRandomMatrix(C, nar.rate, nar_stream);
      const SoftLabelMatrix s_ncar = ApplyToSoft(y1, T_ncar);
      const SoftLabelMatrix s_nar = ApplyToSoft(y1, T_nar);

      const double kk = static_cast<double>(k);
      result.rows.push_back({run, "fh", "hidden_count", kk, kTvdG, target});
      result.rows.push_back({run, "fh", "hidden_count", kk, kEntropy, MeanEntropy(pg.soft_labels())});
      result.rows.push_back({run, "ncar", "hidden_count", kk, kTvdG, MeanTvd(y1, s_ncar)});
      result.rows.push_back({run, "ncar", "hidden_count", kk, kEntropy, MeanEntropy(s_ncar)});
      result.rows.push_back({run, "nar", "hidden_count", kk, kTvdG, MeanTvd(y1, s_nar)});
      result.rows.push_back({run, "nar", "hidden_count", kk, kEntropy, MeanEntropy(s_nar)});

      nlohmann::json level = {{"run_index", run},
                              {"hidden_count", k},
                              {"target_mean_tvd", target},
                              {"ncar_rate", ncar.rate},
                              {"ncar_achieved", ncar.achieved_mean_tvd},
                              {"ncar_iterations", ncar.iterations},
                              {"nar_rate", nar.rate},
                              {"nar_achieved", nar.achieved_mean_tvd},
                              {"nar_iterations", nar.iterations},
                              {"nar_matrix", T_nar.ToJson()}};

      if (write) {
        // Per-instance soft labels of all three methods, plus one sampled
        // hard labelling each.
        const std::string stem = "matched_k" + std::to_string(k) + "_run" + std::to_string(run);
        const ObservedSoftDataset os_fh = IdentityToOs(pg);
        const ObservedSoftDataset os_ncar(gt.features(), s_ncar, gt.schema(), gt.provenance());
        const ObservedSoftDataset os_nar(gt.features(), s_nar, gt.schema(), gt.provenance());
        const std::pair<const char*, ObservedSoftDataset> outputs[] = {
            {"fh", os_fh},
            {"ncar", os_ncar.WithRecord({"noise_soft", {{"kind", "ncar"}, {"rate", ncar.rate}, {"matrix", T_ncar.ToJson()}}, std::nullopt})},
            {"nar", os_nar.WithRecord({"noise_soft", {{"kind", "nar"}, {"rate", nar.rate}, {"matrix", T_nar.ToJson()}}, DeriveSeed(run_seed, 3)})}};
        nlohmann::json files = nlohmann::json::object();
        for (std::size_t m = 0; m < 3; ++m) {
          const auto& [name, os] = outputs[m];
          const auto soft_path = c.output_dir / (stem + "_" + name + ".csv");
          const auto hard_path = c.output_dir / (stem + "_" + name + "_hard.csv");
          WriteDataset(os, soft_path, c.master_seed);
          WriteDataset(Discretize(os, DecisionRule::SampleProportional(), DeriveSeed(DeriveSeed(run_seed, 6), 3 * k + m)),
                       hard_path, c.master_seed);
          files[name] = {{"soft", soft_path.filename().string()}, {"hard", hard_path.filename().string()}};
        }
        level["files"] = files;
      }
      levels.push_back(level);
    }
  }
  result.metadata["levels"] = levels;
  WriteOutputs(result, c);
  return result;
}

}  // namespace synlabel
