#pragma once

// Declarative pipelines and experiment sweeps over the chain.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "synlabel/data_model.hpp"
#include "synlabel/dataset_io.hpp"
#include "synlabel/metrics.hpp"
#include "synlabel/samplers.hpp"
#include "synlabel/truth_functions.hpp"

namespace synlabel {

// --- Inputs -------------------------------------------------------------

// `input` is a CSV path string, {"path": ..., "kind": ...} or
// {"synthetic": "vehicle_like" | "linear_hidden", ...generator parameters}.
AnyDataset LoadInput(const nlohmann::json& input);

ForestParams ForestParamsFromJson(const nlohmann::json& j);

// --- Pipelines ----------------------------------------------------------

struct StageConfig {
  std::string kind;
  nlohmann::json params = nlohmann::json::object();
};

struct PipelineConfig {
  nlohmann::json input;
  std::uint64_t master_seed = 0;
  std::filesystem::path output_dir;  // empty: nothing is written
  std::size_t threads = 1;
  std::vector<StageConfig> stages;

  // Throws ConfigError on missing or mistyped keys.
  static PipelineConfig FromJson(const nlohmann::json& j);
};

struct StageReport {
  std::size_t index = 0;
  std::string kind;
  std::optional<std::filesystem::path> output;
  std::optional<UncertaintyReport> report;
};

struct PipelineResult {
  AnyDataset final_dataset;
  std::vector<StageReport> stages;
};

// Checks stage kinds, parameters and the legal order of the chain starting
// from a dataset of type `start`. Throws ConfigError naming the stage.
void ValidatePipeline(const PipelineConfig& config, DatasetKind start);

// Validates first, then runs every stage in order. Stage i draws its
// randomness from DeriveSeed(master_seed, i). Errors raised by a stage are
// rethrown with the stage index and kind prefixed.
PipelineResult RunPipeline(const PipelineConfig& config);
PipelineResult RunPipeline(const PipelineConfig& config, const AnyDataset& input);

// --- Sweeps -------------------------------------------------------------

struct SweepRow {
  std::size_t run_index = 0;
  std::string series;
  std::string sweep_variable;
  double sweep_value = 0.0;
  std::string metric_name;  // mean_tvd_vs_G, mean_tvd_vs_PG, mean_entropy, disagreement_rate
  double metric_value = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  nlohmann::json metadata = nlohmann::json::object();

  // Rows matching series and metric, in insertion order.
  std::vector<SweepRow> Select(const std::string& series, const std::string& metric) const;
  void WriteCsv(const std::filesystem::path& path) const;
};

struct SweepCommon {
  nlohmann::json input;
  // Used instead of `input` when set (library callers and tests).
  std::optional<AnyDataset> dataset;
  std::uint64_t master_seed = 0;
  std::filesystem::path output_dir;
  std::size_t threads = 1;
  std::size_t runs = 1;
  std::size_t samples = 100;
  ForestParams forest;
  // Explicit hiding order by column name; otherwise ascending feature
  // importance of the ground-truth function.
  std::optional<std::vector<std::string>> hidden_order;
};

struct EntropySweepConfig {
  SweepCommon common;
  std::vector<SamplerKind> samplers = AllSamplerKinds();
  // Defaults to 0..d.
  std::optional<std::vector<std::size_t>> hidden_counts;

  static EntropySweepConfig FromJson(const nlohmann::json& j);
};

struct NoiseSweepConfig {
  SweepCommon common;
  std::vector<double> rates = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::string matrix = "ncar";  // or "nar"
  SamplerKind sampler = SamplerKind::kGaussianKde;
  std::optional<std::size_t> hidden_count;  // default: half the features
  std::size_t sampled_labels = 100;  // S hard samples per instance
  std::size_t flips = 100;           // M flips per hard sample
  double boost_fraction = 0.5;

  static NoiseSweepConfig FromJson(const nlohmann::json& j);
};

struct MatchedTvdConfig {
  SweepCommon common;
  std::vector<std::size_t> hidden_counts = {8, 13};
  SamplerKind sampler = SamplerKind::kGaussianKde;
  double tolerance = 1e-3;

  static MatchedTvdConfig FromJson(const nlohmann::json& j);
};

// Each writes sweep.csv (plus companions) to output_dir when it is set.
SweepResult RunEntropySweep(const EntropySweepConfig& config);
SweepResult RunNoiseSweep(const NoiseSweepConfig& config);
SweepResult RunMatchedTvd(const MatchedTvdConfig& config);

// Column indices to hide, least important first.
std::vector<std::size_t> HidingOrder(const GroundTruthDataset& gt,
                                     const std::optional<std::vector<std::string>>& names);

}  // namespace synlabel
