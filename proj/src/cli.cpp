#include "synlabel/cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <optional>
#include <string>

#include "synlabel/dataset_io.hpp"
#include "synlabel/errors.hpp"
#include "synlabel/harness.hpp"

namespace synlabel {
namespace {

constexpr const char* kVersion = "1.0.0";
constexpr const char* kDefaultOut = "synlabel_out";

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> threads;
  std::optional<std::size_t> runs;
  std::optional<std::size_t> samples;
};

nlohmann::json LoadConfig(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
}

// Command-line flags win over config keys.
nlohmann::json ApplyOverrides(nlohmann::json j, const Overrides& o, bool sweep) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  if (o.seed) j["master_seed"] = *o.seed;
  if (o.threads) j["threads"] = *o.threads;
  if (o.out) {
    j["output_dir"] = *o.out;
  } else if (!j.contains("output_dir")) {
    j["output_dir"] = kDefaultOut;
  }
  if (sweep) {
    if (o.runs) j["runs"] = *o.runs;
    if (o.samples) j["samples"] = *o.samples;
  }
  return j;
}

void AddCommon(CLI::App* cmd, Overrides& o, bool sweep) {
  cmd->add_option("--config", o.config, "JSON configuration file");
  cmd->add_option("--seed", o.seed, "Master seed (U64)");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
  if (sweep) {
    cmd->add_option("--runs", o.runs, "Seeded runs")->check(CLI::PositiveNumber);
    cmd->add_option("--samples", o.samples, "Hidden-feature draws per instance")->check(CLI::PositiveNumber);
  }
}

void PrintInfo(std::ostream& out) {
  out << "synlabel " << kVersion << "\n";
  out << "dataset types: ground_truth partial_ground_truth observed_soft observed_hard\n";
  out << "samplers:";
  for (auto k : AllSamplerKinds()) out << ' ' << SamplerKindName(k);
  out << "\nstages: reconstruct feature_hide identity noise_soft noise_hard nnar discretize perturb_features "
         "annotate measure\n";
  out << "noise matrices: ncar nar\n";
  out << "decision rules: argmax sample\n";
  out << "entropy unit: nats\n";
  const ForestParams f;
  out << "forest defaults: tree_count=" << f.tree_count << " max_depth=" << f.max_depth
      << " min_samples_leaf=" << f.min_samples_leaf << " features_per_split=ceil(sqrt(d)) bootstrap=on\n";
}

void PrintDatasetInfo(const std::string& path, std::ostream& out) {
  const AnyDataset d = ReadDataset(path);
  out << "type: " << DatasetKindName(KindOf(d)) << "\n";
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        out << "rows: " << x.size() << "\n";
        if constexpr (std::is_same_v<T, PartialGroundTruthDataset>) {
          out << "kept features: " << x.kept_features().cols() << "\n";
          out << "hidden features: " << x.partition().hidden().size() << "\n";
        } else {
          out << "features: " << x.features().cols() << "\n";
        }
        out << "classes:";
        for (const auto& name : x.schema().class_names()) out << ' ' << name;
        out << "\nprovenance:";
        if (x.provenance().empty()) out << " (none)";
        for (const auto& r : x.provenance()) out << ' ' << r.name;
        out << "\n";
      },
      d);
  const auto report = Validate(d);
  out << "valid: " << (report.ok() ? "yes" : "no") << "\n";
}

}  // namespace

int CliEntry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ground-truth label synthesis, label noise injection and uncertainty measurement", "synlabel"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  Overrides run_o, entropy_o, noise_o, matched_o;
  auto* run = app.add_subcommand("run", "Execute a pipeline config");
  AddCommon(run, run_o, false);
  run->get_option("--config")->required();
  auto* entropy = app.add_subcommand("sweep-entropy", "Mean entropy against hidden feature count per sampler");
  AddCommon(entropy, entropy_o, true);
  auto* noise = app.add_subcommand("sweep-noise", "Noise measures across a grid of noise rates");
  AddCommon(noise, noise_o, true);
  auto* matched = app.add_subcommand("matched-tvd", "Entropy of hiding, NCAR and NAR at matched mean TVD");
  AddCommon(matched, matched_o, true);

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a dataset file against its invariants");
  validate->add_option("path", validate_path, "Dataset CSV")->required();
  std::string info_path;
  auto* info = app.add_subcommand("info", "Toolkit defaults, or a summary of one dataset");
  info->add_option("path", info_path, "Dataset CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    err << "error: " << e.what() << "\n";
    const CLI::App* scope = &app;
    for (const auto* sub : app.get_subcommands()) scope = sub;
    err << scope->help();
    return 1;
  }

  try {
    if (run->parsed()) {
      const auto cfg = PipelineConfig::FromJson(ApplyOverrides(LoadConfig(run_o.config), run_o, false));
      const auto result = RunPipeline(cfg);
      for (const auto& s : result.stages) {
        out << "stage " << s.index << " " << s.kind;
        if (s.output) out << " -> " << s.output->string();
        out << "\n";
      }
    } else if (entropy->parsed()) {
      const auto cfg = EntropySweepConfig::FromJson(ApplyOverrides(LoadConfig(entropy_o.config), entropy_o, true));
      const auto result = RunEntropySweep(cfg);
      out << "wrote " << result.rows.size() << " rows to " << (cfg.common.output_dir / "sweep.csv").string() << "\n";
    } else if (noise->parsed()) {
      const auto cfg = NoiseSweepConfig::FromJson(ApplyOverrides(LoadConfig(noise_o.config), noise_o, true));
      const auto result = RunNoiseSweep(cfg);
      out << "wrote " << result.rows.size() << " rows to " << (cfg.common.output_dir / "sweep.csv").string() << "\n";
    } else if (matched->parsed()) {
      const auto cfg = MatchedTvdConfig::FromJson(ApplyOverrides(LoadConfig(matched_o.config), matched_o, true));
      const auto result = RunMatchedTvd(cfg);
      out << "wrote " << result.rows.size() << " rows to " << (cfg.common.output_dir / "sweep.csv").string() << "\n";
    } else if (validate->parsed()) {
      const auto report = Validate(ReadDataset(validate_path));
      if (!report.ok()) {
        err << "invalid dataset " << validate_path << ":\n" << report.ToString() << "\n";
        return 2;
      }
      out << "ok: " << validate_path << "\n";
    } else if (info->parsed()) {
      if (info_path.empty()) {
        PrintInfo(out);
      } else {
        PrintDatasetInfo(info_path, out);
      }
    }
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace synlabel
