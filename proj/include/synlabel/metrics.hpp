#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "synlabel/data_model.hpp"

namespace synlabel {

// Total variation distance: 0.5 * sum_c |p_c - q_c|.
double Tvd(std::span<const double> p, std::span<const double> q);
double MeanTvd(const SoftLabelMatrix& P, const SoftLabelMatrix& Q);
std::vector<double> RowTvd(const SoftLabelMatrix& P, const SoftLabelMatrix& Q);

// Shannon entropy in nats, with 0 * ln 0 = 0.
double Entropy(std::span<const double> p);
double MeanEntropy(const SoftLabelMatrix& P);
std::vector<double> RowEntropy(const SoftLabelMatrix& P);

double DisagreementRate(const HardLabelVector& a, const HardLabelVector& b);

struct UncertaintyReport {
  std::optional<double> mean_tvd;
  std::optional<double> mean_entropy;
  std::optional<double> disagreement_rate;
  // Named quantities such as "delta1"; kept sorted for stable output.
  std::map<std::string, double> named;

  std::optional<std::vector<double>> per_instance_tvd;
  std::optional<std::vector<double>> per_instance_entropy;
  std::optional<std::vector<int>> per_instance_disagreement;

  nlohmann::json ToJson() const;
  // One row per instance, one column per present per-instance vector.
  void WritePerInstanceCsv(const std::filesystem::path& path) const;
};

}  // namespace synlabel
