#include "synlabel/metrics.hpp"

#include <cmath>
#include <fstream>

#include "synlabel/dataset_io.hpp"
#include "synlabel/errors.hpp"

namespace synlabel {
namespace {

void CheckSameShape(const SoftLabelMatrix& P, const SoftLabelMatrix& Q) {
  if (P.rows() != Q.rows() || P.classes() != Q.classes()) {
    throw InvalidArgument("soft label matrices differ in shape: " + std::to_string(P.rows()) + "x" +
                          std::to_string(P.classes()) + " vs " + std::to_string(Q.rows()) + "x" +
                          std::to_string(Q.classes()));
  }
}

// Neumaier-compensated sum, so means over many rows keep full precision.
double Mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0, comp = 0.0;
  for (double x : v) {
    const double t = s + x;
    comp += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
    s = t;
  }
  return (s + comp) / static_cast<double>(v.size());
}

}  // namespace

double Tvd(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw InvalidArgument("distribution lengths differ: " + std::to_string(p.size()) + " vs " +
                          std::to_string(q.size()));
  }
  double s = 0.0;
  for (std::size_t c = 0; c < p.size(); ++c) s += std::abs(p[c] - q[c]);
  return 0.5 * s;
}

std::vector<double> RowTvd(const SoftLabelMatrix& P, const SoftLabelMatrix& Q) {
  CheckSameShape(P, Q);
  std::vector<double> out(P.rows());
  for (std::size_t i = 0; i < P.rows(); ++i) out[i] = Tvd(P.row(i), Q.row(i));
  return out;
}

double MeanTvd(const SoftLabelMatrix& P, const SoftLabelMatrix& Q) { return Mean(RowTvd(P, Q)); }

double Entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

std::vector<double> RowEntropy(const SoftLabelMatrix& P) {
  std::vector<double> out(P.rows());
  for (std::size_t i = 0; i < P.rows(); ++i) out[i] = Entropy(P.row(i));
  return out;
}

double MeanEntropy(const SoftLabelMatrix& P) { return Mean(RowEntropy(P)); }

double DisagreementRate(const HardLabelVector& a, const HardLabelVector& b) {
  if (a.size() != b.size()) {
    throw InvalidArgument("label vectors differ in length: " + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()));
  }
  if (a.size() == 0) return 0.0;
  std::size_t differ = 0;
  for (std::size_t i = 0; i < a.size(); ++i) differ += a[i] != b[i] ? 1 : 0;
  return static_cast<double>(differ) / static_cast<double>(a.size());
}

nlohmann::json UncertaintyReport::ToJson() const {
  nlohmann::json j = nlohmann::json::object();
  auto put = [&](const char* key, const std::optional<double>& v) {
    j[key] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  put("mean_tvd", mean_tvd);
  put("mean_entropy", mean_entropy);
  put("disagreement_rate", disagreement_rate);
  j["entropy_unit"] = "nats";
  j["named"] = named;
  return j;
}

void UncertaintyReport::WritePerInstanceCsv(const std::filesystem::path& path) const {
  std::size_t n = 0;
  if (per_instance_tvd) n = per_instance_tvd->size();
  if (per_instance_entropy) n = std::max(n, per_instance_entropy->size());
  if (per_instance_disagreement) n = std::max(n, per_instance_disagreement->size());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "row";
  if (per_instance_tvd) out << ",tvd";
  if (per_instance_entropy) out << ",entropy";
  if (per_instance_disagreement) out << ",disagree";
  out << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    out << i;
    if (per_instance_tvd) out << ',' << FormatReal(per_instance_tvd->at(i));
    if (per_instance_entropy) out << ',' << FormatReal(per_instance_entropy->at(i));
    if (per_instance_disagreement) out << ',' << per_instance_disagreement->at(i);
    out << '\n';
  }
}

}  // namespace synlabel
