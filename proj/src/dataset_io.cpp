#include "synlabel/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "synlabel/errors.hpp"
#include "synlabel/truth_functions.hpp"

namespace synlabel {
namespace {

constexpr int kFormatVersion = 1;

std::vector<std::string> SplitLine(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string Trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

double ParseReal(const std::string& text, long row, long column) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || text.empty()) {
    throw ParseError("non-numeric cell '" + text + "'", row, column);
  }
  if (!std::isfinite(value)) throw ParseError("non-finite cell '" + text + "'", row, column);
  return value;
}

std::optional<long long> ParseInteger(const std::string& text) {
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) return std::nullopt;
  return value;
}

// Index k of a column named p_k, if it is one.
std::optional<std::size_t> SoftColumnIndex(const std::string& name) {
  if (name.size() < 3 || name.compare(0, 2, "p_") != 0) return std::nullopt;
  const auto value = ParseInteger(name.substr(2));
  if (!value || *value < 0 || std::to_string(*value) != name.substr(2)) return std::nullopt;
  return static_cast<std::size_t>(*value);
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Table ReadTable(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  Table table;
  std::string line;
  long line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 0 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    ++line_no;
    if (Trim(line).empty()) continue;
    auto cells = SplitLine(line);
    for (auto& c : cells) c = Trim(c);
    if (!have_header) {
      table.header = std::move(cells);
      have_header = true;
      continue;
    }
    const long data_row = static_cast<long>(table.rows.size());
    if (cells.size() != table.header.size()) {
      throw ParseError("expected " + std::to_string(table.header.size()) + " cells, found " +
                           std::to_string(cells.size()),
                       data_row, static_cast<long>(std::min(cells.size(), table.header.size())));
    }
    table.rows.push_back(std::move(cells));
  }
  if (!have_header) throw ParseError("missing header row", -1, -1);
  std::set<std::string> seen;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (table.header[c].empty()) throw ParseError("malformed header: empty column name", -1, static_cast<long>(c));
    if (!seen.insert(table.header[c]).second) {
      throw ParseError("malformed header: duplicate column '" + table.header[c] + "'", -1, static_cast<long>(c));
    }
  }
  if (table.rows.empty()) throw ParseError("no data rows", -1, -1);
  return table;
}

std::optional<nlohmann::json> ReadSidecar(const std::filesystem::path& csv_path) {
  const auto meta = SidecarPath(csv_path);
  if (!std::filesystem::exists(meta)) return std::nullopt;
  std::ifstream in(meta, std::ios::binary);
  if (!in) throw DataError("cannot open " + meta.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("malformed sidecar " + meta.string() + ": " + e.what());
  }
}

const Provenance* ProvenanceOf(const AnyDataset& d) {
  return std::visit([](const auto& x) { return &x.provenance(); }, d);
}

const LabelSchema& SchemaOf(const AnyDataset& d) {
  return std::visit([](const auto& x) -> const LabelSchema& { return x.schema(); }, d);
}

void WriteRow(std::ostream& out, std::span<const double> features) {
  for (std::size_t j = 0; j < features.size(); ++j) {
    if (j > 0) out << ',';
    out << FormatReal(features[j]);
  }
}

}  // namespace

std::string DatasetKindName(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::kGroundTruth:
      return "ground_truth";
    case DatasetKind::kPartialGroundTruth:
      return "partial_ground_truth";
    case DatasetKind::kObservedSoft:
      return "observed_soft";
    case DatasetKind::kObservedHard:
      return "observed_hard";
  }
  return "unknown";
}

DatasetKind ParseDatasetKind(const std::string& name) {
  for (auto k : {DatasetKind::kGroundTruth, DatasetKind::kPartialGroundTruth, DatasetKind::kObservedSoft,
                 DatasetKind::kObservedHard}) {
    if (DatasetKindName(k) == name) return k;
  }
  throw InvalidArgument("unknown dataset type '" + name + "'");
}

DatasetKind KindOf(const AnyDataset& dataset) { return static_cast<DatasetKind>(dataset.index()); }

std::string FormatReal(double value) {
  char buf[32];
  // The shortest of %.15g..%.17g that round-trips keeps files readable.
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, value);
    double back = 0.0;
    std::from_chars(buf, buf + std::char_traits<char>::length(buf), back);
    if (back == value) break;
  }
  return buf;
}

std::filesystem::path SidecarPath(const std::filesystem::path& csv_path) {
  auto meta = csv_path;
  meta.replace_extension(".meta.json");
  return meta;
}

nlohmann::json SidecarJson(const AnyDataset& dataset, std::optional<std::uint64_t> master_seed) {
  nlohmann::json j;
  j["format_version"] = kFormatVersion;
  j["dataset_type"] = DatasetKindName(KindOf(dataset));
  j["schema"] = {{"class_names", SchemaOf(dataset).class_names()}};
  j["label_encoding"] = "index";
  if (const auto* gt = std::get_if<GroundTruthDataset>(&dataset)) {
    j["truth_function"] = gt->truth_fn()->ToJson();
  } else if (const auto* pg = std::get_if<PartialGroundTruthDataset>(&dataset)) {
    j["partition"] = pg->partition().ToJson();
    j["truth_function"] = pg->truth_fn()->ToJson();
    j["sampler"] = pg->sampler_descriptor();
  }
  nlohmann::json chain = nlohmann::json::array();
  for (const auto& record : *ProvenanceOf(dataset)) chain.push_back(record.ToJson());
  j["provenance"] = chain;
  j["master_seed"] = master_seed ? nlohmann::json(*master_seed) : nlohmann::json(nullptr);
  return j;
}

void WriteDataset(const AnyDataset& dataset, const std::filesystem::path& path,
                  std::optional<std::uint64_t> master_seed) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());

  const FeatureMatrix* features = nullptr;
  const HardLabelVector* hard = nullptr;
  const SoftLabelMatrix* soft = nullptr;
  std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, PartialGroundTruthDataset>) {
          features = &d.kept_features();
          soft = &d.soft_labels();
        } else if constexpr (std::is_same_v<T, ObservedSoftDataset>) {
          features = &d.features();
          soft = &d.soft_labels();
        } else {
          features = &d.features();
          hard = &d.labels();
        }
      },
      dataset);

  const auto& names = features->column_names();
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (names[j] == "label" || SoftColumnIndex(names[j])) {
      throw InvalidArgument("feature column name '" + names[j] + "' is reserved");
    }
    out << names[j] << ',';
  }
  if (hard) {
    out << "label";
  } else {
    for (std::size_t c = 0; c < soft->classes(); ++c) out << (c ? "," : "") << "p_" << c;
  }
  out << '\n';
  const std::size_t n = hard ? hard->size() : soft->rows();
  for (std::size_t i = 0; i < n; ++i) {
    if (features->cols() > 0) {
      WriteRow(out, features->row(i));
      out << ',';
    }
    if (hard) {
      out << (*hard)[i];
    } else {
      WriteRow(out, soft->row(i));
    }
    out << '\n';
  }
  if (!out) throw DataError("failed writing " + path.string());

  std::ofstream meta(SidecarPath(path), std::ios::binary);
  if (!meta) throw DataError("cannot write " + SidecarPath(path).string());
  meta << SidecarJson(dataset, master_seed).dump(2) << '\n';
}

AnyDataset ReadDataset(const std::filesystem::path& path, const FormatDescriptor& format) {
  if (!std::filesystem::exists(path)) throw DataError("no such file: " + path.string());
  const Table table = ReadTable(path);
  const auto sidecar = ReadSidecar(path);

  std::optional<std::size_t> label_col;
  std::map<std::size_t, std::size_t> soft_cols;  // class index -> column
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    const auto& name = table.header[c];
    if (name == "label") {
      label_col = c;
    } else if (const auto k = SoftColumnIndex(name)) {
      soft_cols[*k] = c;
    } else {
      feature_cols.push_back(c);
    }
  }
  if (label_col && !soft_cols.empty()) {
    throw ParseError("header has both a label column and p_* columns", -1, static_cast<long>(*label_col));
  }
  if (!label_col && soft_cols.empty()) throw ParseError("header has neither a label column nor p_* columns");
  for (std::size_t k = 0; k < soft_cols.size(); ++k) {
    if (!soft_cols.count(k)) throw ParseError("missing column p_" + std::to_string(k));
  }

  std::optional<DatasetKind> kind = format.kind;
  if (!kind && sidecar && sidecar->contains("dataset_type")) {
    kind = ParseDatasetKind((*sidecar)["dataset_type"].get<std::string>());
  }
  if (!kind) kind = label_col ? DatasetKind::kObservedHard : DatasetKind::kObservedSoft;
  const bool hard_kind = *kind == DatasetKind::kGroundTruth || *kind == DatasetKind::kObservedHard;
  if (hard_kind && !label_col) throw ParseError("missing column label");
  if (!hard_kind && soft_cols.empty()) throw ParseError("missing column p_0");

  const std::size_t n = table.rows.size();
  std::vector<std::string> names;
  for (std::size_t c : feature_cols) names.push_back(table.header[c]);
  Matrix values(n, feature_cols.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      values(i, j) = ParseReal(table.rows[i][feature_cols[j]], static_cast<long>(i), static_cast<long>(feature_cols[j]));
    }
  }
  FeatureMatrix features(std::move(names), std::move(values));

  std::optional<LabelSchema> schema;
  bool index_encoded = false;
  if (sidecar && sidecar->contains("schema")) {
    schema = LabelSchema((*sidecar)["schema"]["class_names"].get<std::vector<std::string>>());
    index_encoded = sidecar->value("label_encoding", std::string("name")) == "index";
  }

  Provenance provenance;
  if (sidecar && sidecar->contains("provenance")) {
    for (const auto& r : (*sidecar)["provenance"]) provenance.push_back(ProvenanceRecord::FromJson(r));
  }
  if (provenance.empty() && (*kind == DatasetKind::kObservedHard || *kind == DatasetKind::kObservedSoft)) {
    provenance.push_back({"ingest", {{"path", path.filename().string()}}, std::nullopt});
  }

  auto truth_fn = [&]() -> TruthFunctionPtr {
    if (!sidecar || !sidecar->contains("truth_function")) {
      throw ParseError(DatasetKindName(*kind) + " dataset requires a truth_function in " +
                       SidecarPath(path).filename().string());
    }
    return TruthFunctionFromJson((*sidecar)["truth_function"]);
  };

  if (hard_kind) {
    const std::size_t col = *label_col;
    std::vector<ClassId> labels(n);
    const bool all_integer = std::all_of(table.rows.begin(), table.rows.end(), [&](const auto& r) {
      const auto v = ParseInteger(r[col]);
      return v && *v >= 0;
    });
    if (schema) {
      for (std::size_t i = 0; i < n; ++i) {
        const auto& cell = table.rows[i][col];
        std::optional<ClassId> id;
        if (index_encoded) {
          if (const auto v = ParseInteger(cell); v && *v >= 0 && static_cast<std::size_t>(*v) < schema->class_count()) {
            id = static_cast<ClassId>(*v);
          }
        } else {
          id = schema->IndexOf(cell);
        }
        if (!id) throw ParseError("label '" + cell + "' does not match the schema", static_cast<long>(i), static_cast<long>(col));
        labels[i] = *id;
      }
    } else if (all_integer) {
      long long max_label = 0;
      for (std::size_t i = 0; i < n; ++i) {
        labels[i] = static_cast<ClassId>(*ParseInteger(table.rows[i][col]));
        max_label = std::max<long long>(max_label, labels[i]);
      }
      schema = LabelSchema::WithClassCount(std::max<std::size_t>(2, static_cast<std::size_t>(max_label) + 1));
    } else {
      std::set<std::string> unique;
      for (const auto& r : table.rows) {
        if (r[col].empty()) throw ParseError("empty label", static_cast<long>(&r - table.rows.data()), static_cast<long>(col));
        unique.insert(r[col]);
      }
      if (unique.size() < 2) unique.insert("__other__");
      schema = LabelSchema(std::vector<std::string>(unique.begin(), unique.end()));
      for (std::size_t i = 0; i < n; ++i) labels[i] = *schema->IndexOf(table.rows[i][col]);
    }
    HardLabelVector y(std::move(labels));
    if (*kind == DatasetKind::kGroundTruth) {
      return GroundTruthDataset(std::move(features), std::move(y), truth_fn(), *schema, std::move(provenance));
    }
    return ObservedHardDataset(std::move(features), std::move(y), *schema, std::move(provenance));
  }

  const std::size_t C = soft_cols.size();
  if (!schema) {
    schema = LabelSchema::WithClassCount(C);
  } else if (schema->class_count() != C) {
    throw ParseError("schema has " + std::to_string(schema->class_count()) + " classes but the header has " +
                     std::to_string(C) + " p_* columns");
  }
  Matrix probs(n, C);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < C; ++k) {
      probs(i, k) = ParseReal(table.rows[i][soft_cols[k]], static_cast<long>(i), static_cast<long>(soft_cols[k]));
    }
  }
  SoftLabelMatrix soft(std::move(probs));
  if (*kind == DatasetKind::kPartialGroundTruth) {
    if (!sidecar || !sidecar->contains("partition")) throw ParseError("partial ground truth requires a partition in the sidecar");
    auto partition = FeaturePartition::FromJson((*sidecar)["partition"]);
    nlohmann::json sampler = sidecar->value("sampler", nlohmann::json(nullptr));
    return PartialGroundTruthDataset(std::move(features), std::move(partition), truth_fn(), std::move(soft), *schema,
                                     std::move(sampler), std::move(provenance));
  }
  return ObservedSoftDataset(std::move(features), std::move(soft), *schema, std::move(provenance));
}

}  // namespace synlabel
