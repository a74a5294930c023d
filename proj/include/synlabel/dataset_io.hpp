#pragma once

// CSV + sidecar serialization of the chain datasets.
//
// CSV: header row, feature columns by name, then either a `label` column
// (hard labels) or `p_0` .. `p_{C-1}` (soft labels). Reals are written as the
// shortest text that parses back exactly, so a round trip is lossless.
//
// Sidecar `<stem>.meta.json`: dataset type, schema, partition, truth
// function, sampler descriptor, provenance chain and master seed.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "synlabel/data_model.hpp"

namespace synlabel {

enum class DatasetKind { kGroundTruth, kPartialGroundTruth, kObservedSoft, kObservedHard };

std::string DatasetKindName(DatasetKind kind);
DatasetKind ParseDatasetKind(const std::string& name);
DatasetKind KindOf(const AnyDataset& dataset);

// Shortest "%.17g" text; parses back to the same double.
std::string FormatReal(double value);

struct FormatDescriptor {
  // Forces the dataset type; otherwise taken from the sidecar, then from
  // the header (label column -> observed hard, p_* columns -> observed soft).
  std::optional<DatasetKind> kind;
};

std::filesystem::path SidecarPath(const std::filesystem::path& csv_path);

// Throws DataError when the file is missing and ParseError (with row and
// column where known) on malformed content. A sidecar is used when present.
AnyDataset ReadDataset(const std::filesystem::path& path, const FormatDescriptor& format = {});

// Writes the CSV and its sidecar. Parent directories must exist.
void WriteDataset(const AnyDataset& dataset, const std::filesystem::path& path,
                  std::optional<std::uint64_t> master_seed = std::nullopt);

nlohmann::json SidecarJson(const AnyDataset& dataset, std::optional<std::uint64_t> master_seed);

}  // namespace synlabel
