// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "tea/data/dataset.hpp"

namespace tea::data {

inline constexpr const char* kDatasetFormat = "TEA-DATA-1";

/// Writes the prepared dataset into `dir`:
///   dataset.cbor    full PreparedDataset (CBOR-encoded JSON document)
///   user_ids.tsv    dense_id \t raw_id
///   item_ids.tsv    dense_id \t raw_id
///   stats.json      counts and density plus the effective config
void save_dataset(const PreparedDataset& dataset, const std::filesystem::path& dir,
                  const std::map<std::string, std::string>& config);

/// Throws MissingInput if dataset.cbor is absent, Incompatible if it has the
/// wrong format tag.
PreparedDataset load_dataset(const std::filesystem::path& dir);

}  // namespace tea::data
