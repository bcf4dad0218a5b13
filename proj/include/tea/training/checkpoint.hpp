// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>

#include "tea/model/tea_model.hpp"

// Binary checkpoint, little-endian throughout:
//   "TEA-CKPT-1\n"
//   u32 config length, config text ("key = value" lines)
//   u64 epoch
//   u32 tensor count, then per tensor:
//     u32 name length, name, u32 rank, u64 dims[rank], f64 values[prod(dims)]
namespace tea::training {

inline constexpr char kCheckpointMagic[] = "TEA-CKPT-1";

struct Checkpoint {
  std::map<std::string, std::string> config;
  std::size_t epoch = 0;
  model::TeaModel model;
};

/// The model's own shape keys (variant, dim, n_users, n_items, seq_len) are
/// always written, overriding same-named entries of `config`.
void save_checkpoint(const std::filesystem::path& path, const model::TeaModel& model,
                     std::map<std::string, std::string> config, std::size_t epoch);

/// Throws MissingInput if the file is absent and Incompatible for a wrong
/// header, truncated content or tensors that do not fit the stored config.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace tea::training
