// SPDX-FileCopyrightText: Copyright (c) 2026 The gnvp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Binary checkpoint layout (all integers little-endian):
//
//   "GNVP"  u32 version
//   spec:      str name, u32 N, u32 count + str atom symbols, u32 count + str bond symbols
//   metadata:  u32 count, then (str key, str value) pairs
//   tensors:   u32 count, then (str name, u32 rank, u64 dims..., f64 data...)
//   u32 CRC-32 of every preceding byte
//
// where str is a u32 byte length followed by the bytes.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "gnvp/error.hpp"
#include "gnvp/flow.hpp"
#include "gnvp/graph.hpp"
#include "gnvp/tensor.hpp"

namespace gnvp {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointContents {
  GraphSpec spec;
  std::map<std::string, std::string> metadata;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor* find(std::string_view name) const;
  const std::string& meta(const std::string& key) const;
};

std::string encode_checkpoint(const CheckpointContents& contents);
/// Throws CheckpointError for bad magic, unknown version, truncation or a CRC mismatch.
CheckpointContents decode_checkpoint(std::string_view bytes);

void write_checkpoint_file(const std::filesystem::path& path, const CheckpointContents& contents);
CheckpointContents read_checkpoint_file(const std::filesystem::path& path);

/// Spec, architecture metadata, "param/<name>" and "buffer/<name>" tensors.
CheckpointContents model_contents(const FlowModel& model);
/// Throws CheckpointError(kSpecMismatch) unless the stored spec equals `expected`.
FlowModel model_from_contents(const CheckpointContents& contents, const GraphSpec& expected);

void save_checkpoint(const FlowModel& model, const std::filesystem::path& path);
FlowModel load_checkpoint(const std::filesystem::path& path, const GraphSpec& expected);
/// Loads with whatever spec the file records.
FlowModel load_checkpoint(const std::filesystem::path& path);

}  // namespace gnvp
