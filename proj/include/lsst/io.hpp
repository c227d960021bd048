// Copyright 2026 The LSST Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LSST_IO_HPP_
#define LSST_IO_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lsst/config.hpp"
#include "lsst/optim.hpp"
#include "lsst/params.hpp"
#include "lsst/tensor.hpp"

// File formats. All integers little-endian.
//
// Cube file (.hsc):
//   0   4  magic "HSC1"
//   4   4  u32 H
//   8   4  u32 W
//   12  4  u32 bands
//   16  4  u32 dtype: element width in bytes, 4 = f32, 8 = f64
//   20  .. band-sequential raster, value (i, j, k) at index (k * H + i) * W + j
// Masks and measurements are stored as single-band cubes.
//
// Checkpoint (.ckpt):
//   magic "LSSTCKPT"; config block of u32 channels, groups, repeats[3],
//   dw_kernel, fusion_kernel, ffn_expansion, bands, step, variant
//   (0 S, 1 M, 2 L, 3 Plus) followed by f64 alpha; u32 entry count; entries
//   of (u32 name length, name bytes, u32 rank, u32 dims[rank], f32 data).
namespace lsst::io {

enum class DType : std::uint32_t { kF32 = 4, kF64 = 8 };

std::vector<std::byte> encode_cube(const Tensor& cube, DType dtype = DType::kF64);
// Parses a cube file image. Throws ParseError with the failing byte offset.
Tensor decode_cube(std::span<const std::byte> bytes, DType* dtype = nullptr);

void write_cube(const std::filesystem::path& path, const Tensor& cube, DType dtype = DType::kF64);
Tensor read_cube(const std::filesystem::path& path, DType* dtype = nullptr);

// [H, W] tensors stored as one-band cubes.
void write_mask(const std::filesystem::path& path, const Tensor& mask);
Tensor read_mask(const std::filesystem::path& path);
void write_measurement(const std::filesystem::path& path, const Tensor& y);
Tensor read_measurement(const std::filesystem::path& path);

std::vector<std::byte> encode_checkpoint(const ParameterStore& store, const ModelConfig& cfg);

struct Checkpoint {
  ModelConfig config;
  ParameterStore store;
};
// Parses without reference to an expected layout.
Checkpoint decode_checkpoint(std::span<const std::byte> bytes);

void save_checkpoint(const std::filesystem::path& path, const ParameterStore& store,
                     const ModelConfig& cfg);
Checkpoint read_checkpoint(const std::filesystem::path& path);
// Loads into `cfg`: rejects a different config block and any parameter name,
// order or shape that build_model(cfg) would not produce.
ParameterStore load_checkpoint(const std::filesystem::path& path, const ModelConfig& cfg);
ParameterStore load_checkpoint(std::span<const std::byte> bytes, const ModelConfig& cfg);

// Adam state side file (magic "LSSTADAM"), f64 moments.
std::vector<std::byte> encode_optimizer(const OptimizerState& state);
OptimizerState decode_optimizer(std::span<const std::byte> bytes);
void save_optimizer(const std::filesystem::path& path, const OptimizerState& state);
OptimizerState load_optimizer(const std::filesystem::path& path);

std::vector<std::byte> read_file(const std::filesystem::path& path);
// Writes to a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::byte> bytes);
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

// RFC 4180 field quoting.
std::string csv_field(const std::string& field);
std::string csv_row(const std::vector<std::string>& fields);

}  // namespace lsst::io

#endif  // LSST_IO_HPP_
