// Copyright 2026 The patchshade Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PATCHSHADE_IMAGE_IO_H_
#define PATCHSHADE_IMAGE_IO_H_

#include <cstdint>
#include <string>
#include <vector>

#include "patchshade/renderer.h"
#include "patchshade/surface_geometry.h"

namespace patchshade {

// All functions throw ErrorCode::kIo with the offending path on failure.

// 16-bit binary PGM. Values map linearly onto [0, 65535]; the map is stored in
// a "# patchshade offset <o> scale <s>" comment so ReadPgm16 can invert it
// (to within scale / 65535).
void WritePgm16(const std::string& path, int width, int height, const std::vector<double>& values);

struct PgmImage {
  int width = 0;
  int height = 0;
  std::vector<double> values;
};

PgmImage ReadPgm16(const std::string& path);

// Lossless text sidecar: header lines (width, height, spacing, origin, light,
// ambient, clamp) followed by row-major values printed with 17 digits.
void WriteImageSidecar(const std::string& path, const RenderedImage& img);
RenderedImage ReadImageSidecar(const std::string& path);

// Height-field text format: "width height spacing" on the first line, then
// row-major heights. The origin is (0, 0).
void WriteHeightGrid(const std::string& path, const HeightGrid& grid);
HeightGrid ReadHeightGrid(const std::string& path);

// 8-bit PNG; gray has one byte per pixel, rgb three.
void WritePngGray(const std::string& path, int width, int height, const std::vector<std::uint8_t>& gray);
void WritePngRgb(const std::string& path, int width, int height, const std::vector<std::uint8_t>& rgb);

// Linear map of values onto 0..255 between their min and max.
std::vector<std::uint8_t> ToGray8(const std::vector<double>& values);

}  // namespace patchshade

#endif  // PATCHSHADE_IMAGE_IO_H_
