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

#include "patchshade/image_io.h"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <sstream>

#include "patchshade/error.h"

namespace patchshade {
namespace {

[[noreturn]] void IoFail(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::kIo, path + ": " + what);
}

std::ofstream OpenOut(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) IoFail(path, "cannot open for writing");
  out << std::setprecision(17);
  return out;
}

std::ifstream OpenIn(const std::string& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) IoFail(path, "cannot open for reading");
  return in;
}

// Reads "key v1 v2 ..." and checks the key.
std::istringstream ExpectLine(std::istream& in, const std::string& path, const std::string& key) {
  std::string line;
  if (!std::getline(in, line)) IoFail(path, "missing '" + key + "' line");
  std::istringstream fields(line);
  std::string got;
  fields >> got;
  if (got != key) IoFail(path, "expected '" + key + "', found '" + got + "'");
  return fields;
}

void WritePng(const std::string& path, int width, int height, int color_type, int channels,
              const std::vector<std::uint8_t>& data) {
  if (data.size() != static_cast<size_t>(width) * height * channels) {
    IoFail(path, "pixel buffer size does not match the image size");
  }
  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!file) IoFail(path, "cannot open for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    IoFail(path, "libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    IoFail(path, "libpng write failed");
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, width, height, 8, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, const_cast<png_bytep>(data.data() + static_cast<size_t>(y) * width * channels));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

void WritePgm16(const std::string& path, int width, int height, const std::vector<double>& values) {
  if (values.size() != static_cast<size_t>(width) * height) IoFail(path, "value count does not match size");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double offset = values.empty() ? 0.0 : *lo_it;
  double scale = values.empty() ? 1.0 : *hi_it - *lo_it;
  if (!(scale > 0.0)) scale = 1.0;
  auto out = OpenOut(path, std::ios::out | std::ios::binary);
  out << "P5\n# patchshade offset " << offset << " scale " << scale << "\n"
      << width << " " << height << "\n65535\n";
  for (double v : values) {
    const auto q = static_cast<std::uint16_t>(std::lround((v - offset) / scale * 65535.0));
    const char bytes[2] = {static_cast<char>(q >> 8), static_cast<char>(q & 0xff)};
    out.write(bytes, 2);
  }
  if (!out) IoFail(path, "write failed");
}

PgmImage ReadPgm16(const std::string& path) {
  auto in = OpenIn(path, std::ios::in | std::ios::binary);
  std::string magic;
  in >> magic;
  if (magic != "P5") IoFail(path, "not a binary PGM");
  double offset = 0.0, scale = 65535.0;
  int fields[3];
  int got = 0;
  while (got < 3) {
    in >> std::ws;
    if (in.peek() == '#') {
      std::string comment;
      std::getline(in, comment);
      std::istringstream c(comment);
      std::string hash, tag, k1, k2;
      double o, s;
      if (c >> hash >> tag >> k1 >> o >> k2 >> s && tag == "patchshade" && k1 == "offset" && k2 == "scale") {
        offset = o;
        scale = s;
      }
      continue;
    }
    if (!(in >> fields[got])) IoFail(path, "malformed PGM header");
    ++got;
  }
  if (fields[2] != 65535) IoFail(path, "only 16-bit PGM (maxval 65535) is supported");
  in.get();
  PgmImage img;
  img.width = fields[0];
  img.height = fields[1];
  img.values.resize(static_cast<size_t>(img.width) * img.height);
  for (double& v : img.values) {
    unsigned char bytes[2];
    if (!in.read(reinterpret_cast<char*>(bytes), 2)) IoFail(path, "truncated PGM data");
    v = offset + scale * ((bytes[0] << 8) | bytes[1]) / 65535.0;
  }
  return img;
}

void WriteImageSidecar(const std::string& path, const RenderedImage& img) {
  auto out = OpenOut(path);
  const auto& g = img.grid;
  out << "patchshade-image 1\n"
      << "width " << g.width << "\n"
      << "height " << g.height << "\n"
      << "spacing " << g.spacing << "\n"
      << "origin " << g.origin.x() << " " << g.origin.y() << "\n"
      << "light " << img.light.l.x() << " " << img.light.l.y() << " " << img.light.l.z() << "\n"
      << "ambient " << img.light.ambient << "\n"
      << "clamp " << (img.clamp == ClampMode::kNone ? "none" : "zero-floor") << "\n"
      << "data\n";
  for (int j = 0; j < g.height; ++j) {
    for (int i = 0; i < g.width; ++i) out << (i ? " " : "") << img.at(i, j);
    out << "\n";
  }
  if (!out) IoFail(path, "write failed");
}

RenderedImage ReadImageSidecar(const std::string& path) {
  auto in = OpenIn(path);
  RenderedImage img;
  int version = 0;
  if (!(ExpectLine(in, path, "patchshade-image") >> version) || version != 1) {
    IoFail(path, "unsupported sidecar version");
  }
  auto& g = img.grid;
  bool ok = static_cast<bool>(ExpectLine(in, path, "width") >> g.width);
  ok = ok && static_cast<bool>(ExpectLine(in, path, "height") >> g.height);
  ok = ok && static_cast<bool>(ExpectLine(in, path, "spacing") >> g.spacing);
  ok = ok && static_cast<bool>(ExpectLine(in, path, "origin") >> g.origin.x() >> g.origin.y());
  ok = ok && static_cast<bool>(ExpectLine(in, path, "light") >> img.light.l.x() >> img.light.l.y() >>
                               img.light.l.z());
  ok = ok && static_cast<bool>(ExpectLine(in, path, "ambient") >> img.light.ambient);
  std::string clamp;
  ok = ok && static_cast<bool>(ExpectLine(in, path, "clamp") >> clamp);
  if (!ok || g.width <= 0 || g.height <= 0) IoFail(path, "malformed sidecar header");
  if (clamp == "none") {
    img.clamp = ClampMode::kNone;
  } else if (clamp == "zero-floor") {
    img.clamp = ClampMode::kZeroFloor;
  } else {
    IoFail(path, "unknown clamp mode '" + clamp + "'");
  }
  ExpectLine(in, path, "data");
  img.intensities.resize(g.size());
  for (double& v : img.intensities) {
    if (!(in >> v)) IoFail(path, "truncated sidecar data");
  }
  return img;
}

void WriteHeightGrid(const std::string& path, const HeightGrid& grid) {
  auto out = OpenOut(path);
  out << grid.width << " " << grid.height << " " << grid.spacing << "\n";
  for (int j = 0; j < grid.height; ++j) {
    for (int i = 0; i < grid.width; ++i) out << (i ? " " : "") << grid.at(i, j);
    out << "\n";
  }
  if (!out) IoFail(path, "write failed");
}

HeightGrid ReadHeightGrid(const std::string& path) {
  auto in = OpenIn(path);
  HeightGrid grid;
  if (!(in >> grid.width >> grid.height >> grid.spacing) || grid.width <= 0 || grid.height <= 0) {
    IoFail(path, "malformed height-field header");
  }
  grid.values.resize(static_cast<size_t>(grid.width) * grid.height);
  for (double& v : grid.values) {
    if (!(in >> v)) IoFail(path, "truncated height-field data");
  }
  return grid;
}

void WritePngGray(const std::string& path, int width, int height, const std::vector<std::uint8_t>& gray) {
  WritePng(path, width, height, PNG_COLOR_TYPE_GRAY, 1, gray);
}

void WritePngRgb(const std::string& path, int width, int height, const std::vector<std::uint8_t>& rgb) {
  WritePng(path, width, height, PNG_COLOR_TYPE_RGB, 3, rgb);
}

std::vector<std::uint8_t> ToGray8(const std::vector<double>& values) {
  std::vector<std::uint8_t> out(values.size(), 0);
  if (values.empty()) return out;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double range = *hi - *lo;
  for (size_t k = 0; k < values.size(); ++k) {
    out[k] = range > 0.0 ? static_cast<std::uint8_t>(std::lround((values[k] - *lo) / range * 255.0)) : 128;
  }
  return out;
}

}  // namespace patchshade
