// Copyright 2026 PI-Obfuscate Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#ifndef PIOBF_IMAGE_HPP_
#define PIOBF_IMAGE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace piobf {

// Grayscale image with pixels in [0, 1], stored row-major.
struct GrayImage {
  int height = 0;
  int width = 0;
  std::vector<double> pixels;

  GrayImage() = default;
  GrayImage(int h, int w, double fill = 0.0)
      : height(h), width(w), pixels(static_cast<size_t>(h) * w, fill) {}

  double& at(int r, int c) { return pixels[static_cast<size_t>(r) * width + c]; }
  double at(int r, int c) const { return pixels[static_cast<size_t>(r) * width + c]; }

  void validate() const {
    if (height < 1 || width < 1) throw std::invalid_argument("GrayImage: empty shape");
    if (pixels.size() != static_cast<size_t>(height) * width)
      throw std::invalid_argument("GrayImage: pixel count mismatch");
    for (double p : pixels)
      if (!std::isfinite(p) || p < 0.0 || p > 1.0)
        throw std::invalid_argument("GrayImage: pixel outside [0,1]");
  }
};

inline double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

// Binary PGM (P5, maxval 255). Quantization rounds half up from [0,1].
inline void write_pgm(std::ostream& os, const GrayImage& img) {
  img.validate();
  os << "P5\n" << img.width << " " << img.height << "\n255\n";
  for (double p : img.pixels) {
    const int v = static_cast<int>(std::floor(p * 255.0 + 0.5));
    os.put(static_cast<char>(std::min(255, std::max(0, v))));
  }
}

inline GrayImage read_pgm(std::istream& is) {
  std::string magic;
  is >> magic;
  if (magic != "P5") throw std::runtime_error("read_pgm: not a binary PGM");
  auto next_token = [&is]() {
    std::string tok;
    for (;;) {
      is >> tok;
      if (!is) throw std::runtime_error("read_pgm: truncated header");
      if (tok[0] == '#') {
        std::string rest;
        std::getline(is, rest);
        continue;
      }
      return tok;
    }
  };
  const int w = std::stoi(next_token());
  const int h = std::stoi(next_token());
  const int maxval = std::stoi(next_token());
  if (maxval != 255) throw std::runtime_error("read_pgm: maxval must be 255");
  is.get();  // single whitespace after header
  GrayImage img(h, w);
  for (size_t i = 0; i < img.pixels.size(); ++i) {
    const int c = is.get();
    if (c == EOF) throw std::runtime_error("read_pgm: truncated pixel data");
    img.pixels[i] = static_cast<double>(c) / 255.0;
  }
  return img;
}

}  // namespace piobf

#endif  // PIOBF_IMAGE_HPP_
