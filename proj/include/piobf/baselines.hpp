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
//
// The two formal-privacy comparators: Laplace noise on pixels and Laplace
// noise on singular values.
#ifndef PIOBF_BASELINES_HPP_
#define PIOBF_BASELINES_HPP_

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "piobf/image.hpp"
#include "piobf/rng.hpp"
#include "piobf/svd.hpp"

namespace piobf {

struct PixDPParams {
  double epsilon = 1.0;
  double pixel_sensitivity = 1.0;  // full [0,1] pixel range
  int neighborhood_pixels = 1;     // pixels in which neighbors may differ

  void validate() const {
    if (!(epsilon > 0.0) || !(pixel_sensitivity > 0.0) || neighborhood_pixels < 1)
      throw std::invalid_argument("PixDPParams: all fields must be positive");
  }
};

struct SVDPrivParams {
  double epsilon = 1.0;
  int rank_kept = -1;          // negative means full rank
  double sv_sensitivity = 1.0; // calibration knob; no canonical value exists

  void validate() const {
    if (!(epsilon > 0.0) || !(sv_sensitivity > 0.0))
      throw std::invalid_argument("SVDPrivParams: epsilon and sensitivity must be positive");
  }
};

// Independent Laplace noise on every pixel, then clamp.
inline GrayImage pixdp_obfuscate(const GrayImage& img, const PixDPParams& p, CounterRng& rng) {
  p.validate();
  img.validate();
  const double scale = p.pixel_sensitivity * p.neighborhood_pixels / p.epsilon;
  GrayImage out = img;
  for (double& px : out.pixels) px = clamp01(px + rng.laplace(scale));
  return out;
}

// Laplace noise on the top rank_kept singular values; singular values are
// clamped at zero before reconstruction and pixels at [0,1] after.
inline GrayImage svdpriv_obfuscate(const GrayImage& img, const SVDPrivParams& p,
                                   CounterRng& rng) {
  p.validate();
  img.validate();
  if (p.rank_kept == 0 || p.rank_kept > std::min(img.height, img.width))
    throw std::invalid_argument("SVDPrivParams: rank_kept outside [1, min(H,W)]");
  Matrix m(img.height, img.width);
  m.a = img.pixels;
  SvdResult dec = svd(m);
  const int n = static_cast<int>(dec.s.size());
  const int kept = p.rank_kept < 0 ? n : std::min(p.rank_kept, n);
  const double scale = p.sv_sensitivity / p.epsilon;
  for (int j = 0; j < kept; ++j) dec.s[j] = std::max(0.0, dec.s[j] + rng.laplace(scale));
  for (int j = kept; j < n; ++j) dec.s[j] = 0.0;  // values past the kept rank are dropped
  Matrix rec = svd_reconstruct(dec, kept);
  GrayImage out(img.height, img.width);
  for (size_t i = 0; i < out.pixels.size(); ++i) out.pixels[i] = clamp01(rec.a[i]);
  return out;
}

}  // namespace piobf

#endif  // PIOBF_BASELINES_HPP_
