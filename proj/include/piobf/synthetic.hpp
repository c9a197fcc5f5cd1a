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
// A fully controllable stand-in for a pretrained image generator: a linear
// orthonormal generator whose inversion is a transpose, an attribute-
// structured synthetic population with identities nested inside semantic
// clusters, and a per-attribute logistic classifier.
#ifndef PIOBF_SYNTHETIC_HPP_
#define PIOBF_SYNTHETIC_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "piobf/core.hpp"
#include "piobf/image.hpp"
#include "piobf/rng.hpp"

namespace piobf {

// Orthonormal basis mapping latent codes to grayscale images and back.
// Pixels are bias + scale * B x before clamping; the scale is calibrated at
// population generation so in-population renders essentially never clamp.
struct LinearGenerator {
  Matrix basis;  // (H*W) x d, orthonormal columns
  int height = 0;
  int width = 0;
  Vec bias;
  double scale = 1.0;

  int latent_dim() const { return basis.cols; }
};

inline LinearGenerator make_generator(int height, int width, int d, uint64_t seed) {
  if (height * width < d)
    throw std::invalid_argument("make_generator: need H*W >= d");
  LinearGenerator g;
  g.height = height;
  g.width = width;
  g.basis = Matrix(height * width, d);
  CounterRng rng(seed, /*stream_key=*/0x67656e); // "gen"
  for (double& v : g.basis.a) v = rng.normal();
  orthonormalize_columns(g.basis);
  g.bias.assign(static_cast<size_t>(height) * width, 0.5);
  g.scale = 1.0;
  return g;
}

inline GrayImage render(const LinearGenerator& g, const LatentCode& x) {
  if (static_cast<int>(x.values.size()) != g.basis.cols)
    throw std::invalid_argument("render: dimension mismatch");
  GrayImage img(g.height, g.width);
  Vec px = matvec(g.basis, x.values);
  for (size_t i = 0; i < img.pixels.size(); ++i)
    img.pixels[i] = clamp01(g.bias[i] + g.scale * px[i]);
  return img;
}

// Least-squares inversion: exact whenever the render did not clamp, and the
// orthogonal projection onto the basis otherwise.
inline LatentCode invert(const LinearGenerator& g, const GrayImage& img) {
  if (img.height != g.height || img.width != g.width)
    throw std::invalid_argument("invert: shape mismatch");
  Vec residual(img.pixels.size());
  for (size_t i = 0; i < residual.size(); ++i) residual[i] = img.pixels[i] - g.bias[i];
  LatentCode x;
  x.values = matTvec(g.basis, residual);
  for (double& v : x.values) v /= g.scale;
  x.identity_id = 0;
  x.semantic = SemanticLabel::from_cluster_index(0, 1);
  return x;
}

struct PopulationSpec {
  int d = 32;
  int m = 4;
  int num_identities = 8;        // identities per non-empty cluster
  int samples_per_identity = 16;
  double cluster_spread = 0.35;    // per-coordinate scatter of identity means
  double identity_spread = 0.105;  // per-coordinate scatter of samples
  uint64_t seed = 1;
  double mean_scale = 1.26;           // per-coordinate scatter of cluster means
  double separation_factor = 4.0;     // min inter-mean distance, in intra-std units
  double label_flip_rate = 0.0;
  bool entangled = false;             // overlapping clusters; skips separation
  std::vector<std::string> exclude_patterns;  // semantic bit strings left empty

  void validate() const {
    if (d < 2) throw std::invalid_argument("PopulationSpec: d must be >= 2");
    if (m < 1) throw std::invalid_argument("PopulationSpec: m must be >= 1");
    if (num_identities < 2)
      throw std::invalid_argument("PopulationSpec: num_identities must be >= 2");
    if (samples_per_identity < 1)
      throw std::invalid_argument("PopulationSpec: samples_per_identity must be >= 1");
    if (!(cluster_spread > 0.0))
      throw std::invalid_argument("PopulationSpec: cluster_spread must be > 0");
    if (!(identity_spread > 0.0) || identity_spread >= cluster_spread)
      throw std::invalid_argument(
          "PopulationSpec: need 0 < identity_spread < cluster_spread");
    if (label_flip_rate < 0.0 || label_flip_rate > 1.0)
      throw std::invalid_argument("PopulationSpec: label_flip_rate outside [0,1]");
  }
};

namespace detail {
inline Vec gaussian_vec(int d, double sigma, CounterRng& rng) {
  Vec v(d);
  for (int i = 0; i < d; ++i) v[i] = sigma * rng.normal();
  return v;
}
}  // namespace detail

// Draws cluster means, identity means nested inside them, and samples nested
// inside identities. Cluster means are redrawn until every pair is at least
// separation_factor times the expected member standard deviation apart.
inline Dataset generate_population(const PopulationSpec& spec) {
  spec.validate();
  const int num_clusters = 1 << spec.m;

  std::vector<bool> excluded(num_clusters, false);
  for (const std::string& pat : spec.exclude_patterns) {
    if (static_cast<int>(pat.size()) != spec.m)
      throw std::invalid_argument("generate_population: exclude pattern length != m");
    int idx = 0;
    for (char ch : pat) {
      if (ch != '0' && ch != '1')
        throw std::invalid_argument("generate_population: exclude pattern must be binary");
      idx = (idx << 1) | (ch - '0');
    }
    excluded[idx] = true;
  }

  CounterRng mean_rng(spec.seed, 0x6d65616e);  // "mean"
  const double member_std =
      std::sqrt(spec.d * (spec.cluster_spread * spec.cluster_spread +
                          spec.identity_spread * spec.identity_spread));
  const double min_sep = spec.entangled ? 0.0 : spec.separation_factor * member_std;

  std::vector<Vec> means;
  for (int c = 0; c < num_clusters; ++c) {
    bool placed = false;
    for (int attempt = 0; attempt < 1000; ++attempt) {
      Vec candidate = detail::gaussian_vec(spec.d, spec.mean_scale, mean_rng);
      bool ok = true;
      for (const Vec& other : means)
        if (norm(sub(candidate, other)) < min_sep) {
          ok = false;
          break;
        }
      if (ok) {
        means.push_back(std::move(candidate));
        placed = true;
        break;
      }
    }
    if (!placed)
      throw std::runtime_error(
          "generate_population: could not separate cluster means; increase d or "
          "mean_scale, or decrease the spreads");
  }

  Dataset data;
  data.d = spec.d;
  data.m = spec.m;
  CounterRng body_rng(spec.seed, 0x626f6479);  // "body"
  CounterRng flip_rng(spec.seed, 0x666c6970);  // "flip"
  int identity_id = 0;
  for (int c = 0; c < num_clusters; ++c) {
    if (excluded[c]) continue;
    const SemanticLabel label = SemanticLabel::from_cluster_index(c, spec.m);
    for (int ident = 0; ident < spec.num_identities; ++ident) {
      Vec ident_mean = means[c];
      axpy(1.0, detail::gaussian_vec(spec.d, spec.cluster_spread, body_rng), ident_mean);
      for (int s = 0; s < spec.samples_per_identity; ++s) {
        LatentCode code;
        code.values = ident_mean;
        axpy(1.0, detail::gaussian_vec(spec.d, spec.identity_spread, body_rng), code.values);
        code.identity_id = identity_id;
        code.semantic = label;
        if (spec.label_flip_rate > 0.0)
          for (uint8_t& b : code.semantic.bits)
            if (flip_rng.uniform() < spec.label_flip_rate) b ^= 1;
        data.codes.push_back(std::move(code));
      }
      ++identity_id;
    }
  }
  data.num_identities = identity_id;
  data.validate();
  return data;
}

// Sets the render scale so the q-quantile of in-population |pixel - bias|
// lands at `band`; with band well under 0.5 essentially nothing clamps.
inline void calibrate_render_scale(LinearGenerator& g, const Dataset& data,
                                   double band = 0.35, double q = 0.999) {
  std::vector<double> magnitudes;
  magnitudes.reserve(data.codes.size() * g.basis.rows);
  for (const LatentCode& c : data.codes) {
    Vec px = matvec(g.basis, c.values);
    for (double v : px) magnitudes.push_back(std::fabs(v));
  }
  const double qv = quantile(magnitudes, q);
  if (qv <= 0.0) throw std::runtime_error("calibrate_render_scale: degenerate population");
  g.scale = band / qv;
}

// Per-attribute logistic regression on latent codes; the stand-in for the
// pretrained attribute model that labels the population.
struct AttributeClassifier {
  Matrix weights;  // m x d
  Vec biases;      // m

  Vec probabilities(const Vec& x) const {
    Vec logits = matvec(weights, x);
    Vec p(logits.size());
    for (size_t j = 0; j < logits.size(); ++j) p[j] = 1.0 / (1.0 + std::exp(-(logits[j] + biases[j])));
    return p;
  }
};

inline SemanticLabel predict_semantics(const AttributeClassifier& c, const LatentCode& x) {
  const Vec p = c.probabilities(x.values);
  SemanticLabel s;
  s.bits.resize(p.size());
  for (size_t j = 0; j < p.size(); ++j) s.bits[j] = p[j] >= 0.5 ? 1 : 0;
  return s;
}

// Fits m independent logistic regressors with plain gradient descent.
// Degenerate (constant) attributes fall back to a constant predictor via the
// bias; the returned flags mark them.
inline AttributeClassifier train_attribute_classifier(const Dataset& data,
                                                      std::vector<bool>* degenerate = nullptr,
                                                      int iterations = 300,
                                                      double lr = 0.5) {
  data.validate();
  const int n = static_cast<int>(data.codes.size());
  if (n == 0) throw std::invalid_argument("train_attribute_classifier: empty dataset");
  AttributeClassifier c;
  c.weights = Matrix(data.m, data.d);
  c.biases.assign(data.m, 0.0);
  if (degenerate) degenerate->assign(data.m, false);

  for (int j = 0; j < data.m; ++j) {
    int positives = 0;
    for (const LatentCode& code : data.codes) positives += code.semantic.bits[j];
    if (positives == 0 || positives == n) {
      // Constant attribute: pin the bias far into the observed class.
      c.biases[j] = positives == 0 ? -20.0 : 20.0;
      if (degenerate) (*degenerate)[j] = true;
      continue;
    }
    Vec w(data.d, 0.0);
    double b = 0.0;
    for (int it = 0; it < iterations; ++it) {
      Vec gw(data.d, 0.0);
      double gb = 0.0;
      for (const LatentCode& code : data.codes) {
        const double z = dot(w, code.values) + b;
        const double p = 1.0 / (1.0 + std::exp(-z));
        const double err = p - static_cast<double>(code.semantic.bits[j]);
        axpy(err, code.values, gw);
        gb += err;
      }
      axpy(-lr / n, gw, w);
      b -= lr / n * gb;
    }
    for (int col = 0; col < data.d; ++col) c.weights(j, col) = w[col];
    c.biases[j] = b;
  }
  return c;
}

inline double classifier_accuracy(const AttributeClassifier& c, const Dataset& data) {
  if (data.codes.empty()) return 0.0;
  long correct = 0, total = 0;
  for (const LatentCode& code : data.codes) {
    const SemanticLabel pred = predict_semantics(c, code);
    for (int j = 0; j < data.m; ++j) {
      correct += pred.bits[j] == code.semantic.bits[j];
      ++total;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

inline Json generator_to_json(const LinearGenerator& g) {
  Json j;
  j["height"] = g.height;
  j["width"] = g.width;
  j["d"] = g.basis.cols;
  j["scale"] = g.scale;
  j["bias"] = g.bias;
  j["basis"] = g.basis.a;  // row-major
  return j;
}

inline LinearGenerator generator_from_json(const Json& j) {
  LinearGenerator g;
  g.height = j.at("height").get<int>();
  g.width = j.at("width").get<int>();
  const int d = j.at("d").get<int>();
  g.scale = j.at("scale").get<double>();
  g.bias = j.at("bias").get<Vec>();
  g.basis = Matrix(g.height * g.width, d);
  g.basis.a = j.at("basis").get<std::vector<double>>();
  if (g.basis.a.size() != static_cast<size_t>(g.height) * g.width * d)
    throw std::runtime_error("generator_from_json: basis size mismatch");
  return g;
}

inline Json classifier_to_json(const AttributeClassifier& c) {
  Json j;
  j["m"] = c.weights.rows;
  j["d"] = c.weights.cols;
  j["weights"] = c.weights.a;
  j["biases"] = c.biases;
  return j;
}

inline AttributeClassifier classifier_from_json(const Json& j) {
  AttributeClassifier c;
  const int m = j.at("m").get<int>();
  const int d = j.at("d").get<int>();
  c.weights = Matrix(m, d);
  c.weights.a = j.at("weights").get<std::vector<double>>();
  c.biases = j.at("biases").get<Vec>();
  return c;
}

}  // namespace piobf

#endif  // PIOBF_SYNTHETIC_HPP_
