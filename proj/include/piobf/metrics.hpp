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
// Quality and privacy measurements: SSIM, attribute preservation,
// re-identification, the on-manifold detection proxy, and empirical
// sensitivity estimation.
#ifndef PIOBF_METRICS_HPP_
#define PIOBF_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "piobf/core.hpp"
#include "piobf/image.hpp"
#include "piobf/synthetic.hpp"

namespace piobf {

struct SSIMConfig {
  int window = 7;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;

  void validate() const {
    if (window < 1 || window % 2 == 0)
      throw std::invalid_argument("SSIMConfig: window must be odd and positive");
    if (!(k1 > 0.0) || !(k2 > 0.0) || !(dynamic_range > 0.0))
      throw std::invalid_argument("SSIMConfig: constants must be positive");
  }
};

// Mean structural similarity over all stride-1 windows with uniform window
// weighting. Window statistics use the population normalization.
inline double ssim(const GrayImage& a, const GrayImage& b, const SSIMConfig& cfg = {}) {
  cfg.validate();
  if (a.height != b.height || a.width != b.width)
    throw std::invalid_argument("ssim: shape mismatch");
  if (cfg.window > std::min(a.height, a.width))
    throw std::invalid_argument("ssim: window larger than image");
  const double c1 = (cfg.k1 * cfg.dynamic_range) * (cfg.k1 * cfg.dynamic_range);
  const double c2 = (cfg.k2 * cfg.dynamic_range) * (cfg.k2 * cfg.dynamic_range);
  const int w = cfg.window;
  const double count = static_cast<double>(w) * w;
  double total = 0.0;
  int windows = 0;
  for (int r0 = 0; r0 + w <= a.height; ++r0) {
    for (int c0 = 0; c0 + w <= a.width; ++c0) {
      double sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
      for (int r = r0; r < r0 + w; ++r) {
        for (int c = c0; c < c0 + w; ++c) {
          const double pa = a.at(r, c), pb = b.at(r, c);
          sa += pa;
          sb += pb;
          saa += pa * pa;
          sbb += pb * pb;
          sab += pa * pb;
        }
      }
      const double mu_a = sa / count, mu_b = sb / count;
      const double var_a = saa / count - mu_a * mu_a;
      const double var_b = sbb / count - mu_b * mu_b;
      const double cov = sab / count - mu_a * mu_b;
      total += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
               ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
      ++windows;
    }
  }
  return total / static_cast<double>(windows);
}

enum class PreservationMode {
  kPredictionVsPrediction,  // isolates the pipeline from labeling noise
  kPredictionVsGroundTruth,
};

// Fraction of pairs whose selected attributes classify identically on the
// obfuscated image and on the original (or its ground-truth label).
inline double preservation_ratio(const std::vector<GrayImage>& originals,
                                 const std::vector<GrayImage>& obfuscated,
                                 const AttributeClassifier& classifier,
                                 const LinearGenerator& gen,
                                 const std::vector<int>& selected_attributes,
                                 PreservationMode mode = PreservationMode::kPredictionVsPrediction,
                                 const std::vector<SemanticLabel>* ground_truth = nullptr) {
  if (originals.empty() || originals.size() != obfuscated.size())
    throw std::invalid_argument("preservation_ratio: need equal-length non-empty lists");
  if (mode == PreservationMode::kPredictionVsGroundTruth &&
      (!ground_truth || ground_truth->size() != originals.size()))
    throw std::invalid_argument("preservation_ratio: ground truth labels missing");
  long preserved = 0;
  for (size_t i = 0; i < originals.size(); ++i) {
    const SemanticLabel pred_obf = predict_semantics(classifier, invert(gen, obfuscated[i]));
    SemanticLabel reference;
    if (mode == PreservationMode::kPredictionVsPrediction)
      reference = predict_semantics(classifier, invert(gen, originals[i]));
    else
      reference = (*ground_truth)[i];
    bool same = true;
    for (int j : selected_attributes)
      if (pred_obf.bits[j] != reference.bits[j]) {
        same = false;
        break;
      }
    preserved += same;
  }
  return static_cast<double>(preserved) / static_cast<double>(originals.size());
}

enum class ReidDistance { kEuclidean, kCosine };

// 1-nearest-neighbor identity matching against the gallery after inverting
// each probe image.
inline double reid_rate(const Dataset& gallery, const std::vector<GrayImage>& probes,
                        const std::vector<int>& probe_identities, const LinearGenerator& gen,
                        ReidDistance dist = ReidDistance::kEuclidean) {
  if (gallery.codes.empty()) throw std::invalid_argument("reid_rate: empty gallery");
  if (probes.size() != probe_identities.size() || probes.empty())
    throw std::invalid_argument("reid_rate: probe/identity size mismatch");
  long hits = 0;
  for (size_t i = 0; i < probes.size(); ++i) {
    const Vec x = invert(gen, probes[i]).values;
    double best = std::numeric_limits<double>::infinity();
    int best_id = -1;
    for (const LatentCode& g : gallery.codes) {
      double score;
      if (dist == ReidDistance::kEuclidean) {
        score = norm(sub(x, g.values));
      } else {
        const double denom = norm(x) * norm(g.values);
        score = denom > 0.0 ? 1.0 - dot(x, g.values) / denom : 1.0;
      }
      if (score < best) {
        best = score;
        best_id = g.identity_id;
      }
    }
    hits += best_id == probe_identities[i];
  }
  return static_cast<double>(hits) / static_cast<double>(probes.size());
}

// Fraction of images whose inversion residual stays under the threshold,
// i.e. that still lie near the generator's image manifold.
inline double detect_rate(const std::vector<GrayImage>& images, const LinearGenerator& gen,
                          double threshold = 0.25) {
  if (images.empty()) throw std::invalid_argument("detect_rate: empty input");
  long detected = 0;
  for (const GrayImage& img : images) {
    const GrayImage back = render(gen, invert(gen, img));
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < img.pixels.size(); ++i) {
      const double r = img.pixels[i] - back.pixels[i];
      const double m = img.pixels[i] - 0.5;
      num += r * r;
      den += m * m;
    }
    if (den <= 1e-18) {
      // The mid-gray image is itself a render; zero residual counts as a hit.
      detected += num <= 1e-18;
    } else {
      detected += std::sqrt(num / den) < threshold;
    }
  }
  return static_cast<double>(detected) / static_cast<double>(images.size());
}

// Empirical per-cluster sensitivity: the max ratio of transformed to latent
// distance over same-cluster adjacent pairs. Clusters with no adjacent pair
// report 0 and a warning.
inline std::vector<double> estimate_sensitivity(
    const std::function<TransformedCode(const LatentCode&)>& encode_fn, const Dataset& data,
    const PrivacyParams& p, std::vector<std::string>* warnings = nullptr) {
  const auto clusters = data.members_by_cluster();
  std::vector<double> out;
  for (size_t cid = 0; cid < clusters.size(); ++cid) {
    const auto& members = clusters[cid];
    if (members.empty()) continue;
    std::vector<TransformedCode> ys(members.size());
    for (size_t i = 0; i < members.size(); ++i) ys[i] = encode_fn(data.codes[members[i]]);
    double worst = 0.0;
    bool any = false;
    for (size_t i = 0; i < members.size(); ++i) {
      for (size_t j = i + 1; j < members.size(); ++j) {
        const double dx = perceptual_distance(data.codes[members[i]], data.codes[members[j]]);
        if (dx == 0.0 || dx > p.beta_adj) continue;
        any = true;
        worst = std::max(worst, norm(sub(ys[i], ys[j])) / dx);
      }
    }
    if (!any && warnings)
      warnings->push_back("cluster " + std::to_string(cid) +
                          ": no adjacent pairs; sensitivity reported as 0");
    out.push_back(worst);
  }
  return out;
}

struct EvalRow {
  double epsilon = 0.0;
  std::string method_tag;
  double ssim_mean = 0.0;
  double ssim_std = 0.0;
  double preservation_ratio = 0.0;
  double reid_rate = 0.0;
  double detect_rate = 0.0;
  int seed_count = 1;
};

struct EvalReport {
  std::vector<EvalRow> rows;
};

inline void eval_report_to_csv(std::ostream& os, const EvalReport& report) {
  os << "epsilon,method,ssim_mean,ssim_std,preservation_ratio,reid_rate,detect_rate,seeds\n";
  for (const EvalRow& r : report.rows) {
    os << r.epsilon << "," << r.method_tag << "," << r.ssim_mean << "," << r.ssim_std << ","
       << r.preservation_ratio << "," << r.reid_rate << "," << r.detect_rate << ","
       << r.seed_count << "\n";
  }
}

inline Json eval_report_to_json(const EvalReport& report) {
  Json arr = Json::array();
  for (const EvalRow& r : report.rows) {
    Json j;
    j["epsilon"] = r.epsilon;
    j["method"] = r.method_tag;
    j["ssim_mean"] = r.ssim_mean;
    j["ssim_std"] = r.ssim_std;
    j["preservation_ratio"] = r.preservation_ratio;
    j["reid_rate"] = r.reid_rate;
    j["detect_rate"] = r.detect_rate;
    j["seeds"] = r.seed_count;
    arr.push_back(std::move(j));
  }
  return arr;
}

}  // namespace piobf

#endif  // PIOBF_METRICS_HPP_
