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
// The noise mechanism on the transformed space: an exponential-of-distance
// density with Gamma radial marginal and uniform direction, plus the
// per-cluster clipping that bounds the encoder's sensitivity.
#ifndef PIOBF_MECHANISM_HPP_
#define PIOBF_MECHANISM_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "piobf/core.hpp"
#include "piobf/rng.hpp"

namespace piobf {

// ln of the normalization constant of the density C * exp(-eps * ||y0 - y||)
// on R^k:  C = (1/2) * (eps/sqrt(pi))^k * Gamma(k/2) / Gamma(k).
// The half-integer factorials are generalized through the gamma function so
// the constant normalizes for odd k as well.
inline double log_norm_constant(double epsilon, int k) {
  if (!(epsilon > 0.0) || k < 1)
    throw std::invalid_argument("log_norm_constant: epsilon must be > 0 and k >= 1");
  return -std::log(2.0) + k * (std::log(epsilon) - 0.5 * std::log(M_PI)) +
         std::lgamma(0.5 * k) - std::lgamma(static_cast<double>(k));
}

// ln of the sampling density at z for a mechanism centered at y0.
inline double log_density(const TransformedCode& y0, const TransformedCode& z,
                          const PrivacyParams& p) {
  if (static_cast<int>(y0.size()) != p.k || static_cast<int>(z.size()) != p.k)
    throw std::invalid_argument("log_density: dimension mismatch");
  double s = 0.0;
  for (size_t i = 0; i < y0.size(); ++i) {
    const double d = y0[i] - z[i];
    s += d * d;
  }
  return log_norm_constant(p.epsilon, p.k) - p.epsilon * std::sqrt(s);
}

inline double density(const TransformedCode& y0, const TransformedCode& z,
                      const PrivacyParams& p) {
  return std::exp(log_density(y0, z, p));
}

// Radial marginal of the mechanism: Gamma with shape k and rate epsilon.
inline double sample_radial(const PrivacyParams& p, CounterRng& rng) {
  p.validate();
  return rng.gamma(static_cast<double>(p.k), p.epsilon);
}

// Uniform direction on the unit (k-1)-sphere via normalized Gaussians.
// The 0-sphere degenerates to a fair coin on {-1, +1}.
inline TransformedCode sample_unit_sphere(int k, CounterRng& rng) {
  if (k < 1) throw std::invalid_argument("sample_unit_sphere: k must be >= 1");
  if (k == 1) return TransformedCode{rng.normal() >= 0.0 ? 1.0 : -1.0};
  TransformedCode u(k);
  for (;;) {
    double s = 0.0;
    for (int i = 0; i < k; ++i) {
      u[i] = rng.normal();
      s += u[i] * u[i];
    }
    if (s > 1e-24) {
      const double inv = 1.0 / std::sqrt(s);
      for (int i = 0; i < k; ++i) u[i] *= inv;
      return u;
    }
  }
}

// One draw from the mechanism centered at y0: z = y0 + r * u with r and u
// independent. ||z - y0|| equals the radial draw exactly.
inline TransformedCode sample_noise(const TransformedCode& y0, const PrivacyParams& p,
                                    CounterRng& rng) {
  if (static_cast<int>(y0.size()) != p.k)
    throw std::invalid_argument("sample_noise: dimension mismatch");
  const double r = sample_radial(p, rng);
  TransformedCode u = sample_unit_sphere(p.k, rng);
  TransformedCode z(y0);
  for (int i = 0; i < p.k; ++i) z[i] += r * u[i];
  return z;
}

// Reproducible sampler handle: a fixed parameter set plus a stream key.
struct NoiseSampler {
  PrivacyParams params;
  uint64_t stream_key = 0;

  TransformedCode operator()(const TransformedCode& y0, uint64_t seed) const {
    CounterRng rng(seed, stream_key);
    return sample_noise(y0, params, rng);
  }
};

// Per-cluster clipping bookkeeping. The anchor is the member latent code
// nearest the cluster centroid, fixed once after training so sensitivities
// stay auditable across runs.
struct ClusterStats {
  int cluster_id = 0;
  LatentCode anchor_latent;
  TransformedCode anchor_transformed;
  int member_count = 0;
};

enum class ClipMode {
  kClipIfExceeding,  // g / max(1, ||g||/C): identity inside the ball
  kAlwaysRescale,    // g / (||g||/C): unconditional projection to the sphere
};

// Clips the transformed offset from the cluster anchor so that
// ||clipped - f(anchor)|| <= C with C = delta * min(||x - anchor||, beta).
// The beta cap keeps the anchor inside the adjacency regime the two-point
// bound is derived for, so ||ftilde(x) - ftilde(x')|| <= 2*delta*beta holds
// for every adjacent pair no matter where the anchor sits.
inline TransformedCode clip_transformed(const TransformedCode& y, const ClusterStats& stats,
                                        const LatentCode& x, const PrivacyParams& p,
                                        ClipMode mode = ClipMode::kClipIfExceeding) {
  if (y.size() != stats.anchor_transformed.size())
    throw std::invalid_argument("clip_transformed: dimension mismatch");
  if (x.semantic.cluster_index() != stats.cluster_id)
    throw std::invalid_argument("clip_transformed: cluster mismatch");
  const double cap =
      p.delta * std::min(perceptual_distance(x, stats.anchor_latent), p.beta_adj);
  Vec g = sub(y, stats.anchor_transformed);
  const double gn = norm(g);
  if (cap <= 0.0 || gn == 0.0) return stats.anchor_transformed;
  double scale;
  if (mode == ClipMode::kClipIfExceeding) {
    scale = gn > cap ? cap / gn : 1.0;
  } else {
    scale = cap / gn;
  }
  Vec out(stats.anchor_transformed);
  axpy(scale, g, out);
  return out;
}

// Derives anchors and counts for every non-empty cluster; `encode` is the
// trained map from latent to transformed space.
inline std::vector<ClusterStats> compute_cluster_stats(
    const Dataset& data, const std::function<TransformedCode(const LatentCode&)>& encode) {
  std::vector<ClusterStats> out;
  const auto clusters = data.members_by_cluster();
  for (size_t cid = 0; cid < clusters.size(); ++cid) {
    const auto& members = clusters[cid];
    if (members.empty()) continue;
    Vec centroid(data.d, 0.0);
    for (int idx : members) axpy(1.0, data.codes[idx].values, centroid);
    for (double& v : centroid) v /= static_cast<double>(members.size());
    int best = members[0];
    double best_dist = std::numeric_limits<double>::infinity();
    for (int idx : members) {
      const double dist = norm(sub(data.codes[idx].values, centroid));
      if (dist < best_dist) {
        best_dist = dist;
        best = idx;
      }
    }
    ClusterStats s;
    s.cluster_id = static_cast<int>(cid);
    s.anchor_latent = data.codes[best];
    s.anchor_transformed = encode(data.codes[best]);
    s.member_count = static_cast<int>(members.size());
    out.push_back(std::move(s));
  }
  return out;
}

inline const ClusterStats& stats_for(const std::vector<ClusterStats>& stats, int cluster_id) {
  for (const ClusterStats& s : stats)
    if (s.cluster_id == cluster_id) return s;
  throw std::invalid_argument("stats_for: no stats for cluster");
}

// Clip, then sample: one release of the transformed code of x.
inline TransformedCode obfuscate_transformed(
    const LatentCode& x, const std::function<TransformedCode(const LatentCode&)>& encode,
    const ClusterStats& stats, const PrivacyParams& p, CounterRng& rng,
    ClipMode mode = ClipMode::kClipIfExceeding) {
  const TransformedCode clipped = clip_transformed(encode(x), stats, x, p, mode);
  return sample_noise(clipped, p, rng);
}

// Diagnostic dump: one row per draw, columns (sample_index, r, z_1..z_k).
inline void dump_samples_csv(std::ostream& os, const TransformedCode& y0,
                             const PrivacyParams& p, CounterRng& rng, int count) {
  os << "sample_index,r";
  for (int i = 1; i <= p.k; ++i) os << ",z_" << i;
  os << "\n";
  for (int s = 0; s < count; ++s) {
    TransformedCode z = sample_noise(y0, p, rng);
    os << s << "," << norm(sub(z, y0));
    for (double v : z) os << "," << v;
    os << "\n";
  }
}

}  // namespace piobf

#endif  // PIOBF_MECHANISM_HPP_
