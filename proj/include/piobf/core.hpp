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
// Domain types shared by every other module: latent codes, semantic labels,
// privacy parameters, datasets, and the perceptual distance that the whole
// privacy notion is built on.
#ifndef PIOBF_CORE_HPP_
#define PIOBF_CORE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "piobf/linalg.hpp"
#include "piobf/stats.hpp"

namespace piobf {

using Json = nlohmann::ordered_json;

// Binary attribute vector. The big-endian integer encoding of the bits is
// the cluster index, so m attributes index 2^m clusters.
struct SemanticLabel {
  std::vector<uint8_t> bits;

  int cluster_index() const {
    int idx = 0;
    for (uint8_t b : bits) idx = (idx << 1) | (b ? 1 : 0);
    return idx;
  }

  static SemanticLabel from_cluster_index(int idx, int m) {
    SemanticLabel s;
    s.bits.resize(m);
    for (int j = 0; j < m; ++j) s.bits[m - 1 - j] = static_cast<uint8_t>((idx >> j) & 1);
    return s;
  }

  bool operator==(const SemanticLabel& o) const { return bits == o.bits; }
};

inline void validate_label(const SemanticLabel& s) {
  if (s.bits.empty()) throw std::invalid_argument("SemanticLabel: m must be >= 1");
  for (uint8_t b : s.bits)
    if (b != 0 && b != 1) throw std::invalid_argument("SemanticLabel: entries must be 0/1");
}

// A point x in latent space, together with the identity and semantic label
// the synthetic population assigned to it.
struct LatentCode {
  Vec values;
  int identity_id = 0;
  SemanticLabel semantic;
};

inline void validate_code(const LatentCode& x) {
  if (x.values.size() < 2) throw std::invalid_argument("LatentCode: d must be >= 2");
  for (double v : x.values)
    if (!std::isfinite(v)) throw std::invalid_argument("LatentCode: non-finite entry");
  if (x.identity_id < 0) throw std::invalid_argument("LatentCode: negative identity");
  validate_label(x.semantic);
}

// A point in the clustered space where noise is injected.
using TransformedCode = Vec;

// The privacy contract: budget, transformed dimension, configurable
// sensitivity, and adjacency radius.
struct PrivacyParams {
  double epsilon = 1.0;
  int k = 16;
  double delta = 0.5;
  double beta_adj = 1.0;

  void validate() const {
    if (!(epsilon > 0.0)) throw std::invalid_argument("PrivacyParams: epsilon must be > 0");
    if (k < 1) throw std::invalid_argument("PrivacyParams: k must be >= 1");
    if (!(delta > 0.0 && delta <= 0.5))
      throw std::invalid_argument("PrivacyParams: delta must lie in (0, 0.5]");
    if (!(beta_adj > 0.0)) throw std::invalid_argument("PrivacyParams: beta_adj must be > 0");
  }
};

struct TrainConfig {
  double margin_mu = 600.0;
  double lr_theta = 1e-5;
  double lr_omega = 2e-3;
  int epochs = 200;
  int batch_size = 16;
  uint64_t seed = 1;

  void validate() const {
    if (margin_mu < 0.0) throw std::invalid_argument("TrainConfig: margin must be >= 0");
    if (!(lr_theta > 0.0) || !(lr_omega > 0.0))
      throw std::invalid_argument("TrainConfig: learning rates must be positive");
    if (epochs < 0) throw std::invalid_argument("TrainConfig: epochs must be >= 0");
    if (batch_size < 3) throw std::invalid_argument("TrainConfig: batch_size must be >= 3");
  }
};

struct Dataset {
  std::vector<LatentCode> codes;
  int d = 0;
  int m = 0;
  int num_identities = 0;

  void validate() const {
    if (d < 2) throw std::invalid_argument("Dataset: d must be >= 2");
    if (m < 1) throw std::invalid_argument("Dataset: m must be >= 1");
    for (const LatentCode& c : codes) {
      validate_code(c);
      if (static_cast<int>(c.values.size()) != d)
        throw std::invalid_argument("Dataset: code length differs from declared d");
      if (static_cast<int>(c.semantic.bits.size()) != m)
        throw std::invalid_argument("Dataset: label length differs from declared m");
      if (c.identity_id >= num_identities)
        throw std::invalid_argument("Dataset: identity_id out of range");
    }
  }

  int num_clusters() const { return 1 << m; }

  std::vector<std::vector<int>> members_by_cluster() const {
    std::vector<std::vector<int>> out(static_cast<size_t>(1) << m);
    for (size_t i = 0; i < codes.size(); ++i)
      out[codes[i].semantic.cluster_index()].push_back(static_cast<int>(i));
    return out;
  }
};

// Euclidean distance between latent codes; the perceptual distance.
inline double perceptual_distance(const LatentCode& a, const LatentCode& b) {
  if (a.values.size() != b.values.size())
    throw std::invalid_argument("perceptual_distance: dimension mismatch");
  double s = 0.0;
  for (size_t i = 0; i < a.values.size(); ++i) {
    const double dif = a.values[i] - b.values[i];
    s += dif * dif;
  }
  return std::sqrt(s);
}

// Adjacency is inclusive at the radius.
inline bool are_adjacent(const LatentCode& a, const LatentCode& b, const PrivacyParams& p) {
  return perceptual_distance(a, b) <= p.beta_adj;
}

// Median intra-cluster pairwise distance; the default adjacency radius for a
// generated population. Ignores clusters with fewer than two members.
inline double median_intra_cluster_distance(const Dataset& data) {
  std::vector<double> dists;
  for (const auto& members : data.members_by_cluster()) {
    for (size_t i = 0; i < members.size(); ++i)
      for (size_t j = i + 1; j < members.size(); ++j)
        dists.push_back(perceptual_distance(data.codes[members[i]], data.codes[members[j]]));
  }
  if (dists.empty()) throw std::runtime_error("median_intra_cluster_distance: no pairs");
  return quantile(dists, 0.5);
}

inline Json dataset_to_json(const Dataset& data) {
  Json j;
  j["d"] = data.d;
  j["m"] = data.m;
  j["num_identities"] = data.num_identities;
  Json codes = Json::array();
  for (const LatentCode& c : data.codes) {
    Json jc;
    jc["values"] = c.values;
    jc["identity_id"] = c.identity_id;
    jc["semantic"] = c.semantic.bits;
    codes.push_back(std::move(jc));
  }
  j["codes"] = std::move(codes);
  return j;
}

inline Dataset dataset_from_json(const Json& j) {
  Dataset data;
  data.d = j.at("d").get<int>();
  data.m = j.at("m").get<int>();
  data.num_identities = j.at("num_identities").get<int>();
  for (const auto& jc : j.at("codes")) {
    LatentCode c;
    c.values = jc.at("values").get<Vec>();
    c.identity_id = jc.at("identity_id").get<int>();
    c.semantic.bits = jc.at("semantic").get<std::vector<uint8_t>>();
    data.codes.push_back(std::move(c));
  }
  data.validate();
  return data;
}

// Restricts labels to the first m bits and renumbers nothing else. This is
// how the benchmark derives a 2-attribute view from a 4-attribute population.
inline Dataset truncate_attributes(const Dataset& data, int m) {
  if (m < 1 || m > data.m) throw std::invalid_argument("truncate_attributes: bad m");
  Dataset out = data;
  out.m = m;
  for (LatentCode& c : out.codes) c.semantic.bits.resize(m);
  return out;
}

}  // namespace piobf

#endif  // PIOBF_CORE_HPP_
