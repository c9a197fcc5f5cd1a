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
// Run configuration: one JSON document validated against a strict schema
// (unknown keys rejected) before any command does work.
#ifndef PIOBF_CONFIG_HPP_
#define PIOBF_CONFIG_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "piobf/core.hpp"
#include "piobf/mechanism.hpp"
#include "piobf/metrics.hpp"
#include "piobf/pinet.hpp"
#include "piobf/synthetic.hpp"

namespace piobf {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct RunConfig {
  int version = 1;
  uint64_t seed = 1;

  std::string data_dir = "data";
  std::string model_dir = "models";
  std::string report_dir = "reports";

  PopulationSpec population;
  int height = 16;
  int width = 16;
  double render_band = 0.35;
  double render_band_quantile = 0.999;

  PrivacyParams privacy;           // beta_adj == 0 means "median rule"
  std::vector<double> epsilon_grid{0.5, 1.0, 2.0, 4.0, 8.0};
  ClipMode clip_mode = ClipMode::kClipIfExceeding;

  TrainConfig train;
  ArchConfig arch;
  LossMode loss_mode = LossMode::kTripletCe;
  int attributes = 4;
  int per_anchor = 1;

  SSIMConfig ssim;
  double detect_threshold = 0.25;
  ReidDistance reid_distance = ReidDistance::kEuclidean;
  PreservationMode preservation_mode = PreservationMode::kPredictionVsPrediction;

  long verify_trials = 10000;
  long verify_pair_trials = 1000;
  int verify_points_per_pair = 10;
  long verify_samples = 100000;
  int verify_bins = 20;
  double wrong_epsilon_factor = 1.0;
  int wrong_shape_offset = 0;

  int bench_seeds = 5;
  int bench_probes = 128;
  int bench_images = 50;
};

namespace detail {

inline void expect_keys(const Json& obj, const std::string& where,
                        const std::vector<std::string>& allowed) {
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const std::string& k : allowed)
      if (item.key() == k) {
        ok = true;
        break;
      }
    if (!ok) throw ConfigError("unknown key '" + where + item.key() + "'");
  }
}

template <typename T>
T get_as(const Json& obj, const std::string& key, const std::string& where, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const std::exception&) {
    throw ConfigError("field '" + where + key + "' has the wrong type");
  }
}

}  // namespace detail

// Parses and validates a config document. Every key is optional; unknown
// keys anywhere are an error so typos never silently revert to defaults.
inline RunConfig parse_config(const Json& j) {
  using detail::expect_keys;
  using detail::get_as;
  RunConfig c;
  expect_keys(j, "", {"version", "seed", "paths", "population", "privacy", "train", "metrics",
                      "verify", "bench"});
  c.version = get_as<int>(j, "version", "", 1);
  if (c.version != 1) throw ConfigError("unsupported config version");
  c.seed = get_as<uint64_t>(j, "seed", "", c.seed);

  if (j.contains("paths")) {
    const Json& p = j.at("paths");
    expect_keys(p, "paths.", {"data_dir", "model_dir", "report_dir"});
    c.data_dir = get_as<std::string>(p, "data_dir", "paths.", c.data_dir);
    c.model_dir = get_as<std::string>(p, "model_dir", "paths.", c.model_dir);
    c.report_dir = get_as<std::string>(p, "report_dir", "paths.", c.report_dir);
  }

  if (j.contains("population")) {
    const Json& p = j.at("population");
    expect_keys(p, "population.",
                {"d", "m", "height", "width", "identities_per_cluster", "samples_per_identity",
                 "cluster_spread", "identity_spread", "mean_scale", "separation_factor",
                 "label_flip_rate", "entangled", "exclude_patterns", "render_band",
                 "render_band_quantile"});
    c.population.d = get_as<int>(p, "d", "population.", c.population.d);
    c.population.m = get_as<int>(p, "m", "population.", c.population.m);
    c.height = get_as<int>(p, "height", "population.", c.height);
    c.width = get_as<int>(p, "width", "population.", c.width);
    c.population.num_identities =
        get_as<int>(p, "identities_per_cluster", "population.", c.population.num_identities);
    c.population.samples_per_identity =
        get_as<int>(p, "samples_per_identity", "population.", c.population.samples_per_identity);
    c.population.cluster_spread =
        get_as<double>(p, "cluster_spread", "population.", c.population.cluster_spread);
    c.population.identity_spread =
        get_as<double>(p, "identity_spread", "population.", c.population.identity_spread);
    c.population.mean_scale =
        get_as<double>(p, "mean_scale", "population.", c.population.mean_scale);
    c.population.separation_factor =
        get_as<double>(p, "separation_factor", "population.", c.population.separation_factor);
    c.population.label_flip_rate =
        get_as<double>(p, "label_flip_rate", "population.", c.population.label_flip_rate);
    c.population.entangled = get_as<bool>(p, "entangled", "population.", false);
    c.population.exclude_patterns = get_as<std::vector<std::string>>(
        p, "exclude_patterns", "population.", c.population.exclude_patterns);
    c.render_band = get_as<double>(p, "render_band", "population.", c.render_band);
    c.render_band_quantile =
        get_as<double>(p, "render_band_quantile", "population.", c.render_band_quantile);
  }

  if (j.contains("privacy")) {
    const Json& p = j.at("privacy");
    expect_keys(p, "privacy.",
                {"epsilon", "k", "delta", "beta_adj", "epsilon_grid", "clip_mode"});
    c.privacy.epsilon = get_as<double>(p, "epsilon", "privacy.", c.privacy.epsilon);
    c.privacy.k = get_as<int>(p, "k", "privacy.", c.privacy.k);
    c.privacy.delta = get_as<double>(p, "delta", "privacy.", c.privacy.delta);
    c.privacy.beta_adj = get_as<double>(p, "beta_adj", "privacy.", 0.0);
    c.epsilon_grid = get_as<std::vector<double>>(p, "epsilon_grid", "privacy.", c.epsilon_grid);
    const std::string mode = get_as<std::string>(p, "clip_mode", "privacy.", "max");
    if (mode == "max")
      c.clip_mode = ClipMode::kClipIfExceeding;
    else if (mode == "rescale")
      c.clip_mode = ClipMode::kAlwaysRescale;
    else
      throw ConfigError("privacy.clip_mode must be 'max' or 'rescale'");
  }

  if (j.contains("train")) {
    const Json& p = j.at("train");
    expect_keys(p, "train.",
                {"margin_mu", "lr_theta", "lr_omega", "epochs", "batch_size", "hidden",
                 "hidden_layers", "loss_mode", "attributes", "per_anchor"});
    c.train.margin_mu = get_as<double>(p, "margin_mu", "train.", c.train.margin_mu);
    c.train.lr_theta = get_as<double>(p, "lr_theta", "train.", c.train.lr_theta);
    c.train.lr_omega = get_as<double>(p, "lr_omega", "train.", c.train.lr_omega);
    c.train.epochs = get_as<int>(p, "epochs", "train.", c.train.epochs);
    c.train.batch_size = get_as<int>(p, "batch_size", "train.", c.train.batch_size);
    c.arch.hidden = get_as<int>(p, "hidden", "train.", c.arch.hidden);
    c.arch.hidden_layers = get_as<int>(p, "hidden_layers", "train.", c.arch.hidden_layers);
    const std::string mode = get_as<std::string>(p, "loss_mode", "train.", "triplet_ce");
    if (mode == "triplet_ce")
      c.loss_mode = LossMode::kTripletCe;
    else if (mode == "mse_only")
      c.loss_mode = LossMode::kMseOnly;
    else
      throw ConfigError("train.loss_mode must be 'triplet_ce' or 'mse_only'");
    c.attributes = get_as<int>(p, "attributes", "train.", c.attributes);
    c.per_anchor = get_as<int>(p, "per_anchor", "train.", c.per_anchor);
  }

  if (j.contains("metrics")) {
    const Json& p = j.at("metrics");
    expect_keys(p, "metrics.",
                {"ssim_window", "ssim_k1", "ssim_k2", "ssim_dynamic_range", "detect_threshold",
                 "reid_distance", "preservation_mode"});
    c.ssim.window = get_as<int>(p, "ssim_window", "metrics.", c.ssim.window);
    c.ssim.k1 = get_as<double>(p, "ssim_k1", "metrics.", c.ssim.k1);
    c.ssim.k2 = get_as<double>(p, "ssim_k2", "metrics.", c.ssim.k2);
    c.ssim.dynamic_range =
        get_as<double>(p, "ssim_dynamic_range", "metrics.", c.ssim.dynamic_range);
    c.detect_threshold = get_as<double>(p, "detect_threshold", "metrics.", c.detect_threshold);
    const std::string rd = get_as<std::string>(p, "reid_distance", "metrics.", "euclidean");
    if (rd == "euclidean")
      c.reid_distance = ReidDistance::kEuclidean;
    else if (rd == "cosine")
      c.reid_distance = ReidDistance::kCosine;
    else
      throw ConfigError("metrics.reid_distance must be 'euclidean' or 'cosine'");
    const std::string pm = get_as<std::string>(p, "preservation_mode", "metrics.", "prediction");
    if (pm == "prediction")
      c.preservation_mode = PreservationMode::kPredictionVsPrediction;
    else if (pm == "ground_truth")
      c.preservation_mode = PreservationMode::kPredictionVsGroundTruth;
    else
      throw ConfigError("metrics.preservation_mode must be 'prediction' or 'ground_truth'");
  }

  if (j.contains("verify")) {
    const Json& p = j.at("verify");
    expect_keys(p, "verify.",
                {"trials", "pair_trials", "points_per_pair", "samples", "bins",
                 "wrong_epsilon_factor", "wrong_shape_offset"});
    c.verify_trials = get_as<long>(p, "trials", "verify.", c.verify_trials);
    c.verify_pair_trials = get_as<long>(p, "pair_trials", "verify.", c.verify_pair_trials);
    c.verify_points_per_pair =
        get_as<int>(p, "points_per_pair", "verify.", c.verify_points_per_pair);
    c.verify_samples = get_as<long>(p, "samples", "verify.", c.verify_samples);
    c.verify_bins = get_as<int>(p, "bins", "verify.", c.verify_bins);
    c.wrong_epsilon_factor =
        get_as<double>(p, "wrong_epsilon_factor", "verify.", c.wrong_epsilon_factor);
    c.wrong_shape_offset =
        get_as<int>(p, "wrong_shape_offset", "verify.", c.wrong_shape_offset);
  }

  if (j.contains("bench")) {
    const Json& p = j.at("bench");
    expect_keys(p, "bench.", {"seeds", "probes_per_seed", "images_per_eval"});
    c.bench_seeds = get_as<int>(p, "seeds", "bench.", c.bench_seeds);
    c.bench_probes = get_as<int>(p, "probes_per_seed", "bench.", c.bench_probes);
    c.bench_images = get_as<int>(p, "images_per_eval", "bench.", c.bench_images);
  }

  // Range checks beyond what the domain types enforce on use.
  if (c.population.d < 2 || c.height * c.width < c.population.d)
    throw ConfigError("population: need d >= 2 and height*width >= d");
  if (c.attributes < 1 || c.attributes > c.population.m)
    throw ConfigError("train.attributes must lie in [1, population.m]");
  if (!(c.privacy.epsilon > 0.0)) throw ConfigError("privacy.epsilon must be positive");
  if (!(c.privacy.delta > 0.0 && c.privacy.delta <= 0.5))
    throw ConfigError("privacy.delta must lie in (0, 0.5]");
  if (c.privacy.beta_adj < 0.0) throw ConfigError("privacy.beta_adj must be >= 0 (0 = median rule)");
  if (c.bench_seeds < 1) throw ConfigError("bench.seeds must be >= 1");
  return c;
}

// Canonical checkpoint filename for a (loss mode, attribute count, seed).
inline std::string checkpoint_name(LossMode mode, int attributes, uint64_t seed) {
  return std::string("pinet_") + (mode == LossMode::kTripletCe ? "tri" : "mse") + "_m" +
         std::to_string(attributes) + "_seed" + std::to_string(seed) + ".json";
}

}  // namespace piobf

#endif  // PIOBF_CONFIG_HPP_
