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
// Operator entry point: data generation, training, obfuscation,
// verification, and benchmarking, all driven by one validated JSON config.
//
// Exit codes: 0 success, 1 verification failure, 2 inconclusive,
// 64 config error, 65 training divergence, 66 missing artifact.
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "piobf/baselines.hpp"
#include "piobf/config.hpp"
#include "piobf/metrics.hpp"
#include "piobf/pinet.hpp"
#include "piobf/svd.hpp"
#include "piobf/verifier.hpp"

namespace fs = std::filesystem;
using namespace piobf;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFail = 1;
constexpr int kExitInconclusive = 2;
constexpr int kExitConfig = 64;
constexpr int kExitDiverged = 65;
constexpr int kExitMissing = 66;

struct MissingArtifactError : std::runtime_error {
  explicit MissingArtifactError(const std::string& what) : std::runtime_error(what) {}
};

Json load_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError("cannot open " + path);
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("failed to parse " + path + ": " + e.what());
  }
  return j;
}

void write_text_file(const std::string& path, const std::string& content) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

// Applies one "--set a.b.c=value" override onto the raw config document.
void apply_override(Json& doc, const std::string& spec) {
  const size_t eq = spec.find('=');
  if (eq == std::string::npos) throw ConfigError("override must look like key.path=value");
  const std::string path = spec.substr(0, eq);
  const std::string value = spec.substr(eq + 1);
  std::vector<std::string> parts;
  std::stringstream ss(path);
  std::string part;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  if (parts.empty()) throw ConfigError("empty override path");
  Json* node = &doc;
  for (size_t i = 0; i + 1 < parts.size(); ++i) node = &((*node)[parts[i]]);
  Json parsed;
  try {
    parsed = Json::parse(value);
  } catch (const std::exception&) {
    parsed = value;  // plain string
  }
  (*node)[parts.back()] = parsed;
}

struct World {
  Dataset data;  // full-m labels as generated
  LinearGenerator gen;
  AttributeClassifier cls;  // full-m classifier
};

// The per-attribute regressors are independent fits, so the m-attribute
// view of the classifier is its first m rows.
AttributeClassifier classifier_view(const AttributeClassifier& full, int m) {
  AttributeClassifier out;
  out.weights = Matrix(m, full.weights.cols);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < full.weights.cols; ++c) out.weights(r, c) = full.weights(r, c);
  out.biases.assign(full.biases.begin(), full.biases.begin() + m);
  return out;
}

World load_world(const RunConfig& cfg) {
  World w;
  w.data = dataset_from_json(load_json_file(cfg.data_dir + "/dataset.json"));
  w.gen = generator_from_json(load_json_file(cfg.data_dir + "/generator.json"));
  w.cls = classifier_from_json(load_json_file(cfg.data_dir + "/classifier.json"));
  return w;
}

PrivacyParams resolve_privacy(const RunConfig& cfg, const Dataset& data) {
  PrivacyParams p = cfg.privacy;
  if (p.beta_adj == 0.0) p.beta_adj = median_intra_cluster_distance(data);
  p.validate();
  return p;
}

std::string checkpoint_path(const RunConfig& cfg) {
  return cfg.model_dir + "/" + checkpoint_name(cfg.loss_mode, cfg.attributes, cfg.seed);
}

// One probe per identity, capped.
std::vector<int> probe_indices(const Dataset& data, int cap) {
  std::vector<int> out;
  std::vector<bool> seen(data.num_identities, false);
  for (size_t i = 0; i < data.codes.size() && static_cast<int>(out.size()) < cap; ++i) {
    if (!seen[data.codes[i].identity_id]) {
      seen[data.codes[i].identity_id] = true;
      out.push_back(static_cast<int>(i));
    }
  }
  return out;
}

int cmd_gen_data(const RunConfig& cfg) {
  PopulationSpec spec = cfg.population;
  spec.seed = cfg.seed;
  const Dataset data = generate_population(spec);
  LinearGenerator gen = make_generator(cfg.height, cfg.width, spec.d, cfg.seed);
  calibrate_render_scale(gen, data, cfg.render_band, cfg.render_band_quantile);
  std::vector<bool> degenerate;
  const AttributeClassifier cls = train_attribute_classifier(data, &degenerate);

  write_text_file(cfg.data_dir + "/dataset.json", dataset_to_json(data).dump());
  write_text_file(cfg.data_dir + "/generator.json", generator_to_json(gen).dump());
  write_text_file(cfg.data_dir + "/classifier.json", classifier_to_json(cls).dump());

  fs::create_directories(cfg.data_dir + "/contact_sheet");
  std::vector<bool> rendered(data.num_identities, false);
  for (const LatentCode& c : data.codes) {
    if (rendered[c.identity_id]) continue;
    rendered[c.identity_id] = true;
    char name[64];
    std::snprintf(name, sizeof(name), "cluster%02d_id%04d.pgm", c.semantic.cluster_index(),
                  c.identity_id);
    std::ofstream out(cfg.data_dir + "/contact_sheet/" + name, std::ios::binary);
    write_pgm(out, render(gen, c));
  }

  // Summary: cluster count, identities, separation statistics.
  const auto clusters = data.members_by_cluster();
  int non_empty = 0;
  std::vector<Vec> means;
  double max_std = 0.0;
  for (const auto& members : clusters) {
    if (members.empty()) continue;
    ++non_empty;
    Vec mu(data.d, 0.0);
    for (int i : members) axpy(1.0, data.codes[i].values, mu);
    for (double& v : mu) v /= static_cast<double>(members.size());
    double var = 0.0;
    for (int i : members) {
      Vec diff = sub(data.codes[i].values, mu);
      var += dot(diff, diff);
    }
    max_std = std::max(max_std, std::sqrt(var / static_cast<double>(members.size())));
    means.push_back(std::move(mu));
  }
  double min_sep = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < means.size(); ++i)
    for (size_t j = i + 1; j < means.size(); ++j)
      min_sep = std::min(min_sep, norm(sub(means[i], means[j])));

  std::cout << "dataset: " << data.codes.size() << " codes, " << non_empty << " clusters, "
            << data.num_identities << " identities\n"
            << "geometry: min inter-cluster mean distance " << min_sep
            << ", max intra-cluster std " << max_std << ", adjacency radius (median rule) "
            << median_intra_cluster_distance(data) << "\n"
            << "render scale: " << gen.scale << "\n";

  for (size_t j = 0; j < degenerate.size(); ++j)
    if (degenerate[j])
      std::cout << "warning: attribute " << j << " is constant; classifier pinned\n";
  return kExitOk;
}

int cmd_train(const RunConfig& cfg) {
  World w = load_world(cfg);
  const Dataset data =
      cfg.attributes == w.data.m ? w.data : truncate_attributes(w.data, cfg.attributes);
  const AttributeClassifier cls = classifier_view(w.cls, cfg.attributes);

  TrainConfig tc = cfg.train;
  tc.seed = cfg.seed;
  const TrainResult result =
      train_pinet(data, cfg.privacy.k, tc, cls, cfg.arch, cfg.loss_mode, cfg.per_anchor);

  Checkpoint ck;
  ck.d = data.d;
  ck.k = cfg.privacy.k;
  ck.arch = cfg.arch;
  ck.theta = result.theta;
  ck.omega = result.omega;
  ck.cluster_stats = compute_cluster_stats(
      data, [&](const LatentCode& x) { return encode(result.theta, x); });

  const std::string path = checkpoint_path(cfg);
  write_text_file(path, checkpoint_to_json(ck).dump());

  std::ostringstream log;
  log << "epoch,triplet_loss,ce_loss,recon_loss\n";
  const bool ablation = cfg.loss_mode == LossMode::kMseOnly;
  for (const TrainLogRow& row : result.log) {
    log << row.epoch << ",";
    if (ablation)
      log << ",,";  // triplet/ce not trained in the ablation
    else
      log << row.triplet_loss << "," << row.ce_loss << ",";
    log << row.recon_loss << "\n";
  }
  const std::string log_path = path.substr(0, path.size() - 5) + "_log.csv";
  write_text_file(log_path, log.str());

  std::cout << "checkpoint: " << path << "\n" << "training log: " << log_path << "\n";
  if (!result.log.empty())
    std::cout << "final losses: triplet=" << result.log.back().triplet_loss
              << " ce=" << result.log.back().ce_loss
              << " recon=" << result.log.back().recon_loss << "\n";
  return kExitOk;
}

int cmd_obfuscate(const RunConfig& cfg, const std::string& method, double epsilon_override,
                  const std::string& input_dir) {
  World w = load_world(cfg);
  PrivacyParams p = resolve_privacy(cfg, w.data);
  if (epsilon_override > 0.0) p.epsilon = epsilon_override;

  // Input set: PGM files from a directory, or renders of dataset probes.
  std::vector<GrayImage> inputs;
  std::vector<std::string> input_names;
  if (!input_dir.empty()) {
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(input_dir))
      if (entry.path().extension() == ".pgm") files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());
    for (const std::string& f : files) {
      std::ifstream in(f, std::ios::binary);
      inputs.push_back(read_pgm(in));
      input_names.push_back(f);
    }
    if (inputs.empty()) throw MissingArtifactError("no .pgm files under " + input_dir);
  } else {
    for (int idx : probe_indices(w.data, cfg.bench_probes)) {
      inputs.push_back(render(w.gen, w.data.codes[idx]));
      input_names.push_back("dataset:" + std::to_string(idx));
    }
  }

  Checkpoint ck;
  AttributeClassifier cls_view;
  if (method == "pinet") {
    const std::string path = checkpoint_path(cfg);
    if (!fs::exists(path))
      throw MissingArtifactError("checkpoint " + path + " not found; run train first");
    ck = checkpoint_from_json(load_json_file(path));
    cls_view = classifier_view(w.cls, cfg.attributes);
  }

  fs::create_directories(cfg.report_dir + "/obfuscated");
  Json manifest;
  manifest["method"] = method;
  manifest["epsilon"] = p.epsilon;
  manifest["seed"] = cfg.seed;
  Json items = Json::array();

  for (size_t i = 0; i < inputs.size(); ++i) {
    const uint64_t stream_key = static_cast<uint64_t>(i);
    CounterRng rng(cfg.seed, stream_key);
    GrayImage out;
    if (method == "pixdp") {
      PixDPParams bp;
      bp.epsilon = p.epsilon;
      out = pixdp_obfuscate(inputs[i], bp, rng);
    } else if (method == "svdpriv") {
      SVDPrivParams bp;
      bp.epsilon = p.epsilon;
      out = svdpriv_obfuscate(inputs[i], bp, rng);
    } else if (method == "pinet") {
      const LatentCode x = invert(w.gen, inputs[i]);
      const int cluster = predict_semantics(cls_view, x).cluster_index();
      out = obfuscate_image(inputs[i], ck.theta, ck.omega, w.gen,
                            stats_for(ck.cluster_stats, cluster), p, rng, cfg.clip_mode);
    } else {
      throw ConfigError("unknown method '" + method + "'");
    }
    char name[32];
    std::snprintf(name, sizeof(name), "out_%05zu.pgm", i);
    const std::string out_path = cfg.report_dir + "/obfuscated/" + name;
    std::ofstream os(out_path, std::ios::binary);
    write_pgm(os, out);
    Json item;
    item["input"] = input_names[i];
    item["output"] = out_path;
    item["stream_key"] = stream_key;
    items.push_back(std::move(item));
  }
  manifest["items"] = std::move(items);
  write_text_file(cfg.report_dir + "/manifest.json", manifest.dump());
  std::cout << "obfuscated " << inputs.size() << " images with " << method << " at epsilon "
            << p.epsilon << "\n";
  return kExitOk;
}

int cmd_verify(const RunConfig& cfg) {
  std::vector<PIVerdict> verdicts;
  PrivacyParams p = cfg.privacy;
  World w;
  bool have_world = false;
  try {
    w = load_world(cfg);
    have_world = true;
    p = resolve_privacy(cfg, w.data);
  } catch (const MissingArtifactError&) {
    if (p.beta_adj == 0.0) p.beta_adj = 1.0;  // mechanism-only checks need some radius
    p.validate();
  }

  const double factor = cfg.wrong_epsilon_factor;
  const double actual_eps = factor > 0.0 && factor != 1.0 ? p.epsilon * factor : 0.0;

  // Mechanism-level checks.
  {
    PIVerdict norm_v;
    norm_v.test_name = "normalization_identity";
    norm_v.passed = true;
    double worst = 0.0;
    Json grid = Json::array();
    for (int k : {1, 2, 3, 4, 8, 16, 32}) {
      for (double eps : {0.5, 1.0, 2.0, 8.0}) {
        PrivacyParams q = p;
        q.epsilon = eps;
        q.k = k;
        const PIVerdict one = check_normalization(q);
        worst = std::max(worst, one.worst_violation);
        norm_v.passed = norm_v.passed && one.passed;
        ++norm_v.trials;
      }
    }
    norm_v.worst_violation = worst;
    norm_v.details["grid"] = "k in {1,2,3,4,8,16,32} x eps in {0.5,1,2,8}";
    verdicts.push_back(norm_v);
  }
  {
    CounterRng rng(cfg.seed, 0x6c656d);  // "lem"
    verdicts.push_back(check_density_ratio_bound(p, cfg.verify_trials, rng));
  }
  {
    CounterRng rng(cfg.seed, 0x726164);  // "rad"
    verdicts.push_back(check_radial_marginal(p, cfg.verify_samples, rng,
                                             cfg.wrong_shape_offset, 0.001, actual_eps));
  }
  {
    // Set-level surrogate on the raw mechanism: two centers exactly the
    // adjacency radius apart. This is where a wrong-budget sampler shows up.
    PIVerdict v;
    if (cfg.verify_samples >= 10000) {
      PrivacyParams sample_p = p;
      if (actual_eps > 0.0) sample_p.epsilon = actual_eps;
      TransformedCode ca(p.k, 0.0), cb(p.k, 0.0);
      cb[0] = p.beta_adj;
      auto mech = [&sample_p](const TransformedCode& center) {
        return [center, sample_p](CounterRng& rng) {
          return sample_noise(center, sample_p, rng);
        };
      };
      CounterRng rng(cfg.seed, 0x686d65);  // "hme"
      v = empirical_pi_histogram_test(mech(ca), mech(cb), ca, cb, p.beta_adj, p,
                                      cfg.verify_samples, cfg.verify_bins, rng);
    } else {
      v.inconclusive = true;
      v.details["reason"] = "samples below the 1e4 minimum";
    }
    v.test_name = "empirical_pi_histogram_mechanism";
    verdicts.push_back(v);
  }

  // Pipeline-level checks when a trained checkpoint exists.
  const std::string ck_path = checkpoint_path(cfg);
  if (have_world && fs::exists(ck_path)) {
    const Checkpoint ck = checkpoint_from_json(load_json_file(ck_path));
    const Dataset data =
        cfg.attributes == w.data.m ? w.data : truncate_attributes(w.data, cfg.attributes);
    auto enc = [&](const LatentCode& x) { return encode(ck.theta, x); };

    verdicts.push_back(check_clip_bound(enc, data, p, true, cfg.clip_mode));
    {
      CounterRng rng(cfg.seed, 0x746831);  // "th1"
      verdicts.push_back(check_composition_bound(enc, data, p, cfg.verify_pair_trials,
                                                    cfg.verify_points_per_pair, rng, true,
                                                    actual_eps));
    }
    {
      // Histogram surrogate on the farthest adjacent same-cluster pair.
      int best_i = -1, best_j = -1;
      double best_dx = 0.0;
      for (const auto& members : data.members_by_cluster()) {
        for (size_t i = 0; i < members.size(); ++i)
          for (size_t j = i + 1; j < members.size(); ++j) {
            const double dx =
                perceptual_distance(data.codes[members[i]], data.codes[members[j]]);
            if (dx <= p.beta_adj && dx > best_dx) {
              best_dx = dx;
              best_i = members[i];
              best_j = members[j];
            }
          }
      }
      if (best_i >= 0 && cfg.verify_samples >= 10000) {
        const auto stats = ck.cluster_stats;
        PrivacyParams sample_p = p;
        if (actual_eps > 0.0) sample_p.epsilon = actual_eps;
        auto mech = [&](const LatentCode& x) {
          const TransformedCode y = encode(ck.theta, x);
          const TransformedCode c = clip_transformed(
              y, stats_for(stats, x.semantic.cluster_index()), x, p, cfg.clip_mode);
          return [c, sample_p](CounterRng& rng) { return sample_noise(c, sample_p, rng); };
        };
        const LatentCode& xa = data.codes[best_i];
        const LatentCode& xb = data.codes[best_j];
        const TransformedCode ca = clip_transformed(
            encode(ck.theta, xa), stats_for(stats, xa.semantic.cluster_index()), xa, p,
            cfg.clip_mode);
        const TransformedCode cb = clip_transformed(
            encode(ck.theta, xb), stats_for(stats, xb.semantic.cluster_index()), xb, p,
            cfg.clip_mode);
        CounterRng rng(cfg.seed, 0x686973);  // "his"
        verdicts.push_back(empirical_pi_histogram_test(mech(xa), mech(xb), ca, cb, best_dx, p,
                                                       cfg.verify_samples, cfg.verify_bins,
                                                       rng));
      } else {
        PIVerdict v;
        v.test_name = "empirical_pi_histogram";
        v.inconclusive = true;
        v.details["reason"] = cfg.verify_samples < 10000
                                  ? "samples below the 1e4 minimum"
                                  : "no adjacent pair available";
        verdicts.push_back(v);
      }
    }
  } else {
    std::cout << "note: no checkpoint at " << ck_path
              << "; running mechanism-only checks\n";
  }

  write_text_file(cfg.report_dir + "/verdicts.json", verdicts_to_json(verdicts).dump(2));

  std::cout << "test                        verdict        worst_violation  trials\n";
  for (const PIVerdict& v : verdicts) {
    const std::string verdict =
        v.inconclusive ? "INCONCLUSIVE" : (v.passed ? "PASS" : "FAIL");
    std::printf("%-27s %-14s %-16.3e %ld\n", v.test_name.c_str(), verdict.c_str(),
                v.worst_violation, v.trials);
  }
  return verdicts_exit_code(verdicts);
}

struct BenchModel {
  LossMode mode;
  int attributes;
  uint64_t seed;
  Checkpoint ck;
};

int cmd_bench(const RunConfig& cfg) {
  World w = load_world(cfg);
  PrivacyParams base_p = resolve_privacy(cfg, w.data);

  // Attribute views to evaluate: the full m and, when possible, 2.
  std::vector<int> attr_views{w.data.m};
  if (w.data.m > 2) attr_views.push_back(2);

  std::vector<BenchModel> models;
  bool warned_mse = false;
  for (int s = 0; s < cfg.bench_seeds; ++s) {
    const uint64_t seed = cfg.seed + static_cast<uint64_t>(s);
    for (int m : attr_views) {
      for (LossMode mode : {LossMode::kTripletCe, LossMode::kMseOnly}) {
        const std::string path = cfg.model_dir + "/" + checkpoint_name(mode, m, seed);
        if (!fs::exists(path)) {
          if (mode == LossMode::kMseOnly) {
            if (!warned_mse) {
              std::cout << "warning: missing ablation checkpoint " << path
                        << "; benchmarking triplet+CE only for that cell\n";
              warned_mse = true;
            }
            continue;
          }
          throw MissingArtifactError("checkpoint " + path + " not found; run train first");
        }
        models.push_back({mode, m, seed, checkpoint_from_json(load_json_file(path))});
      }
    }
  }

  std::ostringstream preservation, reid, quality, detect, pca;
  preservation << "epsilon,method,loss_mode,attributes,seed,preservation_ratio\n";
  reid << "epsilon,method,loss_mode,attributes,seed,reid_rate\n";
  quality << "epsilon,method,loss_mode,attributes,seed,ssim_mean,ssim_std\n";
  detect << "epsilon,method,loss_mode,attributes,seed,detect_rate\n";
  pca << "loss_mode,attributes,cluster_id,identity_id,pc1,pc2\n";

  const std::vector<int> probes = probe_indices(w.data, cfg.bench_probes);
  std::vector<GrayImage> originals;
  std::vector<int> probe_ids;
  for (int idx : probes) {
    originals.push_back(render(w.gen, w.data.codes[idx]));
    probe_ids.push_back(w.data.codes[idx].identity_id);
  }
  Dataset gallery;
  gallery.d = w.data.d;
  gallery.m = w.data.m;
  gallery.num_identities = w.data.num_identities;
  {
    std::vector<bool> is_probe(w.data.codes.size(), false);
    for (int idx : probes) is_probe[idx] = true;
    for (size_t i = 0; i < w.data.codes.size(); ++i)
      if (!is_probe[i]) gallery.codes.push_back(w.data.codes[i]);
  }

  for (const BenchModel& model : models) {
    const Dataset data =
        model.attributes == w.data.m ? w.data : truncate_attributes(w.data, model.attributes);
    const AttributeClassifier cls = classifier_view(w.cls, model.attributes);
    std::vector<int> selected(model.attributes);
    for (int j = 0; j < model.attributes; ++j) selected[j] = j;
    const std::string mode_tag = model.mode == LossMode::kTripletCe ? "triplet_ce" : "mse_only";

    for (double eps : cfg.epsilon_grid) {
      PrivacyParams p = base_p;
      p.epsilon = eps;
      std::vector<GrayImage> outputs;
      for (size_t t = 0; t < probes.size(); ++t) {
        CounterRng rng(model.seed + static_cast<uint64_t>(1000.0 * eps), t);
        const LatentCode& x = w.data.codes[probes[t]];
        const int cluster =
            data.codes[probes[t]].semantic.cluster_index();  // truncated view labels
        outputs.push_back(obfuscate_image(originals[t], model.ck.theta, model.ck.omega, w.gen,
                                          stats_for(model.ck.cluster_stats, cluster), p, rng,
                                          cfg.clip_mode));
        (void)x;
      }
      const double pres = preservation_ratio(originals, outputs, cls, w.gen, selected,
                                             cfg.preservation_mode);
      const double rr = reid_rate(gallery, outputs, probe_ids, w.gen, cfg.reid_distance);
      const double det = detect_rate(outputs, w.gen, cfg.detect_threshold);
      std::vector<double> ss(outputs.size());
      for (size_t i = 0; i < outputs.size(); ++i) ss[i] = ssim(originals[i], outputs[i], cfg.ssim);

      preservation << eps << ",pinet," << mode_tag << "," << model.attributes << ","
                   << model.seed << "," << pres << "\n";
      reid << eps << ",pinet," << mode_tag << "," << model.attributes << "," << model.seed
           << "," << rr << "\n";
      quality << eps << ",pinet," << mode_tag << "," << model.attributes << "," << model.seed
              << "," << mean(ss) << "," << stddev(ss) << "\n";
      detect << eps << ",pinet," << mode_tag << "," << model.attributes << "," << model.seed
             << "," << det << "\n";
    }
  }

  // Baselines: quality and detection per epsilon and seed.
  const int n_images = std::min<int>(cfg.bench_images, static_cast<int>(originals.size()));
  for (int s = 0; s < cfg.bench_seeds; ++s) {
    const uint64_t seed = cfg.seed + static_cast<uint64_t>(s);
    for (double eps : cfg.epsilon_grid) {
      for (const std::string& method : {std::string("pixdp"), std::string("svdpriv")}) {
        std::vector<GrayImage> outputs;
        std::vector<double> ss;
        for (int i = 0; i < n_images; ++i) {
          CounterRng rng(seed + static_cast<uint64_t>(1000.0 * eps),
                         0xb000 + static_cast<uint64_t>(i) +
                             (method == "pixdp" ? 0u : 1u << 20));
          if (method == "pixdp") {
            PixDPParams bp;
            bp.epsilon = eps;
            outputs.push_back(pixdp_obfuscate(originals[i], bp, rng));
          } else {
            SVDPrivParams bp;
            bp.epsilon = eps;
            outputs.push_back(svdpriv_obfuscate(originals[i], bp, rng));
          }
          ss.push_back(ssim(originals[i], outputs.back(), cfg.ssim));
        }
        quality << eps << "," << method << ",,," << seed << "," << mean(ss) << ","
                << stddev(ss) << "\n";
        detect << eps << "," << method << ",,," << seed << ","
               << detect_rate(outputs, w.gen, cfg.detect_threshold) << "\n";
      }
    }
  }

  // 2-D PCA of the transformed codes for the base seed, both loss modes:
  // the coordinates behind the cluster-structure figure.
  for (const BenchModel& model : models) {
    if (model.seed != cfg.seed || model.attributes != w.data.m) continue;
    const std::string mode_tag = model.mode == LossMode::kTripletCe ? "triplet_ce" : "mse_only";
    Matrix y(static_cast<int>(w.data.codes.size()), base_p.k);
    for (size_t i = 0; i < w.data.codes.size(); ++i) {
      const TransformedCode yc = encode(model.ck.theta, w.data.codes[i]);
      for (int j = 0; j < base_p.k; ++j) y(static_cast<int>(i), j) = yc[j];
    }
    Vec mu(base_p.k, 0.0);
    for (int r = 0; r < y.rows; ++r)
      for (int c = 0; c < y.cols; ++c) mu[c] += y(r, c);
    for (double& v : mu) v /= y.rows;
    for (int r = 0; r < y.rows; ++r)
      for (int c = 0; c < y.cols; ++c) y(r, c) -= mu[c];
    const SvdResult dec = svd(y);
    for (int r = 0; r < y.rows; ++r) {
      double pc1 = 0.0, pc2 = 0.0;
      for (int c = 0; c < y.cols; ++c) {
        pc1 += y(r, c) * dec.v(c, 0);
        pc2 += y(r, c) * dec.v(c, 1);
      }
      pca << mode_tag << "," << w.data.m << ","
          << w.data.codes[r].semantic.cluster_index() << "," << w.data.codes[r].identity_id
          << "," << pc1 << "," << pc2 << "\n";
    }
  }

  write_text_file(cfg.report_dir + "/preservation.csv", preservation.str());
  write_text_file(cfg.report_dir + "/reid.csv", reid.str());
  write_text_file(cfg.report_dir + "/quality.csv", quality.str());
  write_text_file(cfg.report_dir + "/detect.csv", detect.str());
  write_text_file(cfg.report_dir + "/yspace_pca.csv", pca.str());
  std::cout << "benchmark reports written to " << cfg.report_dir << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Perceptual-indistinguishability image obfuscation toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // accept global options after the subcommand name

  std::string config_path;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "Path to the run configuration JSON");
  app.add_option("--set", overrides, "Override a config field: --set train.epochs=0");

  auto* gen_cmd = app.add_subcommand("gen-data", "Generate the synthetic population");
  std::vector<std::string> exclude_patterns;
  gen_cmd->add_option("--exclude-patterns", exclude_patterns,
                      "Semantic bit patterns to leave empty, e.g. 1111");

  auto* train_cmd = app.add_subcommand("train", "Train the encoder/decoder pair");
  std::string ablation;
  int epochs_override = -1;
  train_cmd->add_option("--ablation", ablation, "Loss ablation: mse-only");
  train_cmd->add_option("--epochs", epochs_override, "Override the epoch count");
  int attributes_override = -1;
  train_cmd->add_option("--attributes", attributes_override,
                        "Train on the first m attributes");

  auto* obf_cmd = app.add_subcommand("obfuscate", "Obfuscate images");
  std::string method = "pinet";
  double epsilon_override = -1.0;
  std::string input_dir;
  obf_cmd->add_option("--method", method, "pinet | pixdp | svdpriv");
  obf_cmd->add_option("--epsilon", epsilon_override, "Privacy budget override");
  obf_cmd->add_option("--input", input_dir, "Directory of input PGM images");

  auto* verify_cmd = app.add_subcommand("verify", "Run the privacy verifier suite");
  double inject_wrong_epsilon = 0.0;
  long samples_override = -1;
  verify_cmd->add_option("--inject-wrong-epsilon", inject_wrong_epsilon,
                         "Negative control: sample at factor*epsilon");
  verify_cmd->add_option("--samples", samples_override, "Sample count override");

  auto* bench_cmd = app.add_subcommand("bench", "Run the evaluation benchmark");

  CLI11_PARSE(app, argc, argv);

  try {
    Json doc = Json::object();
    if (!config_path.empty()) doc = load_json_file(config_path);
    for (const std::string& o : overrides) apply_override(doc, o);

    if (gen_cmd->parsed() && !exclude_patterns.empty())
      doc["population"]["exclude_patterns"] = exclude_patterns;
    if (train_cmd->parsed()) {
      if (ablation == "mse-only")
        doc["train"]["loss_mode"] = "mse_only";
      else if (!ablation.empty())
        throw ConfigError("unknown ablation '" + ablation + "'");
      if (epochs_override >= 0) doc["train"]["epochs"] = epochs_override;
      if (attributes_override > 0) doc["train"]["attributes"] = attributes_override;
    }
    if (verify_cmd->parsed()) {
      if (inject_wrong_epsilon > 0.0)
        doc["verify"]["wrong_epsilon_factor"] = inject_wrong_epsilon;
      if (samples_override >= 0) doc["verify"]["samples"] = samples_override;
    }

    if (const char* env_seed = std::getenv("PI_OBF_SEED")) {
      try {
        doc["seed"] = static_cast<uint64_t>(std::stoull(env_seed));
      } catch (const std::exception&) {
        throw ConfigError("PI_OBF_SEED must be an unsigned integer");
      }
    }

    const RunConfig cfg = parse_config(doc);

    if (gen_cmd->parsed()) return cmd_gen_data(cfg);
    if (train_cmd->parsed()) return cmd_train(cfg);
    if (obf_cmd->parsed()) return cmd_obfuscate(cfg, method, epsilon_override, input_dir);
    if (verify_cmd->parsed()) return cmd_verify(cfg);
    if (bench_cmd->parsed()) return cmd_bench(cfg);
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const TrainDivergedError& e) {
    std::cerr << "training diverged: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const MissingArtifactError& e) {
    std::cerr << "missing artifact: " << e.what() << "\n";
    return kExitMissing;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}
