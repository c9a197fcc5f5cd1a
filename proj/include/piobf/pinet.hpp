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
// The encoder/decoder pair and its training loop: fully connected networks
// with ReLU hidden layers, the triplet / reconstruction / cross-entropy
// losses, and exact reverse-mode gradients checked against finite
// differences in the test suite.
#ifndef PIOBF_PINET_HPP_
#define PIOBF_PINET_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "piobf/core.hpp"
#include "piobf/mechanism.hpp"
#include "piobf/rng.hpp"
#include "piobf/synthetic.hpp"

namespace piobf {

// Fully connected network with ReLU on hidden layers and a linear output.
struct DenseNet {
  std::vector<int> dims;        // layer widths, input first
  std::vector<Matrix> weights;  // weights[l]: dims[l+1] x dims[l]
  std::vector<Vec> biases;

  int num_layers() const { return static_cast<int>(weights.size()); }
  int input_dim() const { return dims.front(); }
  int output_dim() const { return dims.back(); }
};

inline DenseNet make_net(const std::vector<int>& dims, CounterRng& rng) {
  if (dims.size() < 2) throw std::invalid_argument("make_net: need at least two layer widths");
  DenseNet net;
  net.dims = dims;
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    Matrix w(dims[l + 1], dims[l]);
    const double std = std::sqrt(2.0 / static_cast<double>(dims[l]));
    for (double& v : w.a) v = std * rng.normal();
    net.weights.push_back(std::move(w));
    net.biases.emplace_back(dims[l + 1], 0.0);
  }
  return net;
}

inline DenseNet zeros_like(const DenseNet& net) {
  DenseNet g;
  g.dims = net.dims;
  for (const Matrix& w : net.weights) g.weights.emplace_back(w.rows, w.cols);
  for (const Vec& b : net.biases) g.biases.emplace_back(b.size(), 0.0);
  return g;
}

inline size_t param_count(const DenseNet& net) {
  size_t n = 0;
  for (const Matrix& w : net.weights) n += w.a.size();
  for (const Vec& b : net.biases) n += b.size();
  return n;
}

// Row-major weight flattening: per layer, the weight matrix then the bias.
inline Vec flatten(const DenseNet& net) {
  Vec out;
  out.reserve(param_count(net));
  for (int l = 0; l < net.num_layers(); ++l) {
    out.insert(out.end(), net.weights[l].a.begin(), net.weights[l].a.end());
    out.insert(out.end(), net.biases[l].begin(), net.biases[l].end());
  }
  return out;
}

inline void unflatten(DenseNet& net, const Vec& flat) {
  if (flat.size() != param_count(net))
    throw std::invalid_argument("unflatten: parameter count mismatch");
  size_t pos = 0;
  for (int l = 0; l < net.num_layers(); ++l) {
    std::copy(flat.begin() + pos, flat.begin() + pos + net.weights[l].a.size(),
              net.weights[l].a.begin());
    pos += net.weights[l].a.size();
    std::copy(flat.begin() + pos, flat.begin() + pos + net.biases[l].size(),
              net.biases[l].begin());
    pos += net.biases[l].size();
  }
}

struct ForwardCache {
  std::vector<Vec> inputs;   // activation entering each layer
  Vec output;
};

inline Vec forward(const DenseNet& net, const Vec& x, ForwardCache* cache = nullptr) {
  if (static_cast<int>(x.size()) != net.input_dim())
    throw std::invalid_argument("forward: dimension mismatch");
  if (cache) {
    cache->inputs.clear();
    cache->inputs.reserve(net.num_layers());
  }
  Vec a = x;
  for (int l = 0; l < net.num_layers(); ++l) {
    if (cache) cache->inputs.push_back(a);
    Vec z = matvec(net.weights[l], a);
    for (size_t i = 0; i < z.size(); ++i) z[i] += net.biases[l][i];
    const bool last = l + 1 == net.num_layers();
    if (!last)
      for (double& v : z) v = v > 0.0 ? v : 0.0;
    a = std::move(z);
  }
  if (cache) cache->output = a;
  return a;
}

// Accumulates parameter gradients into `grad` and, if requested, the
// gradient with respect to the input. ReLU subgradient at the kink is 0.
inline void backward(const DenseNet& net, const ForwardCache& cache, const Vec& d_output,
                     DenseNet& grad, Vec* d_input = nullptr) {
  Vec delta = d_output;
  for (int l = net.num_layers() - 1; l >= 0; --l) {
    const Vec& in = cache.inputs[l];
    // delta is d(loss)/d(post-activation of layer l); convert to
    // d/d(pre-activation) for hidden layers by masking on the output sign.
    if (l + 1 < net.num_layers()) {
      // post-activation of layer l is the stored input of layer l + 1
      const Vec& act = cache.inputs[l + 1];
      for (size_t i = 0; i < delta.size(); ++i)
        if (act[i] <= 0.0) delta[i] = 0.0;
    }
    Matrix& gw = grad.weights[l];
    for (int r = 0; r < gw.rows; ++r) {
      const double d = delta[r];
      if (d == 0.0) continue;
      double* grow = &gw.a[static_cast<size_t>(r) * gw.cols];
      for (int c = 0; c < gw.cols; ++c) grow[c] += d * in[c];
      grad.biases[l][r] += d;
    }
    if (l > 0 || d_input) {
      Vec prev = matTvec(net.weights[l], delta);
      if (l == 0) {
        if (d_input) *d_input = std::move(prev);
        break;
      }
      delta = std::move(prev);
    }
  }
}

// Strong types for the two networks: d -> hidden.. -> k and back.
struct EncoderParams {
  DenseNet net;
};
struct DecoderParams {
  DenseNet net;
};

struct ArchConfig {
  int hidden = 64;
  int hidden_layers = 2;
};

inline EncoderParams make_encoder(int d, int k, const ArchConfig& arch, CounterRng& rng) {
  std::vector<int> dims{d};
  for (int l = 0; l < arch.hidden_layers; ++l) dims.push_back(arch.hidden);
  dims.push_back(k);
  return EncoderParams{make_net(dims, rng)};
}

inline DecoderParams make_decoder(int d, int k, const ArchConfig& arch, CounterRng& rng) {
  std::vector<int> dims{k};
  for (int l = 0; l < arch.hidden_layers; ++l) dims.push_back(arch.hidden);
  dims.push_back(d);
  return DecoderParams{make_net(dims, rng)};
}

inline TransformedCode encode(const EncoderParams& theta, const LatentCode& x) {
  return forward(theta.net, x.values);
}

inline Vec decode(const DecoderParams& omega, const TransformedCode& y) {
  return forward(omega.net, y);
}

// Index triple into a dataset: anchor and positive share the full semantic
// label, the negative differs in at least one bit.
struct Triplet {
  int anchor_idx = 0;
  int positive_idx = 0;
  int negative_idx = 0;
};

inline bool triplet_valid(const Triplet& t, const Dataset& data) {
  if (t.anchor_idx == t.positive_idx || t.anchor_idx == t.negative_idx ||
      t.positive_idx == t.negative_idx)
    return false;
  const auto& a = data.codes[t.anchor_idx].semantic;
  return a == data.codes[t.positive_idx].semantic &&
         !(a == data.codes[t.negative_idx].semantic);
}

// Uniformly samples `per_anchor` positives/negatives for every code whose
// cluster has a second member. Anchors in singleton clusters are skipped and
// reported through `warnings`.
inline std::vector<Triplet> mine_triplets(const Dataset& data, int per_anchor, CounterRng& rng,
                                          std::vector<std::string>* warnings = nullptr) {
  if (per_anchor < 0) throw std::invalid_argument("mine_triplets: per_anchor must be >= 0");
  std::vector<Triplet> out;
  if (per_anchor == 0) return out;
  const auto clusters = data.members_by_cluster();
  int non_empty = 0;
  for (const auto& c : clusters) non_empty += !c.empty();
  if (non_empty < 2)
    throw std::invalid_argument("mine_triplets: need at least two non-empty clusters");

  std::vector<int> cluster_of(data.codes.size());
  for (size_t i = 0; i < data.codes.size(); ++i)
    cluster_of[i] = data.codes[i].semantic.cluster_index();

  for (size_t i = 0; i < data.codes.size(); ++i) {
    const auto& mates = clusters[cluster_of[i]];
    if (mates.size() < 2) {
      if (warnings)
        warnings->push_back("singleton cluster " + std::to_string(cluster_of[i]) +
                            ": anchor skipped");
      continue;
    }
    for (int t = 0; t < per_anchor; ++t) {
      Triplet tr;
      tr.anchor_idx = static_cast<int>(i);
      do {
        tr.positive_idx = mates[static_cast<size_t>(rng.uniform() * mates.size())];
      } while (tr.positive_idx == tr.anchor_idx);
      do {
        tr.negative_idx = static_cast<int>(rng.uniform() * data.codes.size());
      } while (cluster_of[tr.negative_idx] == cluster_of[i]);
      out.push_back(tr);
    }
  }
  return out;
}

// Triplet loss with a per-triplet hinge: sum of
// max(0, ||f(a)-f(p)||^2 - ||f(a)-f(n)||^2 + mu).
inline double triplet_loss(const EncoderParams& theta, const std::vector<Triplet>& triplets,
                           const Dataset& data, double mu) {
  double total = 0.0;
  for (const Triplet& t : triplets) {
    const Vec fa = encode(theta, data.codes[t.anchor_idx]);
    const Vec fp = encode(theta, data.codes[t.positive_idx]);
    const Vec fn = encode(theta, data.codes[t.negative_idx]);
    const Vec dp = sub(fa, fp), dn = sub(fa, fn);
    total += std::max(0.0, dot(dp, dp) - dot(dn, dn) + mu);
  }
  return total;
}

// Reconstruction loss: sum of Euclidean (not squared) norms.
inline double recon_loss(const EncoderParams& theta, const DecoderParams& omega,
                         const Dataset& data, const std::vector<int>& indices) {
  double total = 0.0;
  for (int i : indices) {
    const Vec xhat = decode(omega, encode(theta, data.codes[i]));
    total += norm(sub(data.codes[i].values, xhat));
  }
  return total;
}

inline constexpr double kProbClamp = 1e-7;

// Per-attribute binary cross entropy of the classifier's sigmoid outputs on
// the decoded reconstruction, probabilities clamped to [1e-7, 1 - 1e-7].
inline double ce_loss(const EncoderParams& theta, const DecoderParams& omega,
                      const Dataset& data, const std::vector<int>& indices,
                      const AttributeClassifier& classifier) {
  double total = 0.0;
  for (int i : indices) {
    const Vec xhat = decode(omega, encode(theta, data.codes[i]));
    const Vec p = classifier.probabilities(xhat);
    for (size_t j = 0; j < p.size(); ++j) {
      const double pc = std::min(1.0 - kProbClamp, std::max(kProbClamp, p[j]));
      const double s = static_cast<double>(data.codes[i].semantic.bits[j]);
      total += -s * std::log(pc) - (1.0 - s) * std::log(1.0 - pc);
    }
  }
  return total;
}

struct LossSelect {
  bool use_triplet = true;
  bool use_ce = true;
  bool use_recon = true;
  bool recon_into_theta = true;  // encoder-side recon gradient is only used
                                 // by the reconstruction-only update rule
  double mu = 1.0;
};

struct BatchEval {
  double triplet = 0.0;
  double ce = 0.0;
  double recon = 0.0;
  DenseNet grad_theta_triplet, grad_theta_ce, grad_theta_recon;
  DenseNet grad_omega_ce, grad_omega_recon;

  double total(const LossSelect& sel) const {
    return (sel.use_triplet ? triplet : 0.0) + (sel.use_ce ? ce : 0.0) +
           (sel.use_recon ? recon : 0.0);
  }
};

// Evaluates the selected losses on one batch and accumulates exact
// reverse-mode gradients, kept separate per loss so callers can apply the
// update rule they need.
inline BatchEval evaluate_batch(const EncoderParams& theta, const DecoderParams& omega,
                                const Dataset& data, const std::vector<int>& batch,
                                const std::vector<Triplet>& triplets,
                                const AttributeClassifier* classifier,
                                const LossSelect& sel) {
  BatchEval ev;
  ev.grad_theta_triplet = zeros_like(theta.net);
  ev.grad_theta_ce = zeros_like(theta.net);
  ev.grad_theta_recon = zeros_like(theta.net);
  ev.grad_omega_ce = zeros_like(omega.net);
  ev.grad_omega_recon = zeros_like(omega.net);

  if (sel.use_triplet) {
    for (const Triplet& t : triplets) {
      ForwardCache ca, cp, cn;
      const Vec fa = forward(theta.net, data.codes[t.anchor_idx].values, &ca);
      const Vec fp = forward(theta.net, data.codes[t.positive_idx].values, &cp);
      const Vec fn = forward(theta.net, data.codes[t.negative_idx].values, &cn);
      const Vec dp = sub(fa, fp), dn = sub(fa, fn);
      const double val = dot(dp, dp) - dot(dn, dn) + sel.mu;
      if (val <= 0.0) continue;  // hinge inactive; subgradient 0 at the kink
      ev.triplet += val;
      Vec da(fa.size()), dpos(fa.size()), dneg(fa.size());
      for (size_t i = 0; i < fa.size(); ++i) {
        da[i] = 2.0 * (dp[i] - dn[i]);
        dpos[i] = -2.0 * dp[i];
        dneg[i] = 2.0 * dn[i];
      }
      backward(theta.net, ca, da, ev.grad_theta_triplet);
      backward(theta.net, cp, dpos, ev.grad_theta_triplet);
      backward(theta.net, cn, dneg, ev.grad_theta_triplet);
    }
  }

  if (sel.use_ce || sel.use_recon) {
    for (int i : batch) {
      ForwardCache cf, ch;
      const Vec y = forward(theta.net, data.codes[i].values, &cf);
      const Vec xhat = forward(omega.net, y, &ch);

      if (sel.use_recon) {
        const Vec r = sub(data.codes[i].values, xhat);
        const double rn = norm(r);
        ev.recon += rn;
        if (rn > 1e-12) {
          Vec dxhat = scaled(r, -1.0 / rn);
          Vec dy;
          backward(omega.net, ch, dxhat, ev.grad_omega_recon,
                   sel.recon_into_theta ? &dy : nullptr);
          if (sel.recon_into_theta) backward(theta.net, cf, dy, ev.grad_theta_recon);
        }
      }

      if (sel.use_ce) {
        if (!classifier) throw std::invalid_argument("evaluate_batch: ce needs a classifier");
        const Vec p = classifier->probabilities(xhat);
        Vec dlogits(p.size(), 0.0);
        for (size_t j = 0; j < p.size(); ++j) {
          const double s = static_cast<double>(data.codes[i].semantic.bits[j]);
          const double pc = std::min(1.0 - kProbClamp, std::max(kProbClamp, p[j]));
          ev.ce += -s * std::log(pc) - (1.0 - s) * std::log(1.0 - pc);
          // The clamp has zero derivative outside its band.
          if (p[j] > kProbClamp && p[j] < 1.0 - kProbClamp) dlogits[j] = p[j] - s;
        }
        Vec dxhat = matTvec(classifier->weights, dlogits);
        Vec dy;
        backward(omega.net, ch, dxhat, ev.grad_omega_ce, &dy);
        backward(theta.net, cf, dy, ev.grad_theta_ce);
      }
    }
  }
  return ev;
}

// The gradient pair for a selected loss combination; the reference path for
// the finite-difference checks.
inline std::pair<DenseNet, DenseNet> gradients(const EncoderParams& theta,
                                               const DecoderParams& omega, const Dataset& data,
                                               const std::vector<int>& batch,
                                               const std::vector<Triplet>& triplets,
                                               const AttributeClassifier* classifier,
                                               const LossSelect& sel) {
  BatchEval ev = evaluate_batch(theta, omega, data, batch, triplets, classifier, sel);
  DenseNet gt = zeros_like(theta.net);
  DenseNet go = zeros_like(omega.net);
  auto add_into = [](DenseNet& dst, const DenseNet& src) {
    for (size_t l = 0; l < dst.weights.size(); ++l) {
      for (size_t i = 0; i < dst.weights[l].a.size(); ++i)
        dst.weights[l].a[i] += src.weights[l].a[i];
      for (size_t i = 0; i < dst.biases[l].size(); ++i) dst.biases[l][i] += src.biases[l][i];
    }
  };
  if (sel.use_triplet) add_into(gt, ev.grad_theta_triplet);
  if (sel.use_ce) {
    add_into(gt, ev.grad_theta_ce);
    add_into(go, ev.grad_omega_ce);
  }
  if (sel.use_recon) {
    add_into(gt, ev.grad_theta_recon);
    add_into(go, ev.grad_omega_recon);
  }
  return {std::move(gt), std::move(go)};
}

enum class LossMode { kTripletCe, kMseOnly };

struct TrainLogRow {
  int epoch = 0;
  double triplet_loss = 0.0;
  double ce_loss = 0.0;
  double recon_loss = 0.0;
};

struct TrainResult {
  EncoderParams theta;
  DecoderParams omega;
  std::vector<TrainLogRow> log;
};

struct TrainDivergedError : std::runtime_error {
  TrainDivergedError(int epoch, const TrainLogRow& last)
      : std::runtime_error("training diverged at epoch " + std::to_string(epoch) +
                           "; last finite losses: triplet=" + std::to_string(last.triplet_loss) +
                           " ce=" + std::to_string(last.ce_loss) +
                           " recon=" + std::to_string(last.recon_loss)),
        epoch(epoch),
        last_finite(last) {}
  int epoch;
  TrainLogRow last_finite;
};

namespace detail {
inline void sgd_step(DenseNet& net, const DenseNet& grad, double lr) {
  for (size_t l = 0; l < net.weights.size(); ++l) {
    for (size_t i = 0; i < net.weights[l].a.size(); ++i)
      net.weights[l].a[i] -= lr * grad.weights[l].a[i];
    for (size_t i = 0; i < net.biases[l].size(); ++i)
      net.biases[l][i] -= lr * grad.biases[l][i];
  }
}

inline std::vector<int> shuffled_indices(size_t n, CounterRng& rng) {
  std::vector<int> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = static_cast<int>(i);
  for (size_t i = n; i > 1; --i) {
    const size_t j = static_cast<size_t>(rng.uniform() * static_cast<double>(i));
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}
}  // namespace detail

// The training loop: shuffle, batch, update the encoder with the triplet and
// cross-entropy gradients and the decoder with the reconstruction gradient.
// In the MSE-only ablation both networks train on reconstruction alone.
inline TrainResult train_pinet(const Dataset& data, int k, const TrainConfig& config,
                               const AttributeClassifier& classifier, const ArchConfig& arch,
                               LossMode mode = LossMode::kTripletCe, int per_anchor = 1) {
  data.validate();
  config.validate();

  CounterRng init_rng(config.seed, 0x696e6974);  // "init"
  TrainResult result{make_encoder(data.d, k, arch, init_rng),
                     make_decoder(data.d, k, arch, init_rng),
                     {}};

  LossSelect sel;
  if (mode == LossMode::kTripletCe) {
    sel.use_triplet = true;
    sel.use_ce = true;
    sel.use_recon = true;            // recon still drives the decoder
    sel.recon_into_theta = false;    // the encoder update never uses it
  } else {
    sel.use_triplet = false;
    sel.use_ce = false;
    sel.use_recon = true;
  }
  sel.mu = config.margin_mu;

  TrainLogRow last_finite{};
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    CounterRng shuffle_rng(config.seed, 0x73680000ULL + static_cast<uint64_t>(epoch));
    CounterRng mine_rng(config.seed, 0x6d690000ULL + static_cast<uint64_t>(epoch));
    const std::vector<int> order = detail::shuffled_indices(data.codes.size(), shuffle_rng);
    std::vector<std::vector<Triplet>> by_anchor(data.codes.size());
    if (sel.use_triplet) {
      for (const Triplet& t : mine_triplets(data, per_anchor, mine_rng))
        by_anchor[t.anchor_idx].push_back(t);
    }

    TrainLogRow row;
    row.epoch = epoch;
    for (size_t start = 0; start < order.size(); start += config.batch_size) {
      const size_t stop = std::min(order.size(), start + config.batch_size);
      std::vector<int> batch(order.begin() + start, order.begin() + stop);
      std::vector<Triplet> batch_triplets;
      if (sel.use_triplet)
        for (int i : batch)
          batch_triplets.insert(batch_triplets.end(), by_anchor[i].begin(),
                                by_anchor[i].end());

      BatchEval ev = evaluate_batch(result.theta, result.omega, data, batch, batch_triplets,
                                    &classifier, sel);
      if (!std::isfinite(ev.triplet) || !std::isfinite(ev.ce) || !std::isfinite(ev.recon))
        throw TrainDivergedError(epoch, last_finite);

      if (mode == LossMode::kTripletCe) {
        DenseNet gtheta = zeros_like(result.theta.net);
        for (size_t l = 0; l < gtheta.weights.size(); ++l) {
          for (size_t i = 0; i < gtheta.weights[l].a.size(); ++i)
            gtheta.weights[l].a[i] =
                ev.grad_theta_triplet.weights[l].a[i] + ev.grad_theta_ce.weights[l].a[i];
          for (size_t i = 0; i < gtheta.biases[l].size(); ++i)
            gtheta.biases[l][i] =
                ev.grad_theta_triplet.biases[l][i] + ev.grad_theta_ce.biases[l][i];
        }
        detail::sgd_step(result.theta.net, gtheta, config.lr_theta);
        detail::sgd_step(result.omega.net, ev.grad_omega_recon, config.lr_omega);
      } else {
        detail::sgd_step(result.theta.net, ev.grad_theta_recon, config.lr_theta);
        detail::sgd_step(result.omega.net, ev.grad_omega_recon, config.lr_omega);
      }

      row.triplet_loss += ev.triplet;
      row.ce_loss += ev.ce;
      row.recon_loss += ev.recon;
    }
    bool finite = std::isfinite(row.triplet_loss) && std::isfinite(row.ce_loss) &&
                  std::isfinite(row.recon_loss);
    if (!finite) throw TrainDivergedError(epoch, last_finite);
    last_finite = row;
    result.log.push_back(row);
  }
  return result;
}

// Checkpoint: a single document with the architecture, both parameter sets
// flattened row-major, and the per-cluster anchors.
struct Checkpoint {
  int d = 0;
  int k = 0;
  ArchConfig arch;
  EncoderParams theta;
  DecoderParams omega;
  std::vector<ClusterStats> cluster_stats;
};

inline Json checkpoint_to_json(const Checkpoint& ck) {
  Json j;
  j["arch"] = Json{{"d", ck.d}, {"k", ck.k}, {"hidden", ck.arch.hidden},
                   {"layers", ck.arch.hidden_layers}};
  j["theta"] = flatten(ck.theta.net);
  j["omega"] = flatten(ck.omega.net);
  Json stats = Json::array();
  for (const ClusterStats& s : ck.cluster_stats) {
    Json js;
    js["cluster_id"] = s.cluster_id;
    js["anchor_latent"] = Json{{"values", s.anchor_latent.values},
                               {"identity_id", s.anchor_latent.identity_id},
                               {"semantic", s.anchor_latent.semantic.bits}};
    js["anchor_transformed"] = s.anchor_transformed;
    js["member_count"] = s.member_count;
    stats.push_back(std::move(js));
  }
  j["cluster_stats"] = std::move(stats);
  return j;
}

inline Checkpoint checkpoint_from_json(const Json& j) {
  Checkpoint ck;
  const Json& arch = j.at("arch");
  ck.d = arch.at("d").get<int>();
  ck.k = arch.at("k").get<int>();
  ck.arch.hidden = arch.at("hidden").get<int>();
  ck.arch.hidden_layers = arch.at("layers").get<int>();
  CounterRng dummy(0, 0);
  ck.theta = make_encoder(ck.d, ck.k, ck.arch, dummy);
  ck.omega = make_decoder(ck.d, ck.k, ck.arch, dummy);
  unflatten(ck.theta.net, j.at("theta").get<Vec>());
  unflatten(ck.omega.net, j.at("omega").get<Vec>());
  for (const Json& js : j.at("cluster_stats")) {
    ClusterStats s;
    s.cluster_id = js.at("cluster_id").get<int>();
    s.anchor_latent.values = js.at("anchor_latent").at("values").get<Vec>();
    s.anchor_latent.identity_id = js.at("anchor_latent").at("identity_id").get<int>();
    s.anchor_latent.semantic.bits =
        js.at("anchor_latent").at("semantic").get<std::vector<uint8_t>>();
    s.anchor_transformed = js.at("anchor_transformed").get<Vec>();
    s.member_count = js.at("member_count").get<int>();
    ck.cluster_stats.push_back(std::move(s));
  }
  return ck;
}

// Full pipeline for one image: invert, encode, clip, add noise, decode,
// render. The caller chooses the cluster whose anchor governs clipping.
inline GrayImage obfuscate_image(const GrayImage& img, const EncoderParams& theta,
                                 const DecoderParams& omega, const LinearGenerator& gen,
                                 const ClusterStats& stats, const PrivacyParams& p,
                                 CounterRng& rng,
                                 ClipMode mode = ClipMode::kClipIfExceeding) {
  LatentCode x = invert(gen, img);
  x.semantic = stats.anchor_latent.semantic;
  const TransformedCode clipped = clip_transformed(encode(theta, x), stats, x, p, mode);
  const TransformedCode z = sample_noise(clipped, p, rng);
  LatentCode decoded;
  decoded.values = decode(omega, z);
  decoded.identity_id = 0;
  decoded.semantic = stats.anchor_latent.semantic;
  return render(gen, decoded);
}

}  // namespace piobf

#endif  // PIOBF_PINET_HPP_
