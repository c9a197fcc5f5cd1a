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
// Executable versions of the formal guarantees: the analytic density-ratio
// bound, the end-to-end composition bound, the clipping bound, and
// distributional self-tests for the sampler. Analytic checks carry zero
// statistical slack; sampled checks declare their level and sample count.
#ifndef PIOBF_VERIFIER_HPP_
#define PIOBF_VERIFIER_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "piobf/core.hpp"
#include "piobf/mechanism.hpp"
#include "piobf/metrics.hpp"
#include "piobf/rng.hpp"
#include "piobf/stats.hpp"

namespace piobf {

struct PIVerdict {
  std::string test_name;
  bool passed = false;
  bool inconclusive = false;
  double worst_violation = 0.0;
  long trials = 1;
  double confidence_slack = 0.0;
  Json details = Json::object();
};

inline Json verdict_to_json(const PIVerdict& v) {
  Json j;
  j["test_name"] = v.test_name;
  j["passed"] = v.passed;
  j["inconclusive"] = v.inconclusive;
  j["worst_violation"] = v.worst_violation;
  j["trials"] = v.trials;
  j["confidence_slack"] = v.confidence_slack;
  j["details"] = v.details;
  return j;
}

inline Json verdicts_to_json(const std::vector<PIVerdict>& vs) {
  Json arr = Json::array();
  for (const PIVerdict& v : vs) arr.push_back(verdict_to_json(v));
  return arr;
}

// CI contract: 0 all pass, 1 any fail, 2 any inconclusive with none failing.
inline int verdicts_exit_code(const std::vector<PIVerdict>& vs) {
  bool any_fail = false, any_inconclusive = false;
  for (const PIVerdict& v : vs) {
    if (v.inconclusive)
      any_inconclusive = true;
    else if (!v.passed)
      any_fail = true;
  }
  if (any_fail) return 1;
  if (any_inconclusive) return 2;
  return 0;
}

// Normalization identity in log space:
// ln C + ln S_{k-1} + ln Gamma(k) - k ln eps = 0, with S_{k-1} the unit
// sphere surface area.
inline PIVerdict check_normalization(const PrivacyParams& p) {
  PIVerdict v;
  v.test_name = "normalization_identity";
  const double log_surface =
      std::log(2.0) + 0.5 * p.k * std::log(M_PI) - std::lgamma(0.5 * p.k);
  const double residual = log_norm_constant(p.epsilon, p.k) + log_surface +
                          std::lgamma(static_cast<double>(p.k)) -
                          p.k * std::log(p.epsilon);
  v.worst_violation = std::fabs(residual);
  v.passed = v.worst_violation <= 1e-10;
  v.trials = 1;
  v.details["epsilon"] = p.epsilon;
  v.details["k"] = p.k;
  v.details["residual"] = residual;
  return v;
}

// The density-ratio bound: over random triples the log ratio never exceeds
// eps * ||y0 - y0'||, and a colinear triple achieves equality.
inline PIVerdict check_density_ratio_bound(const PrivacyParams& p, long trials,
                                            CounterRng& rng) {
  p.validate();
  PIVerdict v;
  v.test_name = "density_ratio_bound";
  v.trials = trials;
  const double tol = 1e-9;
  double worst = -std::numeric_limits<double>::infinity();
  long violations = 0;
  for (long t = 0; t < trials; ++t) {
    TransformedCode y0(p.k), y0p(p.k), z(p.k);
    for (int i = 0; i < p.k; ++i) {
      y0[i] = 3.0 * rng.normal();
      y0p[i] = 3.0 * rng.normal();
      z[i] = 3.0 * rng.normal();
    }
    const double log_ratio = log_density(y0, z, p) - log_density(y0p, z, p);
    const double bound = p.epsilon * norm(sub(y0, y0p));
    worst = std::max(worst, log_ratio - bound);
    if (log_ratio > bound + tol) ++violations;
  }

  // Tightness: put z on the ray from y0' through y0, past y0.
  TransformedCode y0p(p.k, 0.0), y0(p.k, 0.0), z(p.k, 0.0);
  y0[0] = 2.0;
  z[0] = 5.0;
  const double eq_gap = std::fabs((log_density(y0, z, p) - log_density(y0p, z, p)) -
                                  p.epsilon * norm(sub(y0, y0p)));

  v.worst_violation = std::max(worst, 0.0);
  v.passed = violations == 0 && eq_gap <= tol;
  v.details["violations"] = violations;
  v.details["colinear_equality_gap"] = eq_gap;
  v.details["log_tolerance"] = tol;
  return v;
}

// Exhaustive clipping bound over every same-cluster adjacent pair:
// ||ftilde(x) - ftilde(x')|| <= 2 * delta * beta, zero tolerance.
inline PIVerdict check_clip_bound(
    const std::function<TransformedCode(const LatentCode&)>& encode_fn, const Dataset& data,
    const PrivacyParams& p, bool use_clipping = true,
    ClipMode mode = ClipMode::kClipIfExceeding) {
  p.validate();
  PIVerdict v;
  v.test_name = "clip_bound";
  const double bound = 2.0 * p.delta * p.beta_adj;
  const auto stats = compute_cluster_stats(data, encode_fn);
  auto ftilde = [&](const LatentCode& x) {
    const TransformedCode y = encode_fn(x);
    if (!use_clipping) return y;
    return clip_transformed(y, stats_for(stats, x.semantic.cluster_index()), x, p, mode);
  };

  double worst = 0.0;
  long pairs = 0, violations = 0;
  for (const auto& members : data.members_by_cluster()) {
    std::vector<TransformedCode> ys(members.size());
    for (size_t i = 0; i < members.size(); ++i) ys[i] = ftilde(data.codes[members[i]]);
    for (size_t i = 0; i < members.size(); ++i) {
      for (size_t j = i + 1; j < members.size(); ++j) {
        const double dx = perceptual_distance(data.codes[members[i]], data.codes[members[j]]);
        if (dx > p.beta_adj) continue;
        ++pairs;
        const double dy = norm(sub(ys[i], ys[j]));
        worst = std::max(worst, dy - bound);
        if (dy > bound) ++violations;
      }
    }
  }
  v.trials = pairs;
  v.worst_violation = std::max(worst, 0.0);
  v.passed = violations == 0 && pairs > 0;
  v.details["adjacent_pairs"] = pairs;
  v.details["violations"] = violations;
  v.details["bound"] = bound;
  v.details["clipping"] = use_clipping;
  return v;
}

// The composition bound, made executable through measured sensitivity.
//
// Without clipping this is the raw composition statement: the measured
// sensitivity (max ratio of transformed to latent distance over adjacent
// pairs) must stay at or below 1, and sampled density ratios must respect
// the chained bound eps * delta_hat * d_x.
//
// With clipping active the guarantee the clipping step establishes is the
// blanket bound d_y <= 2 * delta * beta over adjacent pairs, so the
// sensitivity is normalized against that cap (max d_y / (2 delta beta) <= 1)
// and sampled density ratios are checked against
// eps * min(delta_hat_raw * d_x, 2 delta beta). Both sensitivity figures are
// reported in the details.
inline PIVerdict check_composition_bound(
    const std::function<TransformedCode(const LatentCode&)>& encode_fn, const Dataset& data,
    const PrivacyParams& p, long pair_trials, int points_per_pair, CounterRng& rng,
    bool use_clipping = true, double sampling_epsilon = 0.0) {
  p.validate();
  PIVerdict v;
  v.test_name = "composition_bound";
  const double tol = 1e-9;

  std::vector<ClusterStats> stats;
  if (use_clipping) stats = compute_cluster_stats(data, encode_fn);
  auto ftilde = [&](const LatentCode& x) {
    const TransformedCode y = encode_fn(x);
    if (!use_clipping) return y;
    return clip_transformed(y, stats_for(stats, x.semantic.cluster_index()), x, p);
  };

  const std::vector<double> sens = estimate_sensitivity(ftilde, data, p);
  double delta_hat_raw = 0.0;
  for (double s : sens) delta_hat_raw = std::max(delta_hat_raw, s);

  // Enumerate same-cluster adjacent pairs once, then sample from them.
  std::vector<std::pair<int, int>> adjacent;
  double max_dy = 0.0;
  for (const auto& members : data.members_by_cluster()) {
    for (size_t i = 0; i < members.size(); ++i)
      for (size_t j = i + 1; j < members.size(); ++j) {
        const double dx = perceptual_distance(data.codes[members[i]], data.codes[members[j]]);
        if (dx > 0.0 && dx <= p.beta_adj) {
          adjacent.emplace_back(members[i], members[j]);
          max_dy = std::max(
              max_dy, norm(sub(ftilde(data.codes[members[i]]), ftilde(data.codes[members[j]]))));
        }
      }
  }
  if (adjacent.empty()) {
    v.inconclusive = true;
    v.details["reason"] = "no adjacent pairs in dataset";
    return v;
  }

  const double clip_cap = 2.0 * p.delta * p.beta_adj;
  const double delta_hat_norm = use_clipping ? max_dy / clip_cap : delta_hat_raw;

  PrivacyParams actual = p;
  if (sampling_epsilon > 0.0) actual.epsilon = sampling_epsilon;

  double worst = -std::numeric_limits<double>::infinity();
  long violations = 0;
  for (long t = 0; t < pair_trials; ++t) {
    const auto& pr = adjacent[static_cast<size_t>(rng.uniform() * adjacent.size())];
    const LatentCode& x = data.codes[pr.first];
    const LatentCode& xp = data.codes[pr.second];
    const double dx = perceptual_distance(x, xp);
    const TransformedCode ya = ftilde(x);
    const TransformedCode yb = ftilde(xp);
    double bound = p.epsilon * delta_hat_raw * dx;
    if (use_clipping) bound = std::min(bound, p.epsilon * clip_cap);
    for (int q = 0; q < points_per_pair; ++q) {
      const TransformedCode z = sample_noise(q % 2 == 0 ? ya : yb, actual, rng);
      const double log_ratio =
          std::fabs(log_density(ya, z, actual) - log_density(yb, z, actual));
      worst = std::max(worst, log_ratio - bound);
      if (log_ratio > bound + tol) ++violations;
    }
  }

  v.trials = pair_trials * points_per_pair;
  v.worst_violation = std::max(worst, 0.0);
  v.passed = violations == 0 && delta_hat_norm <= 1.0 + tol;
  v.confidence_slack = 0.0;
  v.details["delta_hat"] = delta_hat_norm;
  v.details["delta_hat_raw"] = delta_hat_raw;
  v.details["max_adjacent_dy"] = max_dy;
  v.details["violations"] = violations;
  v.details["adjacent_pairs_available"] = adjacent.size();
  v.details["clipping"] = use_clipping;
  return v;
}

// Sampled surrogate for the set-based privacy statement: projects draws from
// the two mechanisms onto the line through their centers, bins into
// equal-probability bins under the pooled sample, and bounds every per-bin
// log frequency ratio by eps * d_x plus a 99.9% delta-method slack.
inline PIVerdict empirical_pi_histogram_test(
    const std::function<TransformedCode(CounterRng&)>& sample_a,
    const std::function<TransformedCode(CounterRng&)>& sample_b,
    const TransformedCode& center_a, const TransformedCode& center_b, double d_x,
    const PrivacyParams& p, long samples, int bins, CounterRng& rng) {
  p.validate();
  if (samples < 10000) throw std::invalid_argument("empirical_pi_histogram_test: samples >= 1e4");
  PIVerdict v;
  v.test_name = "empirical_pi_histogram";
  v.trials = 2 * samples;

  Vec direction = sub(center_a, center_b);
  const double dn = norm(direction);
  if (dn > 0.0)
    for (double& d : direction) d /= dn;
  else
    direction[0] = 1.0;

  std::vector<double> ta(samples), tb(samples);
  for (long i = 0; i < samples; ++i) ta[i] = dot(sample_a(rng), direction);
  for (long i = 0; i < samples; ++i) tb[i] = dot(sample_b(rng), direction);

  std::vector<double> pooled;
  pooled.reserve(2 * samples);
  pooled.insert(pooled.end(), ta.begin(), ta.end());
  pooled.insert(pooled.end(), tb.begin(), tb.end());
  std::sort(pooled.begin(), pooled.end());
  std::vector<double> edges;  // interior edges
  for (int b = 1; b < bins; ++b)
    edges.push_back(pooled[static_cast<size_t>(
        static_cast<double>(b) / bins * static_cast<double>(pooled.size() - 1))]);

  auto bin_of = [&](double t) {
    return static_cast<size_t>(std::upper_bound(edges.begin(), edges.end(), t) - edges.begin());
  };
  std::vector<long> ca(bins, 0), cb(bins, 0);
  for (double t : ta) ++ca[bin_of(t)];
  for (double t : tb) ++cb[bin_of(t)];

  // Merge bins with a thin side into their left neighbor.
  const long min_count = 25;
  std::vector<long> ma, mb;
  for (int b = 0; b < bins; ++b) {
    if (!ma.empty() && (ma.back() < min_count || mb.back() < min_count)) {
      ma.back() += ca[b];
      mb.back() += cb[b];
    } else {
      ma.push_back(ca[b]);
      mb.push_back(cb[b]);
    }
  }
  while (ma.size() > 1 && (ma.back() < min_count || mb.back() < min_count)) {
    ma[ma.size() - 2] += ma.back();
    mb[mb.size() - 2] += mb.back();
    ma.pop_back();
    mb.pop_back();
  }
  if (ma.size() < 2 || ma.back() < min_count || mb.back() < min_count) {
    v.inconclusive = true;
    v.details["reason"] = "insufficient samples after bin merging";
    return v;
  }

  const double z999 = normal_quantile(1.0 - 0.001 / 2.0);
  const double bound = p.epsilon * d_x;
  double worst = -std::numeric_limits<double>::infinity();
  double max_slack = 0.0;
  long violations = 0;
  for (size_t b = 0; b < ma.size(); ++b) {
    const double pa = static_cast<double>(ma[b]) / static_cast<double>(samples);
    const double pb = static_cast<double>(mb[b]) / static_cast<double>(samples);
    const double slack =
        z999 * std::sqrt(1.0 / static_cast<double>(ma[b]) + 1.0 / static_cast<double>(mb[b]));
    const double log_ratio = std::fabs(std::log(pa) - std::log(pb));
    max_slack = std::max(max_slack, slack);
    worst = std::max(worst, log_ratio - bound - slack);
    if (log_ratio > bound + slack) ++violations;
  }

  v.worst_violation = std::max(worst, 0.0);
  v.confidence_slack = max_slack;
  v.passed = violations == 0;
  v.details["bins_after_merge"] = ma.size();
  v.details["violations"] = violations;
  v.details["bound"] = bound;
  v.details["z_level"] = "two-sided 99.9% normal approx; var(ln p/q) ~ 1/n_p + 1/n_q";
  return v;
}

// KS test of the radial law of the sampler against Gamma(k + shape_offset,
// eps). A nonzero offset is the deliberate wrong-shape negative control; a
// nonzero sampling_epsilon draws at a different rate than the one tested,
// the wrong-budget control.
inline PIVerdict check_radial_marginal(const PrivacyParams& p, long samples, CounterRng& rng,
                                       int shape_offset = 0, double alpha = 0.001,
                                       double sampling_epsilon = 0.0) {
  p.validate();
  PIVerdict v;
  v.test_name = "radial_marginal_ks";
  v.trials = samples;
  PrivacyParams actual = p;
  if (sampling_epsilon > 0.0) actual.epsilon = sampling_epsilon;
  const TransformedCode y0(p.k, 0.0);
  std::vector<double> radii(samples);
  for (long i = 0; i < samples; ++i) radii[i] = norm(sample_noise(y0, actual, rng));
  const double shape = static_cast<double>(p.k + shape_offset);
  const double d = ks_statistic(radii, [&](double r) { return gamma_cdf(shape, p.epsilon, r); });
  const double scaled = std::sqrt(static_cast<double>(samples)) * d;
  const double critical = kolmogorov_critical(alpha);
  v.passed = scaled < critical;
  v.worst_violation = std::max(0.0, scaled - critical);
  v.confidence_slack = critical;
  v.details["ks_statistic"] = d;
  v.details["scaled_statistic"] = scaled;
  v.details["critical_value"] = critical;
  v.details["alpha"] = alpha;
  v.details["shape_tested"] = shape;
  return v;
}

}  // namespace piobf

#endif  // PIOBF_VERIFIER_HPP_
