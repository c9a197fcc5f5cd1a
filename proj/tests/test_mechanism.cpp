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
#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <functional>
#include <sstream>
#include <vector>

#include "piobf/mechanism.hpp"
#include "piobf/stats.hpp"

using piobf::CounterRng;
using piobf::PrivacyParams;
using piobf::TransformedCode;

namespace {

PrivacyParams params(double eps, int k) {
  PrivacyParams p;
  p.epsilon = eps;
  p.k = k;
  return p;
}

// Quadrature oracle for the normalization identity:
// C * S_{k-1} * int_0^inf r^{k-1} e^{-eps r} dr must equal 1.
double normalization_product(double eps, int k) {
  const double log_c = piobf::log_norm_constant(eps, k);
  const double log_surface = std::log(2.0) + 0.5 * k * std::log(M_PI) - std::lgamma(0.5 * k);
  // Integrate r^{k-1} e^{-eps r} with composite Simpson out to where the
  // integrand is negligible.
  const double upper = (k / eps) * 8.0 + 40.0 / eps;
  const int steps = 40000;
  const double h = upper / steps;
  auto f = [&](double r) {
    if (r <= 0.0) return k == 1 ? 1.0 : 0.0;
    return std::exp((k - 1) * std::log(r) - eps * r);
  };
  double integral = f(0.0) + f(upper);
  for (int i = 1; i < steps; ++i) integral += f(i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  integral *= h / 3.0;
  return std::exp(log_c + log_surface) * integral;
}

}  // namespace

TEST_CASE("log norm constant matches closed forms at k=2 and k=4") {
  CHECK(piobf::log_norm_constant(1.0, 2) ==
        Catch::Approx(std::log(1.0 / (2.0 * M_PI))).margin(1e-12));
  CHECK(piobf::log_norm_constant(1.0, 4) ==
        Catch::Approx(std::log(1.0 / (12.0 * M_PI * M_PI))).margin(1e-12));
}

TEST_CASE("norm constant scaling in epsilon") {
  for (int k : {1, 3, 16}) {
    const double diff = piobf::log_norm_constant(2.0, k) - piobf::log_norm_constant(1.0, k);
    CHECK(diff == Catch::Approx(k * std::log(2.0)).margin(1e-12));
  }
}

TEST_CASE("density integrates to one over R^k (quadrature oracle)") {
  for (int k : {1, 2, 3, 4, 8, 16}) {
    for (double eps : {0.5, 1.0, 2.0}) {
      CHECK(normalization_product(eps, k) == Catch::Approx(1.0).margin(1e-6));
    }
  }
}

TEST_CASE("log norm constant rejects bad parameters") {
  CHECK_THROWS_AS(piobf::log_norm_constant(0.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(piobf::log_norm_constant(1.0, 0), std::invalid_argument);
}

TEST_CASE("norm constant stays finite across the supported parameter range") {
  for (int k : {1, 2, 16, 64}) {
    for (double eps : {1e-3, 1.0, 1e3}) {
      const double c = std::exp(piobf::log_norm_constant(eps, k));
      CHECK(std::isfinite(c));
      CHECK(c >= 0.0);
    }
  }
}

TEST_CASE("density values at the center and at unit distance") {
  const PrivacyParams p = params(1.0, 2);
  const TransformedCode y0{0.3, -0.7};
  CHECK(piobf::density(y0, y0, p) == Catch::Approx(1.0 / (2.0 * M_PI)).margin(1e-12));
  const TransformedCode z{0.3 + 1.0, -0.7};
  CHECK(piobf::density(y0, z, p) == Catch::Approx(0.05855).margin(1e-5));
  CHECK_THROWS_AS(piobf::density(y0, {1.0, 2.0, 3.0}, p), std::invalid_argument);
}

TEST_CASE("density ratios obey the triangle bound on random triples") {
  const PrivacyParams p = params(2.0, 5);
  CounterRng rng(21, 1);
  for (int t = 0; t < 2000; ++t) {
    TransformedCode y0(5), y0p(5), z(5);
    for (int i = 0; i < 5; ++i) {
      y0[i] = rng.normal();
      y0p[i] = rng.normal();
      z[i] = 2.0 * rng.normal();
    }
    const double ratio = piobf::density(y0, z, p) / piobf::density(y0p, z, p);
    const double bound = std::exp(p.epsilon * piobf::norm(piobf::sub(y0, y0p)));
    CHECK(ratio <= bound * (1.0 + 1e-9));
  }
}

TEST_CASE("radial sampler mean and variance match the gamma law") {
  CounterRng rng(31, 2);
  SECTION("mean at (k=16, eps=2)") {
    const PrivacyParams p = params(2.0, 16);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) sum += piobf::sample_radial(p, rng);
    CHECK(sum / n == Catch::Approx(8.0).margin(0.1));
  }
  SECTION("variance at (k=4, eps=1)") {
    const PrivacyParams p = params(1.0, 4);
    const int n = 100000;
    std::vector<double> xs(n);
    for (int i = 0; i < n; ++i) xs[i] = piobf::sample_radial(p, rng);
    CHECK(piobf::variance(xs) == Catch::Approx(4.0).margin(0.2));
  }
}

TEST_CASE("sphere samples have unit norm and centered coordinates") {
  CounterRng rng(41, 3);
  const int n = 100000;
  piobf::Vec coord_sums(8, 0.0);
  double worst_norm_dev = 0.0;
  for (int i = 0; i < n; ++i) {
    const TransformedCode u = piobf::sample_unit_sphere(8, rng);
    worst_norm_dev = std::max(worst_norm_dev, std::fabs(piobf::norm(u) - 1.0));
    for (int j = 0; j < 8; ++j) coord_sums[j] += u[j];
  }
  CHECK(worst_norm_dev < 1e-12);
  for (int j = 0; j < 8; ++j) CHECK(coord_sums[j] / n == Catch::Approx(0.0).margin(0.01));
}

TEST_CASE("the 0-sphere is a fair coin") {
  CounterRng rng(43, 4);
  const int n = 100000;
  int plus = 0;
  for (int i = 0; i < n; ++i) {
    const TransformedCode u = piobf::sample_unit_sphere(1, rng);
    REQUIRE((u[0] == 1.0 || u[0] == -1.0));
    plus += u[0] > 0.0;
  }
  CHECK(static_cast<double>(plus) / n == Catch::Approx(0.5).margin(0.01));
}

TEST_CASE("noise samples sit at the radial distance and translate with the center") {
  const PrivacyParams p = params(1.5, 6);
  SECTION("translation equivariance under a shared stream") {
    TransformedCode y0(6, 0.0), shift(6);
    for (int i = 0; i < 6; ++i) shift[i] = 0.5 * (i + 1);
    CounterRng r1(7, 7), r2(7, 7);
    const TransformedCode a = piobf::sample_noise(y0, p, r1);
    const TransformedCode b = piobf::sample_noise(shift, p, r2);
    for (int i = 0; i < 6; ++i) CHECK(b[i] == Catch::Approx(a[i] + shift[i]).margin(1e-12));
  }
  SECTION("radial law pushforward: chi-square fit of log densities") {
    // ln density(y0, z) is a deterministic function of r; comparing the
    // induced distribution of r against Gamma(k, eps) in ten equal-mass
    // bins is a goodness-of-fit check of the full pushforward.
    CounterRng rng(71, 8);
    TransformedCode y0(6, 1.0);
    const int n = 100000;
    const int bins = 10;
    std::vector<long> counts(bins, 0);
    for (int i = 0; i < n; ++i) {
      const TransformedCode z = piobf::sample_noise(y0, p, rng);
      const double r = piobf::norm(piobf::sub(z, y0));
      const double u = piobf::gamma_cdf(p.k, p.epsilon, r);
      counts[std::min(bins - 1, static_cast<int>(u * bins))]++;
    }
    double chi2 = 0.0;
    const double expected = static_cast<double>(n) / bins;
    for (long c : counts) chi2 += (c - expected) * (c - expected) / expected;
    CHECK(piobf::chi_square_sf(chi2, bins - 1) > 0.001);
  }
}

TEST_CASE("noise sampling is reproducible per (seed, stream)") {
  const PrivacyParams p = params(1.0, 16);
  TransformedCode y0(16, 0.25);
  CounterRng a(123, 9), b(123, 9), c(123, 10);
  bool identical = true, differs = false;
  for (int i = 0; i < 50; ++i) {
    const TransformedCode za = piobf::sample_noise(y0, p, a);
    const TransformedCode zb = piobf::sample_noise(y0, p, b);
    const TransformedCode zc = piobf::sample_noise(y0, p, c);
    identical = identical && za == zb;
    differs = differs || za != zc;
  }
  CHECK(identical);
  CHECK(differs);
}

TEST_CASE("clipping scales offsets outside the cap and leaves the rest alone") {
  piobf::ClusterStats stats;
  stats.cluster_id = 0;
  stats.anchor_latent.values = {0.0, 0.0};
  stats.anchor_latent.semantic = piobf::SemanticLabel::from_cluster_index(0, 1);
  stats.anchor_transformed = {0.0, 0.0};
  stats.member_count = 2;

  PrivacyParams p = params(1.0, 2);
  p.delta = 0.5;
  p.beta_adj = 100.0;  // large enough that the adjacency cap never binds here

  piobf::LatentCode x;
  x.semantic = piobf::SemanticLabel::from_cluster_index(0, 1);

  SECTION("g=(3,4) with cap 2.5 becomes (1.5, 2.0)") {
    x.values = {5.0, 0.0};  // ||x - anchor|| = 5, cap = 2.5
    const TransformedCode clipped = piobf::clip_transformed({3.0, 4.0}, stats, x, p);
    CHECK(clipped[0] == Catch::Approx(1.5).margin(1e-12));
    CHECK(clipped[1] == Catch::Approx(2.0).margin(1e-12));
    CHECK(piobf::norm(clipped) == Catch::Approx(2.5).margin(1e-12));
  }
  SECTION("inside the ball the clip is the identity") {
    x.values = {20.0, 0.0};  // cap = 10
    const TransformedCode y{0.6, -0.8};
    const TransformedCode clipped = piobf::clip_transformed(y, stats, x, p);
    CHECK(clipped == y);
  }
  SECTION("x at the anchor returns the anchor's transform") {
    x.values = {0.0, 0.0};
    const TransformedCode clipped = piobf::clip_transformed({9.0, 9.0}, stats, x, p);
    CHECK(clipped == stats.anchor_transformed);
  }
  SECTION("always-rescale mode projects onto the cap sphere") {
    x.values = {5.0, 0.0};  // cap = 2.5
    const TransformedCode clipped =
        piobf::clip_transformed({0.3, 0.4}, stats, x, p, piobf::ClipMode::kAlwaysRescale);
    CHECK(piobf::norm(clipped) == Catch::Approx(2.5).margin(1e-12));
  }
  SECTION("cluster mismatch is rejected") {
    x.values = {1.0, 0.0};
    x.semantic = piobf::SemanticLabel::from_cluster_index(1, 1);
    CHECK_THROWS_AS(piobf::clip_transformed({1.0, 1.0}, stats, x, p), std::invalid_argument);
  }
  SECTION("anchors beyond the adjacency radius clip at delta*beta") {
    p.beta_adj = 2.0;       // x sits 5 away from the anchor, past beta
    x.values = {5.0, 0.0};  // cap = 0.5 * min(5, 2) = 1
    const TransformedCode clipped = piobf::clip_transformed({3.0, 4.0}, stats, x, p);
    CHECK(piobf::norm(clipped) == Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("clipped offsets of adjacent same-cluster pairs obey the 2-delta-beta bound") {
  // Random encoder outputs with huge norms: after clipping, any two
  // same-cluster adjacent points are within 2*delta*beta of each other.
  CounterRng rng(57, 11);
  PrivacyParams p = params(1.0, 4);
  p.delta = 0.5;
  p.beta_adj = 2.0;

  piobf::ClusterStats stats;
  stats.cluster_id = 0;
  stats.anchor_latent.values = {0.0, 0.0, 0.0};
  stats.anchor_latent.semantic = piobf::SemanticLabel::from_cluster_index(0, 1);
  stats.anchor_transformed = {0.0, 0.0, 0.0, 0.0};
  stats.member_count = 100;

  for (int t = 0; t < 500; ++t) {
    piobf::LatentCode x1, x2;
    x1.semantic = x2.semantic = stats.anchor_latent.semantic;
    x1.values.resize(3);
    x2.values.resize(3);
    for (int i = 0; i < 3; ++i) {
      x1.values[i] = 0.5 * rng.normal();
      x2.values[i] = 0.5 * rng.normal();
    }
    if (piobf::perceptual_distance(x1, x2) > p.beta_adj) continue;
    TransformedCode y1(4), y2(4);
    for (int i = 0; i < 4; ++i) {
      y1[i] = 1000.0 * rng.normal();
      y2[i] = 1000.0 * rng.normal();
    }
    const TransformedCode c1 = piobf::clip_transformed(y1, stats, x1, p);
    const TransformedCode c2 = piobf::clip_transformed(y2, stats, x2, p);
    CHECK(piobf::norm(piobf::sub(c1, c2)) <= 2.0 * p.delta * p.beta_adj);
  }
}

TEST_CASE("obfuscate_transformed composes clip and noise") {
  PrivacyParams p = params(2.0, 3);
  piobf::ClusterStats stats;
  stats.cluster_id = 0;
  stats.anchor_latent.values = {1.0, 1.0};
  stats.anchor_latent.semantic = piobf::SemanticLabel::from_cluster_index(0, 1);
  stats.anchor_transformed = {0.5, 0.5, 0.5};
  stats.member_count = 3;

  auto encoder = [](const piobf::LatentCode& x) {
    return TransformedCode{x.values[0], x.values[1], 0.0};
  };

  piobf::LatentCode x;
  x.values = {1.0, 1.0};  // exactly the anchor
  x.semantic = stats.anchor_latent.semantic;
  CounterRng rng(3, 3);
  const TransformedCode z = piobf::obfuscate_transformed(x, encoder, stats, p, rng);
  REQUIRE(z.size() == 3);
  // Center must be the anchor transform; the sample sits at the radial draw.
  CounterRng replay(3, 3);
  const double r = piobf::sample_radial(p, replay);
  CHECK(piobf::norm(piobf::sub(z, stats.anchor_transformed)) == Catch::Approx(r).margin(1e-12));
}

TEST_CASE("noise sampler handles reproduce draws by (seed, stream_key)") {
  piobf::NoiseSampler sampler;
  sampler.params = params(1.0, 4);
  sampler.stream_key = 42;
  const TransformedCode y0{0.0, 1.0, 2.0, 3.0};
  CHECK(sampler(y0, 7) == sampler(y0, 7));
  CHECK(sampler(y0, 7) != sampler(y0, 8));
  piobf::NoiseSampler other = sampler;
  other.stream_key = 43;
  CHECK(sampler(y0, 7) != other(y0, 7));
}

TEST_CASE("sample dump CSV has the declared columns") {
  PrivacyParams p = params(1.0, 2);
  CounterRng rng(9, 9);
  std::ostringstream os;
  piobf::dump_samples_csv(os, {0.0, 0.0}, p, rng, 3);
  const std::string text = os.str();
  CHECK(text.rfind("sample_index,r,z_1,z_2\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
}
