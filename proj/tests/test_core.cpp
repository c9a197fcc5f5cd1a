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

#include "piobf/core.hpp"
#include "piobf/rng.hpp"

using piobf::LatentCode;
using piobf::PrivacyParams;
using piobf::SemanticLabel;

namespace {
LatentCode code_of(std::initializer_list<double> vals) {
  LatentCode c;
  c.values = vals;
  c.identity_id = 0;
  c.semantic = SemanticLabel::from_cluster_index(0, 2);
  return c;
}
}  // namespace

TEST_CASE("perceptual distance basics") {
  const LatentCode a = code_of({1.0, -2.0, 3.5});
  CHECK(piobf::perceptual_distance(a, a) == 0.0);

  const LatentCode p = code_of({0.0, 0.0});
  const LatentCode q = code_of({3.0, 4.0});
  CHECK(piobf::perceptual_distance(p, q) == Catch::Approx(5.0));

  CHECK_THROWS_AS(piobf::perceptual_distance(a, p), std::invalid_argument);
}

TEST_CASE("perceptual distance matches the componentwise oracle on 32-dim pairs") {
  piobf::CounterRng rng(7, 1);
  for (int trial = 0; trial < 20; ++trial) {
    LatentCode a, b;
    a.values.resize(32);
    b.values.resize(32);
    for (int i = 0; i < 32; ++i) {
      a.values[i] = 10.0 * rng.normal();
      b.values[i] = 10.0 * rng.normal();
    }
    double acc = 0.0;
    for (int i = 0; i < 32; ++i) acc += (a.values[i] - b.values[i]) * (a.values[i] - b.values[i]);
    CHECK(piobf::perceptual_distance(a, b) == Catch::Approx(std::sqrt(acc)).margin(1e-12));
  }
}

TEST_CASE("perceptual distance is a metric on random triples") {
  piobf::CounterRng rng(13, 2);
  for (int trial = 0; trial < 500; ++trial) {
    LatentCode a, b, c;
    for (LatentCode* x : {&a, &b, &c}) {
      x->values.resize(8);
      for (double& v : x->values) v = 5.0 * rng.normal();
    }
    const double ab = piobf::perceptual_distance(a, b);
    const double ba = piobf::perceptual_distance(b, a);
    const double ac = piobf::perceptual_distance(a, c);
    const double cb = piobf::perceptual_distance(c, b);
    CHECK(ab >= 0.0);
    CHECK(ab == Catch::Approx(ba).margin(1e-9));
    CHECK(ab <= ac + cb + 1e-9);
  }
}

TEST_CASE("adjacency boundary is inclusive") {
  PrivacyParams p;
  p.beta_adj = 5.0;
  const LatentCode a = code_of({0.0, 0.0});
  const LatentCode b = code_of({3.0, 4.0});
  CHECK(piobf::are_adjacent(a, a, p));
  CHECK(piobf::are_adjacent(a, b, p));  // distance exactly beta
  p.beta_adj = 4.9;
  CHECK_FALSE(piobf::are_adjacent(a, b, p));
}

TEST_CASE("adjacency is symmetric and reflexive") {
  piobf::CounterRng rng(99, 3);
  PrivacyParams p;
  p.beta_adj = 3.0;
  for (int trial = 0; trial < 200; ++trial) {
    LatentCode a, b;
    a.values.resize(4);
    b.values.resize(4);
    for (int i = 0; i < 4; ++i) {
      a.values[i] = rng.normal();
      b.values[i] = 2.0 * rng.normal();
    }
    CHECK(piobf::are_adjacent(a, a, p));
    CHECK(piobf::are_adjacent(a, b, p) == piobf::are_adjacent(b, a, p));
  }
}

TEST_CASE("semantic label encodes cluster indices big-endian") {
  SemanticLabel s;
  s.bits = {1, 0, 1, 1};
  CHECK(s.cluster_index() == 11);
  CHECK(SemanticLabel::from_cluster_index(11, 4) == s);
  CHECK(SemanticLabel::from_cluster_index(0, 3).cluster_index() == 0);
}

TEST_CASE("privacy params validation enforces the clipped-sensitivity regime") {
  PrivacyParams p;
  CHECK_NOTHROW(p.validate());
  p.delta = 0.6;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.delta = 0.5;
  p.epsilon = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("dataset json round trip is stable and ordered") {
  piobf::Dataset data;
  data.d = 3;
  data.m = 2;
  data.num_identities = 2;
  piobf::CounterRng rng(5, 5);
  for (int i = 0; i < 6; ++i) {
    LatentCode c;
    c.values = {rng.normal(), rng.normal(), rng.normal()};
    c.identity_id = i % 2;
    c.semantic = SemanticLabel::from_cluster_index(i % 4, 2);
    data.codes.push_back(c);
  }
  const piobf::Json j = piobf::dataset_to_json(data);
  const std::string text = j.dump();
  CHECK(text.rfind("{\"d\":3,\"m\":2,\"num_identities\":2,\"codes\":[", 0) == 0);

  const piobf::Dataset back = piobf::dataset_from_json(piobf::Json::parse(text));
  REQUIRE(back.codes.size() == data.codes.size());
  for (size_t i = 0; i < data.codes.size(); ++i) {
    CHECK(back.codes[i].values == data.codes[i].values);
    CHECK(back.codes[i].identity_id == data.codes[i].identity_id);
    CHECK(back.codes[i].semantic == data.codes[i].semantic);
  }
  // Byte-identical re-serialization.
  CHECK(piobf::dataset_to_json(back).dump() == text);
}

TEST_CASE("dataset validation rejects malformed content") {
  piobf::Dataset data;
  data.d = 3;
  data.m = 2;
  data.num_identities = 1;
  LatentCode c = code_of({1.0, 2.0});
  c.identity_id = 5;
  data.codes.push_back(c);
  CHECK_THROWS_AS(data.validate(), std::invalid_argument);
}

TEST_CASE("attribute truncation keeps prefixes") {
  piobf::Dataset data;
  data.d = 2;
  data.m = 3;
  data.num_identities = 1;
  LatentCode c = code_of({1.0, 0.0});
  c.semantic = SemanticLabel::from_cluster_index(5, 3);  // bits 101
  data.codes.push_back(c);
  const piobf::Dataset t = piobf::truncate_attributes(data, 2);
  CHECK(t.m == 2);
  CHECK(t.codes[0].semantic.bits == std::vector<uint8_t>{1, 0});
}
