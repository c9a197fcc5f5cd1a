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
// End-to-end tests of the command-line tool: file outputs, determinism,
// exit codes, and the schema contract.
#include <catch2/catch_amalgamated.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "piobf/synthetic.hpp"

namespace fs = std::filesystem;

namespace {

struct Sandbox {
  fs::path dir;
  Sandbox() {
    dir = fs::temp_directory_path() /
          ("piobf_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter()));
    fs::create_directories(dir);
  }
  ~Sandbox() { fs::remove_all(dir); }
  static int counter() {
    static int c = 0;
    return c++;
  }
};

int run(const Sandbox& sb, const std::string& args) {
  const std::string cmd =
      "cd " + sb.dir.string() + " && " + PI_OBF_BIN + " " + args + " >stdout.txt 2>stderr.txt";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_config(const Sandbox& sb, int epochs = 10) {
  nlohmann::json cfg = {
      {"version", 1},
      {"seed", 7},
      {"population",
       {{"d", 16},
        {"m", 2},
        {"identities_per_cluster", 4},
        {"samples_per_identity", 8},
        {"cluster_spread", 0.35},
        {"identity_spread", 0.105},
        {"mean_scale", 1.26}}},
      {"privacy", {{"k", 8}}},
      {"train",
       {{"margin_mu", 600.0},
        {"lr_theta", 1e-5},
        {"lr_omega", 2e-3},
        {"epochs", epochs},
        {"batch_size", 16},
        {"hidden", 32},
        {"attributes", 2}}},
      {"verify",
       {{"trials", 2000},
        {"pair_trials", 100},
        {"points_per_pair", 5},
        {"samples", 20000},
        {"bins", 10}}},
      {"bench", {{"seeds", 1}, {"probes_per_seed", 16}, {"images_per_eval", 8}}}};
  std::ofstream out(sb.dir / "cfg.json");
  out << cfg.dump(2);
}

}  // namespace

TEST_CASE("gen-data writes the dataset with the declared counts and reproduces bytes") {
  Sandbox sb;
  write_config(sb);
  REQUIRE(run(sb, "gen-data --config cfg.json") == 0);

  const nlohmann::json data = nlohmann::json::parse(slurp(sb.dir / "data/dataset.json"));
  CHECK(data["codes"].size() == 4u * 4u * 8u);
  CHECK(data["num_identities"] == 16);
  CHECK(fs::exists(sb.dir / "data/generator.json"));
  CHECK(fs::exists(sb.dir / "data/classifier.json"));
  CHECK(fs::exists(sb.dir / "data/contact_sheet"));
  const std::string summary = slurp(sb.dir / "stdout.txt");
  CHECK(summary.find("clusters") != std::string::npos);

  const std::string first = slurp(sb.dir / "data/dataset.json");
  REQUIRE(run(sb, "gen-data --config cfg.json") == 0);
  CHECK(slurp(sb.dir / "data/dataset.json") == first);
}

TEST_CASE("gen-data honors excluded patterns") {
  Sandbox sb;
  write_config(sb);
  REQUIRE(run(sb, "gen-data --config cfg.json --exclude-patterns 11") == 0);
  const nlohmann::json data = nlohmann::json::parse(slurp(sb.dir / "data/dataset.json"));
  CHECK(data["codes"].size() == 3u * 4u * 8u);
  for (const auto& code : data["codes"]) {
    const auto& bits = code["semantic"];
    CHECK_FALSE((bits[0] == 1 && bits[1] == 1));
  }
}

TEST_CASE("config schema violations exit 64 with a field message") {
  Sandbox sb;
  write_config(sb);
  std::ofstream(sb.dir / "bad.json") << R"({"version": 1, "trainx": {}})";
  CHECK(run(sb, "gen-data --config bad.json") == 64);
  CHECK(slurp(sb.dir / "stderr.txt").find("trainx") != std::string::npos);

  std::ofstream(sb.dir / "bad2.json") << R"({"train": {"epochz": 3}})";
  CHECK(run(sb, "gen-data --config bad2.json") == 64);
  CHECK(slurp(sb.dir / "stderr.txt").find("train.epochz") != std::string::npos);
}

TEST_CASE("every key in the published schema is accepted by the binary") {
  Sandbox sb;
  // Build a config exercising every property in the schema document.
  const nlohmann::json schema =
      nlohmann::json::parse(slurp(fs::path(PI_OBF_SCHEMA_DIR) / "run_config.schema.json"));
  nlohmann::json cfg;
  for (const auto& [section, spec] : schema["properties"].items()) {
    if (spec["type"] == "object") {
      cfg[section] = nlohmann::json::object();
      for (const auto& [key, unused] : spec["properties"].items())
        cfg[section][key] = nullptr;  // placeholder, replaced below
    }
  }
  // Fill with valid values.
  cfg["version"] = 1;
  cfg["seed"] = 3;
  cfg["paths"] = {{"data_dir", "d"}, {"model_dir", "m"}, {"report_dir", "r"}};
  cfg["population"] = {{"d", 16},          {"m", 2},
                       {"height", 8},      {"width", 8},
                       {"identities_per_cluster", 2}, {"samples_per_identity", 4},
                       {"cluster_spread", 0.35},      {"identity_spread", 0.1},
                       {"mean_scale", 1.3},           {"separation_factor", 4.0},
                       {"label_flip_rate", 0.0},      {"entangled", false},
                       {"exclude_patterns", nlohmann::json::array()},
                       {"render_band", 0.35},         {"render_band_quantile", 0.999}};
  cfg["privacy"] = {{"epsilon", 1.0},
                    {"k", 4},
                    {"delta", 0.5},
                    {"beta_adj", 0.0},
                    {"epsilon_grid", {0.5, 1.0}},
                    {"clip_mode", "max"}};
  cfg["train"] = {{"margin_mu", 10.0}, {"lr_theta", 1e-5}, {"lr_omega", 1e-3},
                  {"epochs", 1},       {"batch_size", 8},  {"hidden", 16},
                  {"hidden_layers", 2}, {"loss_mode", "triplet_ce"}, {"attributes", 2},
                  {"per_anchor", 1}};
  cfg["metrics"] = {{"ssim_window", 7},    {"ssim_k1", 0.01},
                    {"ssim_k2", 0.03},     {"ssim_dynamic_range", 1.0},
                    {"detect_threshold", 0.25}, {"reid_distance", "euclidean"},
                    {"preservation_mode", "prediction"}};
  cfg["verify"] = {{"trials", 10},  {"pair_trials", 5},         {"points_per_pair", 2},
                   {"samples", 10}, {"bins", 4},                {"wrong_epsilon_factor", 1.0},
                   {"wrong_shape_offset", 0}};
  cfg["bench"] = {{"seeds", 1}, {"probes_per_seed", 4}, {"images_per_eval", 2}};
  std::ofstream(sb.dir / "full.json") << cfg.dump(2);
  CHECK(run(sb, "gen-data --config full.json") == 0);
}

TEST_CASE("train writes checkpoints, logs, and is byte-deterministic") {
  Sandbox sb;
  write_config(sb);
  REQUIRE(run(sb, "gen-data --config cfg.json") == 0);

  SECTION("zero epochs returns the initialization") {
    REQUIRE(run(sb, "train --config cfg.json --epochs 0") == 0);
    const nlohmann::json ck =
        nlohmann::json::parse(slurp(sb.dir / "models/pinet_tri_m2_seed7.json"));
    CHECK(ck.contains("theta"));
    CHECK(ck.contains("omega"));
    CHECK(ck.contains("cluster_stats"));
    CHECK(ck["arch"]["k"] == 8);
    // Log contains only the header.
    CHECK(slurp(sb.dir / "models/pinet_tri_m2_seed7_log.csv") ==
          "epoch,triplet_loss,ce_loss,recon_loss\n");
  }

  SECTION("reruns are byte-identical") {
    REQUIRE(run(sb, "train --config cfg.json") == 0);
    const std::string first = slurp(sb.dir / "models/pinet_tri_m2_seed7.json");
    const std::string first_log = slurp(sb.dir / "models/pinet_tri_m2_seed7_log.csv");
    REQUIRE(run(sb, "train --config cfg.json") == 0);
    CHECK(slurp(sb.dir / "models/pinet_tri_m2_seed7.json") == first);
    CHECK(slurp(sb.dir / "models/pinet_tri_m2_seed7_log.csv") == first_log);
  }

  SECTION("the mse-only ablation leaves the triplet and ce columns empty") {
    REQUIRE(run(sb, "train --config cfg.json --ablation mse-only") == 0);
    const std::string log = slurp(sb.dir / "models/pinet_mse_m2_seed7_log.csv");
    std::stringstream ss(log);
    std::string line;
    std::getline(ss, line);  // header
    std::getline(ss, line);
    CHECK(line.rfind("0,,,", 0) == 0);
  }
}

TEST_CASE("obfuscate: vanishing noise, determinism, and the missing-checkpoint code") {
  Sandbox sb;
  write_config(sb);
  REQUIRE(run(sb, "gen-data --config cfg.json") == 0);

  SECTION("pixdp at huge epsilon is a near-identity") {
    REQUIRE(run(sb, "obfuscate --config cfg.json --method pixdp --epsilon 1e9") == 0);
    const nlohmann::json manifest = nlohmann::json::parse(slurp(sb.dir / "reports/manifest.json"));
    REQUIRE(manifest["items"].size() == 16u);
    // Reconstruct the probe inputs (first sample of each identity) and
    // compare pixel for pixel at 8-bit resolution.
    const piobf::Dataset data =
        piobf::dataset_from_json(piobf::Json::parse(slurp(sb.dir / "data/dataset.json")));
    const piobf::LinearGenerator gen =
        piobf::generator_from_json(piobf::Json::parse(slurp(sb.dir / "data/generator.json")));
    std::vector<int> probes;
    std::vector<bool> seen(data.num_identities, false);
    for (size_t i = 0; i < data.codes.size() && probes.size() < 16u; ++i)
      if (!seen[data.codes[i].identity_id]) {
        seen[data.codes[i].identity_id] = true;  // first sample per identity
        probes.push_back(static_cast<int>(i));
      }
    long close = 0, total = 0;
    for (size_t t = 0; t < probes.size(); ++t) {
      const piobf::GrayImage orig = piobf::render(gen, data.codes[probes[t]]);
      char name[64];
      std::snprintf(name, sizeof(name), "reports/obfuscated/out_%05zu.pgm", t);
      std::ifstream in(sb.dir / name, std::ios::binary);
      const piobf::GrayImage out = piobf::read_pgm(in);
      for (size_t i = 0; i < orig.pixels.size(); ++i) {
        close += std::fabs(out.pixels[i] - orig.pixels[i]) <= 0.5 / 255.0 + 1e-6;
        ++total;
      }
    }
    CHECK(static_cast<double>(close) / static_cast<double>(total) >= 0.99);
  }

  SECTION("reruns are byte-identical") {
    REQUIRE(run(sb, "obfuscate --config cfg.json --method pixdp --epsilon 2") == 0);
    const std::string first = slurp(sb.dir / "reports/obfuscated/out_00000.pgm");
    const std::string manifest = slurp(sb.dir / "reports/manifest.json");
    REQUIRE(run(sb, "obfuscate --config cfg.json --method pixdp --epsilon 2") == 0);
    CHECK(slurp(sb.dir / "reports/obfuscated/out_00000.pgm") == first);
    CHECK(slurp(sb.dir / "reports/manifest.json") == manifest);
  }

  SECTION("pinet without a checkpoint exits 66") {
    CHECK(run(sb, "obfuscate --config cfg.json --method pinet") == 66);
  }

  SECTION("pinet outputs are valid images, one per input") {
    REQUIRE(run(sb, "train --config cfg.json") == 0);
    REQUIRE(run(sb, "obfuscate --config cfg.json --method pinet --epsilon 2") == 0);
    const nlohmann::json manifest = nlohmann::json::parse(slurp(sb.dir / "reports/manifest.json"));
    CHECK(manifest["items"].size() == 16u);
    for (int i = 0; i < 16; ++i) {
      char name[64];
      std::snprintf(name, sizeof(name), "reports/obfuscated/out_%05d.pgm", i);
      std::ifstream in(sb.dir / name, std::ios::binary);
      REQUIRE(in.good());
      const piobf::GrayImage img = piobf::read_pgm(in);
      CHECK_NOTHROW(img.validate());
    }
  }
}

TEST_CASE("verify exit codes follow the contract") {
  Sandbox sb;
  write_config(sb, /*epochs=*/10);
  REQUIRE(run(sb, "gen-data --config cfg.json") == 0);
  REQUIRE(run(sb, "train --config cfg.json") == 0);

  CHECK(run(sb, "verify --config cfg.json") == 0);
  CHECK(fs::exists(sb.dir / "reports/verdicts.json"));
  CHECK(run(sb, "verify --config cfg.json --inject-wrong-epsilon 2") == 1);
  CHECK(run(sb, "verify --config cfg.json --samples 100") == 2);
  CHECK(run(sb, "verify --config cfg.json --set verify.wrong_shape_offset=2") == 1);
}

TEST_CASE("bench emits the five report CSVs with tagged rows") {
  Sandbox sb;
  write_config(sb, /*epochs=*/5);
  REQUIRE(run(sb, "gen-data --config cfg.json") == 0);
  REQUIRE(run(sb, "train --config cfg.json") == 0);
  REQUIRE(run(sb, "train --config cfg.json --ablation mse-only") == 0);
  // A second seed exercises the multi-seed row layout.
  REQUIRE(run(sb, "train --config cfg.json --set seed=8") == 0);
  REQUIRE(run(sb, "train --config cfg.json --ablation mse-only --set seed=8") == 0);
  REQUIRE(run(sb, "bench --config cfg.json --set bench.seeds=2") == 0);

  const std::string quality = slurp(sb.dir / "reports/quality.csv");
  CHECK(quality.rfind("epsilon,method,loss_mode,attributes,seed,ssim_mean,ssim_std\n", 0) == 0);
  // 5 grid points x (2 pinet models + 2 baselines) x 2 seeds = 40 rows + header.
  CHECK(std::count(quality.begin(), quality.end(), '\n') == 41);
  CHECK(quality.find("pixdp") != std::string::npos);
  CHECK(quality.find("svdpriv") != std::string::npos);
  CHECK(quality.find("triplet_ce") != std::string::npos);
  CHECK(quality.find("mse_only") != std::string::npos);

  for (const char* name : {"preservation.csv", "reid.csv", "detect.csv", "yspace_pca.csv"})
    CHECK(fs::exists(sb.dir / "reports" / name));

  const std::string pca = slurp(sb.dir / "reports/yspace_pca.csv");
  // Header plus one row per code per loss mode.
  CHECK(std::count(pca.begin(), pca.end(), '\n') == 1 + 2 * 128);
}

TEST_CASE("bench without the ablation checkpoint degrades with a warning") {
  Sandbox sb;
  write_config(sb, /*epochs=*/5);
  REQUIRE(run(sb, "gen-data --config cfg.json") == 0);
  REQUIRE(run(sb, "train --config cfg.json") == 0);
  REQUIRE(run(sb, "bench --config cfg.json") == 0);
  CHECK(slurp(sb.dir / "stdout.txt").find("warning: missing ablation checkpoint") !=
        std::string::npos);
  const std::string quality = slurp(sb.dir / "reports/quality.csv");
  CHECK(quality.find("mse_only") == std::string::npos);
}

TEST_CASE("the default configuration yields the full-size population") {
  Sandbox sb;
  std::ofstream(sb.dir / "empty.json") << "{}";
  REQUIRE(run(sb, "gen-data --config empty.json") == 0);
  const nlohmann::json data = nlohmann::json::parse(slurp(sb.dir / "data/dataset.json"));
  CHECK(data["codes"].size() == 16u * 8u * 16u);  // 2^4 clusters x 8 ids x 16 samples
  CHECK(data["num_identities"] == 128);
}

TEST_CASE("training divergence exits 65") {
  Sandbox sb;
  write_config(sb, /*epochs=*/30);
  REQUIRE(run(sb, "gen-data --config cfg.json") == 0);
  CHECK(run(sb, "train --config cfg.json --set train.lr_theta=1e18") == 65);
  CHECK(slurp(sb.dir / "stderr.txt").find("diverged") != std::string::npos);
}

TEST_CASE("obfuscate consumes foreign PGM directories") {
  Sandbox sb;
  write_config(sb);
  REQUIRE(run(sb, "gen-data --config cfg.json") == 0);
  REQUIRE(run(sb, "obfuscate --config cfg.json --method pixdp --epsilon 4 --input "
                  "data/contact_sheet") == 0);
  const nlohmann::json manifest = nlohmann::json::parse(slurp(sb.dir / "reports/manifest.json"));
  CHECK(manifest["items"].size() == 16u);  // one per identity render
  CHECK(std::string(manifest["items"][0]["input"]).find("contact_sheet") != std::string::npos);
}

TEST_CASE("PI_OBF_SEED overrides the config seed") {
  Sandbox sb;
  write_config(sb);
  REQUIRE(run(sb, "gen-data --config cfg.json") == 0);
  const std::string baseline = slurp(sb.dir / "data/dataset.json");
  const std::string cmd = "cd " + sb.dir.string() + " && PI_OBF_SEED=99 " + PI_OBF_BIN +
                          " gen-data --config cfg.json >/dev/null 2>&1";
  REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  CHECK(slurp(sb.dir / "data/dataset.json") != baseline);
}
