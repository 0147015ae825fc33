#include <doctest.h>

#include <fstream>

#include "mkdet/error.hpp"
#include "run_config.hpp"
#include "test_support.hpp"

using namespace mkdet;
using namespace mkdet::cli;

TEST_CASE("key/value parsing") {
  const auto kv = parse_key_values("# comment\nseed = 9\n\n smo.C=2.5 # trailing\n");
  CHECK(kv.size() == 2);
  CHECK(kv.at("seed") == "9");
  CHECK(kv.at("smo.C") == "2.5");
  CHECK_THROWS_AS(parse_key_values("seed\n"), ConfigError);
}

TEST_CASE("config values reach the stage configs") {
  const auto cfg = build_run_config({{"seed", "9"},
                                     {"smo.C", "2.5"},
                                     {"bootstrap.eta_grid", "0.5,1,2"},
                                     {"bootstrap.initial_negatives", "all"},
                                     {"bootstrap.mining", "max_over_indices"},
                                     {"kernel.distance", "squared_euclidean"},
                                     {"detect.min_neighbors", "3"},
                                     {"cluster.enabled", "false"}});
  CHECK(cfg.seed == 9);
  CHECK(cfg.bootstrap.smo.C == 2.5);
  CHECK(cfg.bootstrap.eta_grid == std::vector<double>{0.5, 1.0, 2.0});
  CHECK(cfg.bootstrap.initial_negatives == kAllNegatives);
  CHECK(cfg.bootstrap.mining == MiningMode::max_over_indices);
  CHECK(cfg.bootstrap.distance == DistanceMode::squared_euclidean);
  CHECK(cfg.scan.min_neighbors == 3);
  CHECK(!cfg.cluster_enabled);
}

TEST_CASE("bad configs are rejected") {
  CHECK_THROWS_AS(build_run_config({{"no.such.key", "1"}}), ConfigError);
  CHECK_THROWS_AS(build_run_config({{"smo.C", "abc"}}), ConfigError);
  CHECK_THROWS_AS(build_run_config({{"bootstrap.mining", "sometimes"}}), ConfigError);
  RunConfig same_dirs;
  same_dirs.paths.test_dir = same_dirs.paths.train_dir;
  CHECK_THROWS_AS(same_dirs.validate(), ConfigError);
  RunConfig bad_iou;
  bad_iou.eval_iou = 1.5;
  CHECK_THROWS_AS(bad_iou.validate(), ConfigError);
}

TEST_CASE("overrides win over the file") {
  testing::TempDir dir("cfg");
  const auto file = dir / "run.cfg";
  std::ofstream(file) << "seed=4\nsmo.C=3\n";
  const auto cfg = load_run_config(file, {"smo.C=7"});
  CHECK(cfg.seed == 4);
  CHECK(cfg.bootstrap.smo.C == 7.0);
  CHECK_THROWS_AS(load_run_config(file, {"smo.C"}), ConfigError);
  CHECK_THROWS_AS(load_run_config(dir / "missing.cfg", {}), ConfigError);
}

TEST_CASE("describe round-trips through build_run_config") {
  RunConfig cfg;
  cfg.seed = 77;
  cfg.bootstrap.eta_grid = {0.25, 3.0};
  const auto keys = describe(cfg);
  CHECK(keys.count("detect.stride") == 1);
  const auto back = build_run_config(keys);
  CHECK(describe(back) == keys);
}

TEST_CASE("stage seeds are distinct") {
  CHECK(stage_seed(1, SeedStream::synth_train) != stage_seed(1, SeedStream::synth_test));
  CHECK(stage_seed(1, SeedStream::bootstrap) != stage_seed(2, SeedStream::bootstrap));
  CHECK(stage_seed(5, SeedStream::smo) == stage_seed(5, SeedStream::smo));
}
