#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mkdet/error.hpp"
#include "mkdet/trainer.hpp"
#include "test_support.hpp"

using namespace mkdet;

namespace {

using Foregrounds = std::vector<std::pair<std::vector<double>, int>>;

// Two foreground groups whose negatives look like the other group's
// foregrounds: only an index-aware (large eta) kernel separates them.
std::vector<TrainingTuple> crossed_groups(ForegroundTable& table, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TrainingTuple> s;
  const std::size_t per_group = 12;
  for (std::size_t g = 0; g < 2; ++g) {
    for (std::size_t k = 0; k < per_group; ++k) {
      std::vector<double> x{g == 0 ? 1.0 : 0.0, g == 0 ? 0.0 : 1.0};
      for (auto& v : x) v += 0.05 * rng.normal();
      const std::size_t i = table.add(x, static_cast<int>(g) + 1);
      s.push_back({x, i, 1});
    }
  }
  for (std::size_t k = 0; k < 48; ++k) {
    const std::size_t i = rng.index(table.size());
    const bool group_a = table[i].subclass == 1;
    std::vector<double> x{group_a ? 0.0 : 1.0, group_a ? 1.0 : 0.0};
    for (auto& v : x) v += 0.05 * rng.normal();
    s.push_back({x, i, -1});
  }
  return s;
}

Foregrounds foregrounds_of(const testing::ToyProblem& p) {
  Foregrounds f;
  for (const auto& e : p.table.entries()) f.emplace_back(e.x, e.subclass);
  return f;
}

BootstrapConfig small_config() {
  BootstrapConfig c;
  c.eta_grid = {0.5};
  c.max_rounds = 8;
  c.seed = 9;
  c.smo.C = 10.0;
  return c;
}

// Pool mixing easy background with near-foreground distractors.
std::vector<std::vector<double>> distractor_pool(const testing::ToyProblem& p, std::size_t easy, std::size_t hard,
                                                 std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> pool;
  const std::size_t dim = p.table.dim();
  for (std::size_t k = 0; k < easy; ++k) {
    auto x = testing::random_feature(rng, dim);
    for (std::size_t j = dim / 2; j < dim; ++j) x[j] += 0.5;
    pool.push_back(x);
  }
  for (std::size_t k = 0; k < hard; ++k) {
    auto x = p.table[rng.index(p.table.size())].x;
    for (auto& v : x) v = 0.6 * v + 0.3 * rng.uniform();
    pool.push_back(x);
  }
  return pool;
}

}  // namespace

TEST_CASE("negative combination count") {
  CHECK(negative_combination_count(4000, 1325) == 5300000u);
  CHECK(negative_combination_count(0, 17) == 0u);
  CHECK(negative_combination_count(1, 1) == 1u);
}

TEST_CASE("negative index assignment") {
  Rng rng(1);
  std::vector<std::vector<double>> negs;
  for (int k = 0; k < 10000; ++k) negs.push_back({rng.uniform()});

  ForegroundTable one;
  one.add({0.5}, 1);
  for (const auto& t : assign_negative_indices(negs, one, 3)) {
    CHECK(t.fg_index == 0);
    CHECK(t.label == -1);
  }

  ForegroundTable five;
  for (int i = 0; i < 5; ++i) five.add({0.1 * i}, i + 1);
  const auto a = assign_negative_indices(negs, five, 42);
  CHECK(a == assign_negative_indices(negs, five, 42));
  std::array<double, 5> freq{};
  for (const auto& t : a) ++freq[t.fg_index];
  const double n = 10000.0, p = 0.2;
  const double sigma = std::sqrt(n * p * (1 - p));
  for (double f : freq) CHECK(std::abs(f - n * p) <= 5 * sigma);

  CHECK_THROWS_AS(assign_negative_indices(negs, ForegroundTable{}, 1), DataError);
}

TEST_CASE("stratified folds hold both labels") {
  std::vector<int> labels;
  for (int k = 0; k < 23; ++k) labels.push_back(k < 7 ? 1 : -1);
  const auto folds = stratified_folds(labels, 3, 5);
  for (std::size_t f = 0; f < 3; ++f) {
    int pos = 0, neg = 0;
    for (std::size_t k = 0; k < labels.size(); ++k) {
      if (folds[k] == f) (labels[k] > 0 ? pos : neg)++;
    }
    CHECK(pos >= 2);
    CHECK(neg >= 5);
  }
  CHECK(folds == stratified_folds(labels, 3, 5));
}

TEST_CASE("select_eta: single value and tie-break") {
  const auto p = testing::toy_problem(2, 15, 30, 8);
  BootstrapConfig cfg = small_config();
  cfg.eta_grid = {0.7};
  CHECK(select_eta(p.samples, p.table, cfg).eta == 0.7);

  cfg.eta_grid = {2.0, 0.5, 1.0};
  const auto sel = select_eta(p.samples, p.table, cfg);
  for (const auto& s : sel.scores) CHECK(s.accuracy == 1.0);
  CHECK(sel.eta == 0.5);
  CHECK(sel.scores.front().eta == 0.5);
}

TEST_CASE("select_eta picks the grid argmax when small eta underfits") {
  ForegroundTable table;
  const auto samples = crossed_groups(table, 4);
  BootstrapConfig cfg = small_config();
  cfg.eta_grid = {0.001, 0.1, 1.0, 10.0, 50.0};
  cfg.cv_folds = 3;
  const auto sel = select_eta(samples, table, cfg);

  // Exhaustive re-evaluation of every grid value.
  double best = -1.0, best_eta = 0.0;
  for (double eta : cfg.eta_grid) {
    const double acc = cross_validate(samples, table, eta, cfg);
    if (acc > best) best = acc, best_eta = eta;
  }
  CHECK(sel.eta == best_eta);
  const double at_min = cross_validate(samples, table, 0.001, cfg);
  CHECK(best > at_min);
  CHECK(sel.eta > 0.001);
}

TEST_CASE("select_eta needs enough samples per label") {
  const auto p = testing::toy_problem(1, 2, 10, 4);
  BootstrapConfig cfg = small_config();
  cfg.eta_grid = {1.0, 2.0};
  CHECK_THROWS_AS(select_eta(p.samples, p.table, cfg), DataError);
}

TEST_CASE("model response equals the kernel expansion") {
  const auto p = testing::toy_problem(6, 10, 30, 6);
  const KernelParams kp{0.8, DistanceMode::euclidean};
  const auto m = train_svm(p.samples, p.table, kp, SmoConfig{});
  CHECK_NOTHROW(m.validate());
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const auto x = testing::random_feature(rng, 6);
    const std::size_t i = rng.index(10);
    const TrainingTuple probe{x, i, 1};
    double expect = m.bias;
    for (std::size_t s = 0; s < m.support.size(); ++s) {
      expect += m.signed_weights[s] * train_kernel(m.support[s], probe, p.table, kp);
    }
    CHECK(m.response(x, i) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("bootstrap converges at once on an easy pool") {
  const auto p = testing::toy_problem(7, 10, 0, 8);
  const auto pool = distractor_pool(p, 60, 0, 2);
  const auto r = bootstrap_train(foregrounds_of(p), pool, small_config());
  CHECK(r.model.rounds_run == 1);
  CHECK(r.model.converged);
  CHECK(r.rounds.size() == 1);
}

TEST_CASE("bootstrap mines distractors until the pool is clean") {
  const auto p = testing::toy_problem(8, 12, 0, 10);
  const auto pool = distractor_pool(p, 40, 200, 5);
  BootstrapConfig cfg = small_config();
  cfg.initial_negatives = 40;  // the easy part only
  cfg.per_round_fp_cap = 30;
  cfg.max_rounds = 20;
  const auto r = bootstrap_train(foregrounds_of(p), pool, cfg);
  REQUIRE(r.rounds.size() >= 2);
  CHECK(r.rounds[1].negatives > r.rounds[0].negatives);
  for (std::size_t k = 1; k < r.rounds.size(); ++k) CHECK(r.rounds[k].negatives >= r.rounds[k - 1].negatives);
  CHECK(r.model.rounds_run <= cfg.max_rounds);
  for (const auto& rs : r.rounds) CHECK(rs.added <= cfg.per_round_fp_cap);
  REQUIRE(r.model.converged);
  for (const auto& t : r.pool) CHECK(r.model.response(t.x, t.fg_index) <= 1e-9);

  for (const auto& s : r.model.support) {
    CHECK(std::find(r.training_set.begin(), r.training_set.end(), s) != r.training_set.end());
    if (s.label == 1) CHECK(s.x == r.model.fg_table[s.fg_index].x);
  }

  const auto again = bootstrap_train(foregrounds_of(p), pool, cfg);
  CHECK(again.model.signed_weights == r.model.signed_weights);
  CHECK(again.model.bias == r.model.bias);
  CHECK(again.model.support == r.model.support);
}

TEST_CASE("bootstrap in max-over-indices mode") {
  const auto p = testing::toy_problem(8, 12, 0, 10);
  const auto pool = distractor_pool(p, 40, 120, 6);
  BootstrapConfig cfg = small_config();
  cfg.initial_negatives = 40;
  cfg.mining = MiningMode::max_over_indices;
  cfg.max_rounds = 20;
  const auto r = bootstrap_train(foregrounds_of(p), pool, cfg);
  REQUIRE(r.model.converged);
  for (const auto& t : r.pool) {
    for (std::size_t i = 0; i < p.table.size(); ++i) CHECK(r.model.response(t.x, i) <= 1e-9);
  }
}

TEST_CASE("bootstrap with cross-validated eta records the choice") {
  const auto p = testing::toy_problem(10, 12, 0, 8);
  const auto pool = distractor_pool(p, 60, 30, 7);
  BootstrapConfig cfg = small_config();
  cfg.eta_grid = {0.25, 1.0};
  const auto r = bootstrap_train(foregrounds_of(p), pool, cfg);
  CHECK(r.rounds.front().cv_accuracy >= 0.0);
  CHECK(r.model.kernel.eta == r.rounds.back().eta);
}

TEST_CASE("bootstrap errors") {
  const auto p = testing::toy_problem(1, 4, 0, 4);
  CHECK_THROWS_AS(bootstrap_train({}, {{0.0, 0.0, 0.0, 0.0}}, small_config()), DataError);
  CHECK_THROWS_AS(bootstrap_train(foregrounds_of(p), {}, small_config()), DataError);
  BootstrapConfig bad = small_config();
  bad.eta_grid.clear();
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = small_config();
  bad.cv_folds = 1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = small_config();
  bad.max_rounds = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK(parse_mining_mode("max_over_indices") == MiningMode::max_over_indices);
  CHECK_THROWS_AS(parse_mining_mode("any"), ConfigError);
}
