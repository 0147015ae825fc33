#include <doctest.h>

#include <cmath>

#include "mkdet/error.hpp"
#include "mkdet/kernel.hpp"
#include "mkdet/svm.hpp"
#include "test_support.hpp"

using namespace mkdet;

namespace {

struct PointSet {
  std::vector<std::vector<double>> x;
  std::vector<int> y;

  IndexKernel linear() const {
    return [this](std::size_t a, std::size_t b) { return dot(x[a], x[b]); };
  }
};

PointSet blobs(std::uint64_t seed, std::size_t n, double separation) {
  Rng rng(seed);
  PointSet p;
  for (std::size_t k = 0; k < n; ++k) {
    const int y = k % 2 == 0 ? 1 : -1;
    p.x.push_back({rng.normal() + y * separation, rng.normal() + y * separation, rng.normal()});
    p.y.push_back(y);
  }
  return p;
}

double decision_value(const PointSet& p, const DualSolution& sol, const std::vector<double>& probe) {
  double s = sol.bias;
  for (std::size_t k : sol.sv_indices) s += sol.signed_weight(k) * dot(p.x[k], probe);
  return s;
}

}  // namespace

TEST_CASE("two symmetric points: analytic solution") {
  PointSet p{{{1.0, 1.0}, {-1.0, -1.0}}, {1, -1}};
  const auto sol = smo_train(p.y, p.linear(), SmoConfig{});
  CHECK(sol.converged);
  CHECK(sol.alphas[0] == doctest::Approx(0.25).epsilon(1e-3));
  CHECK(sol.alphas[1] == doctest::Approx(0.25).epsilon(1e-3));
  std::vector<double> w(2, 0.0);
  for (std::size_t k = 0; k < 2; ++k) {
    for (std::size_t j = 0; j < 2; ++j) w[j] += sol.signed_weight(k) * p.x[k][j];
  }
  CHECK(std::abs(w[0] - 0.5) <= 1e-3);
  CHECK(std::abs(w[1] - 0.5) <= 1e-3);
  CHECK(std::abs(sol.bias) <= 1e-3);
}

TEST_CASE("KKT, feasibility and monotone objective on toy sets") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    for (double sep : {2.0, 0.3}) {
      for (bool bias : {true, false}) {
        const auto p = blobs(seed, 40, sep);
        SmoConfig cfg;
        cfg.C = 1.0;
        cfg.fit_bias = bias;
        cfg.seed = seed;
        SmoTrace trace;
        const auto sol = smo_train(p.y, p.linear(), cfg, &trace);
        CHECK(sol.converged);
        CHECK(max_kkt_violation(sol, p.linear()) <= cfg.kkt_tol);
        CHECK(trace.box_feasible);
        for (std::size_t k = 1; k < trace.objective.size(); ++k) {
          CHECK(trace.objective[k] >= trace.objective[k - 1] - 1e-12);
        }
        if (bias) {
          for (double r : trace.equality_residual) CHECK(r <= 1e-9);
        }
        for (double a : sol.alphas) CHECK((a >= 0.0 && a <= cfg.C));
      }
    }
  }
}

TEST_CASE("XOR is separable with a quadratic kernel") {
  PointSet p{{{1, 1}, {-1, -1}, {1, -1}, {-1, 1}}, {1, 1, -1, -1}};
  const IndexKernel quad = [&](std::size_t a, std::size_t b) {
    const double d = dot(p.x[a], p.x[b]) + 1.0;
    return d * d;
  };
  const auto sol = smo_train(p.y, quad, SmoConfig{});
  CHECK(sol.converged);
  for (std::size_t t = 0; t < 4; ++t) {
    double f = sol.bias;
    for (std::size_t s : sol.sv_indices) f += sol.signed_weight(s) * quad(s, t);
    CHECK(f * p.y[t] >= 1.0 - 1e-3);
  }
}

TEST_CASE("zero-alpha samples do not matter") {
  const auto p = blobs(9, 60, 1.5);
  const auto sol = smo_train(p.y, p.linear(), SmoConfig{});
  REQUIRE(sol.sv_indices.size() < 60);
  PointSet reduced;
  for (std::size_t k : sol.sv_indices) {
    reduced.x.push_back(p.x[k]);
    reduced.y.push_back(p.y[k]);
  }
  Rng rng(1);
  for (int t = 0; t < 100; ++t) {
    const auto probe = testing::random_vector(rng, 3, -3.0, 3.0);
    double full = sol.bias, part = sol.bias;
    for (std::size_t k = 0; k < 60; ++k) full += sol.signed_weight(k) * dot(p.x[k], probe);
    for (std::size_t r = 0; r < sol.sv_indices.size(); ++r) {
      part += sol.signed_weight(sol.sv_indices[r]) * dot(reduced.x[r], probe);
    }
    CHECK(std::abs(full - part) <= 1e-12);
    CHECK(decision_value(p, sol, probe) == full);
  }
}

TEST_CASE("training is deterministic per seed") {
  const auto p = blobs(4, 50, 0.5);
  SmoConfig cfg;
  cfg.seed = 12;
  const auto a = smo_train(p.y, p.linear(), cfg);
  const auto b = smo_train(p.y, p.linear(), cfg);
  CHECK(a.alphas == b.alphas);
  CHECK(a.bias == b.bias);
}

TEST_CASE("decision template") {
  const auto p = blobs(6, 30, 2.0);
  const auto sol = smo_train(p.y, p.linear(), SmoConfig{});
  const std::span<const std::vector<double>> xs(p.x);
  for (std::size_t t = 0; t < 30; ++t) {
    const double f = decision(xs, sol, [](const auto& a, const auto& b) { return dot(a, b); }, p.x[t]);
    CHECK(f == doctest::Approx(decision_value(p, sol, p.x[t])));
    CHECK(f * p.y[t] > 0.0);
  }
}

TEST_CASE("solver errors and iteration cap") {
  PointSet one{{{1.0}, {2.0}}, {1, 1}};
  CHECK_THROWS_AS(smo_train(one.y, one.linear(), SmoConfig{}), DataError);
  PointSet bad{{{1.0}, {2.0}}, {1, 0}};
  CHECK_THROWS_AS(smo_train(bad.y, bad.linear(), SmoConfig{}), DataError);
  SmoConfig c;
  c.C = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);

  const auto p = blobs(2, 80, 0.1);
  SmoConfig capped;
  capped.max_passes = 1;
  capped.kkt_tol = 1e-6;
  capped.C = 100.0;
  const auto sol = smo_train(p.y, p.linear(), capped);
  CHECK(!sol.converged);
  CHECK(sol.iterations == 80);
}

TEST_CASE("analytic case: decision values") {
  PointSet p{{{1.0, 1.0}, {-1.0, -1.0}}, {1, -1}};
  const auto sol = smo_train(p.y, p.linear(), SmoConfig{});
  CHECK(decision_value(p, sol, {1.0, 1.0}) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(std::abs(decision_value(p, sol, {0.0, 0.0})) <= 1e-3);
}

TEST_CASE("conflicting duplicates sit at the box bound") {
  PointSet p{{{0.5, 2.0}, {0.5, 2.0}}, {1, -1}};
  SmoConfig cfg;
  cfg.C = 1.0;
  const auto sol = smo_train(p.y, p.linear(), cfg);
  CHECK(sol.alphas[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sol.alphas[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(sol.alphas[0] - sol.alphas[1]) <= 1e-9 * cfg.C);
}

TEST_CASE("XOR with an exponential kernel") {
  PointSet p{{{0, 0}, {1, 1}, {0, 1}, {1, 0}}, {1, 1, -1, -1}};
  const KernelParams kp{1.0, DistanceMode::euclidean};
  const IndexKernel k = [&](std::size_t a, std::size_t b) { return k_theta(p.x[a], p.x[b], kp); };
  SmoConfig cfg;
  cfg.C = 10.0;
  const auto sol = smo_train(p.y, k, cfg);
  CHECK(sol.converged);
  for (std::size_t t = 0; t < 4; ++t) {
    double f = sol.bias;
    for (std::size_t s : sol.sv_indices) f += sol.signed_weight(s) * k(s, t);
    CHECK(f * p.y[t] > 0.0);
  }
}
