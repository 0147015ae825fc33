#include "mkdet/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mkdet/error.hpp"
#include "mkdet/rng.hpp"

namespace mkdet {

void SmoConfig::validate() const {
  if (!(C > 0)) throw ConfigError("svm: C must be positive");
  if (!(kkt_tol > 0 && kkt_tol <= 0.1)) throw ConfigError("svm: kkt_tol must lie in (0, 0.1]");
  if (max_passes < 1) throw ConfigError("svm: max_passes must be >= 1");
}

double dual_objective(std::span<const int> labels, std::span<const double> alphas, const IndexKernel& kernel) {
  const std::size_t n = labels.size();
  double linear = 0.0;
  double quad = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    linear += alphas[a];
    if (alphas[a] == 0.0) continue;
    for (std::size_t b = 0; b < n; ++b) {
      if (alphas[b] == 0.0) continue;
      quad += alphas[a] * alphas[b] * labels[a] * labels[b] * kernel(a, b);
    }
  }
  return linear - 0.5 * quad;
}

DualSolution smo_train(std::span<const int> labels, const IndexKernel& kernel, const SmoConfig& cfg,
                       SmoTrace* trace) {
  cfg.validate();
  const std::size_t n = labels.size();
  bool has_pos = false, has_neg = false;
  for (int y : labels) {
    if (y != 1 && y != -1) throw DataError("svm: labels must be +1 or -1");
    (y > 0 ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg) throw DataError("svm: training set holds a single class");

  // Work in z_k = y_k alpha_k, boxed in [lo_k, hi_k]. f_k = y_k - (K z)_k
  // is the (negated) margin residual; optimality means f is flat over the
  // free variables.
  std::vector<double> z(n, 0.0), lo(n), hi(n), f(n), diag(n);
  for (std::size_t k = 0; k < n; ++k) {
    lo[k] = labels[k] > 0 ? 0.0 : -cfg.C;
    hi[k] = labels[k] > 0 ? cfg.C : 0.0;
    f[k] = labels[k];
    diag[k] = kernel(k, k);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(cfg.seed);
  rng.shuffle(order);

  auto record = [&] {
    if (!trace) return;
    std::vector<double> alphas(n);
    double residual = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      alphas[k] = labels[k] * z[k];
      residual += z[k];
      if (alphas[k] < 0.0 || alphas[k] > cfg.C) trace->box_feasible = false;
    }
    trace->objective.push_back(dual_objective(labels, alphas, kernel));
    trace->equality_residual.push_back(std::abs(residual));
  };

  DualSolution sol;
  const std::size_t max_iter = cfg.max_passes * std::max<std::size_t>(n, 1);
  constexpr double kInf = std::numeric_limits<double>::infinity();
  double up_max = 0.0, low_min = 0.0;

  for (sol.iterations = 0; sol.iterations < max_iter; ++sol.iterations) {
    if (cfg.fit_bias) {
      // i: steepest ascent direction; j: second-order choice among the
      // violators paired with i.
      std::size_t i = n, j = n;
      up_max = -kInf;
      low_min = kInf;
      for (std::size_t k : order) {
        if (z[k] < hi[k] && f[k] > up_max) up_max = f[k], i = k;
        if (z[k] > lo[k] && f[k] < low_min) low_min = f[k];
      }
      sol.max_violation = (i == n || std::isinf(low_min)) ? 0.0 : std::max(0.0, up_max - low_min);
      if (i == n || std::isinf(low_min) || up_max - low_min < cfg.kkt_tol) {
        sol.converged = true;
        break;
      }
      double best_gain = -kInf;
      for (std::size_t k : order) {
        if (!(z[k] > lo[k]) || !(f[k] < up_max)) continue;
        const double b = up_max - f[k];
        const double a = std::max(diag[i] + diag[k] - 2.0 * kernel(i, k), 1e-12);
        const double gain = b * b / a;
        if (gain > best_gain) best_gain = gain, j = k;
      }
      const double kij = kernel(i, j);
      const double curvature = std::max(diag[i] + diag[j] - 2.0 * kij, 1e-12);
      const double step = std::min({hi[i] - z[i], z[j] - lo[j], (f[i] - f[j]) / curvature});
      z[i] = std::min(z[i] + step, hi[i]);
      z[j] = std::max(z[j] - step, lo[j]);
      for (std::size_t k = 0; k < n; ++k) f[k] -= step * (kernel(k, i) - kernel(k, j));
    } else {
      // Coordinate with the largest objective gain from a clipped Newton step.
      std::size_t best = n;
      double worst = 0.0, best_gain = 0.0;
      for (std::size_t k : order) {
        const double v = (f[k] > 0 && z[k] < hi[k]) || (f[k] < 0 && z[k] > lo[k]) ? std::abs(f[k]) : 0.0;
        worst = std::max(worst, v);
        if (v == 0.0) continue;
        const double step = std::clamp(z[k] + f[k] / std::max(diag[k], 1e-12), lo[k], hi[k]) - z[k];
        const double gain = step * f[k] - 0.5 * step * step * diag[k];
        if (gain > best_gain) best_gain = gain, best = k;
      }
      sol.max_violation = worst;
      if (best == n || worst < cfg.kkt_tol) {
        sol.converged = true;
        break;
      }
      const double target = std::clamp(z[best] + f[best] / std::max(diag[best], 1e-12), lo[best], hi[best]);
      const double step = target - z[best];
      z[best] = target;
      for (std::size_t k = 0; k < n; ++k) f[k] -= step * kernel(k, best);
    }
    record();
  }

  sol.labels.assign(labels.begin(), labels.end());
  sol.C = cfg.C;
  sol.alphas.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    sol.alphas[k] = labels[k] * z[k];
    if (sol.alphas[k] > 0.0) sol.sv_indices.push_back(k);
  }

  if (cfg.fit_bias) {
    double sum = 0.0;
    std::size_t free = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (z[k] > lo[k] && z[k] < hi[k]) {
        sum += f[k];
        ++free;
      }
    }
    if (free > 0) {
      sol.bias = sum / static_cast<double>(free);
    } else {
      // No free support vector: any bias in the feasible interval is optimal.
      double up = -kInf, low = kInf;
      for (std::size_t k = 0; k < n; ++k) {
        if (z[k] < hi[k]) up = std::max(up, f[k]);
        if (z[k] > lo[k]) low = std::min(low, f[k]);
      }
      if (std::isinf(up)) up = low;
      if (std::isinf(low)) low = up;
      sol.bias = 0.5 * (up + low);
    }
  }
  return sol;
}

double max_kkt_violation(const DualSolution& sol, const IndexKernel& kernel) {
  const std::size_t n = sol.labels.size();
  double worst = 0.0;
  const double tiny = 1e-12 * std::max(1.0, sol.C);
  for (std::size_t k = 0; k < n; ++k) {
    double fx = sol.bias;
    for (std::size_t s : sol.sv_indices) fx += sol.signed_weight(s) * kernel(s, k);
    const double margin = sol.labels[k] * fx;
    const double a = sol.alphas[k];
    double v = 0.0;
    if (a <= tiny) {
      v = std::max(0.0, 1.0 - margin);
    } else if (a >= sol.C - tiny) {
      v = std::max(0.0, margin - 1.0);
    } else {
      v = std::abs(margin - 1.0);
    }
    worst = std::max(worst, v);
  }
  return worst;
}

}  // namespace mkdet
