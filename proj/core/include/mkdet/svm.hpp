#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace mkdet {

struct SmoConfig {
  double C = 10.0;
  double kkt_tol = 1e-3;
  std::size_t max_passes = 1000;  // iteration cap is max_passes * n
  std::uint64_t seed = 0;        // permutes the scan order, i.e. tie-breaking
  bool fit_bias = true;

  void validate() const;
};

/// Kernel over training-sample indices.
using IndexKernel = std::function<double(std::size_t, std::size_t)>;

struct DualSolution {
  std::vector<double> alphas;  // unsigned, 0 <= alpha <= C
  std::vector<int> labels;     // +1 / -1, copied from the input
  double C = 0.0;
  double bias = 0.0;
  std::vector<std::size_t> sv_indices;  // alpha > 0, ascending
  std::size_t iterations = 0;
  bool converged = false;
  double max_violation = 0.0;  // final max KKT gap

  /// y_s * alpha_s, the label-signed weight.
  double signed_weight(std::size_t s) const { return labels[s] * alphas[s]; }
};

/// Per-update audit trail; filled only when a trace is passed to smo_train.
struct SmoTrace {
  std::vector<double> objective;          // dual objective after each update, recomputed from scratch
  std::vector<double> equality_residual;  // |sum alpha_i y_i| after each update
  bool box_feasible = true;               // 0 <= alpha <= C held after every update
};

/// Soft-margin SVM dual by sequential minimal optimization.
///
/// Each step takes the most violating variable, pairs it with the partner
/// giving the largest second-order objective gain, and solves the
/// two-variable subproblem in closed form. Stops when the KKT gap
/// falls below kkt_tol; hitting the iteration cap returns a feasible solution
/// with converged = false. With fit_bias = false the equality constraint is
/// dropped and the single coordinate with the largest gain is updated instead.
DualSolution smo_train(std::span<const int> labels, const IndexKernel& kernel, const SmoConfig& cfg,
                       SmoTrace* trace = nullptr);

/// sum_i alpha_i - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij, evaluated directly.
double dual_objective(std::span<const int> labels, std::span<const double> alphas, const IndexKernel& kernel);

/// Largest per-sample KKT violation of `sol` measured on the margin y f(x).
double max_kkt_violation(const DualSolution& sol, const IndexKernel& kernel);

/// sum over support vectors of y_s alpha_s K(sample_s, t) + bias.
template <class Sample, class Kernel>
double decision(std::span<const Sample> samples, const DualSolution& sol, Kernel&& kernel, const Sample& t) {
  double s = 0.0;
  for (std::size_t idx : sol.sv_indices) s += sol.signed_weight(idx) * kernel(samples[idx], t);
  return s + sol.bias;
}

}  // namespace mkdet
