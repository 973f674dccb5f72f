#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "mmsrc/model.hpp"

namespace mmsrc {

/// Sparsity penalty attached to the reconstruction objective.
/// L1PerModality decouples the modalities, Joint ties them through row
/// l2 norms, Tree penalizes a laminar family of modality groups per row.
struct SparsityPrior {
  enum class Kind { L1PerModality, Joint, Tree };

  Kind kind = Kind::Joint;
  double lambda = 1.0;
  std::optional<TreeGroupStructure> tree;

  static SparsityPrior l1_per_modality(double lambda);
  static SparsityPrior joint(double lambda);
  static SparsityPrior tree_structured(double lambda, TreeGroupStructure tree);

  /// Penalty value without the lambda factor.
  double penalty_value(const CoefficientMatrix& A) const;

  /// prox of beta * penalty (beta already contains lambda and the step).
  CoefficientMatrix apply_prox(const CoefficientMatrix& V, double beta) const;
};

struct SolveIteration {
  int k = 0;
  double step = 0.0;
  const CoefficientMatrix& extrapolated;  // B^{k+1}
  const CoefficientMatrix& iterate;       // A^{k+1}
  double objective = 0.0;
};

struct SolverSettings {
  enum class StepRule { Fixed, Backtracking };

  int max_iterations = 500;
  double tolerance = 1e-8;  // relative objective change
  StepRule step_rule = StepRule::Fixed;
  // <= 0 selects a default: 1/L for Fixed, 1.0 for Backtracking.
  double step = 0.0;
  double backtrack_shrink = 0.5;
  // Optional per-iteration hook, used by diagnostics and tests.
  std::function<void(const SolveIteration&)> observer;
};

struct SolveResult {
  CoefficientMatrix coefficients;
  double objective = 0.0;
  int iterations = 0;
  std::vector<double> trace;  // objective after each iteration
};

/// Weighted objective  sum_s w_s/2 ||y^s - X^s a^s||^2 + lambda * penalty.
/// modality_weights == nullptr means w_s = 1 for all s; quality-weighted
/// callers pass mu^m.
double objective(const CoefficientMatrix& A, const MultimodalDictionary& dict,
                 const MultimodalSample& sample, const SparsityPrior& prior,
                 const Eigen::VectorXd* modality_weights = nullptr);

/// Gradient of the smooth part: column s is -w_s (X^s)^T (y^s - X^s a^s).
CoefficientMatrix grad_f(const CoefficientMatrix& A, const MultimodalDictionary& dict,
                         const MultimodalSample& sample,
                         const Eigen::VectorXd* modality_weights = nullptr);

/// 1/L with L = max_s w_s sigma_max(X^s)^2, sigma_max estimated by power
/// iteration (50 iterations, tolerance 1e-10).
double lipschitz_step(const MultimodalDictionary& dict,
                      const Eigen::VectorXd* modality_weights = nullptr);

/// Accelerated proximal gradient (FISTA-style, extrapolation k/(k+3)):
///   B^{k+1} = A^k + rho_k (A^k - A^{k-1})
///   A^{k+1} = prox_{lambda t Psi}(B^{k+1} - t grad f(B^{k+1}))
/// Stops when the relative objective change stays below the tolerance for
/// 5 consecutive iterations. Returns the best iterate encountered
/// (including the initial point), so the result never exceeds the
/// objective of the initial coefficients. Throws DataError when the
/// objective turns non-finite (divergent step size).
SolveResult solve(const MultimodalDictionary& dict, const MultimodalSample& sample,
                  const SparsityPrior& prior, const SolverSettings& settings,
                  const Eigen::VectorXd* modality_weights = nullptr,
                  const CoefficientMatrix* initial = nullptr);

}  // namespace mmsrc
