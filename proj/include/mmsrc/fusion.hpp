#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "mmsrc/model.hpp"
#include "mmsrc/solver.hpp"

namespace mmsrc {

/// Possibilistic modality reliabilities: each mu^s in (0,1] is assigned
/// independently (no sum-to-one constraint), with per-modality
/// regularizers lambda_mu and fuzzifier exponent m.
struct QualityWeights {
  Eigen::VectorXd mu;
  Eigen::VectorXd lambda_mu;
  double fuzzifier = 2.0;

  /// Effective reconstruction weights w_s = mu_s^m.
  Eigen::VectorXd effective() const;
};

struct FusionSettings {
  int alternations = 10;    // T
  double fuzzifier = 2.0;   // m > 1
  SolverSettings inner;
  // Overrides for sensitivity studies; defaults follow the residual-based
  // initialization, which starts every mu at 0.5.
  std::optional<Eigen::VectorXd> lambda_mu_override;
  std::optional<Eigen::VectorXd> initial_mu_override;
};

struct FusionResult {
  CoefficientMatrix coefficients;
  QualityWeights weights;
  std::vector<double> trace;  // composite objective, entry 0 before the first A-step
};

/// Squared unweighted residual per modality: ||y^s - X^s a^s||^2.
Eigen::VectorXd modality_residuals(const CoefficientMatrix& A,
                                   const MultimodalDictionary& dict,
                                   const MultimodalSample& sample);

/// lambda_mu^s = residual_s from the initial unweighted solve, clamped
/// below at 1e-12 so a perfect fit degenerates to mu = 1.
Eigen::VectorXd init_regularizers(const Eigen::VectorXd& residuals);

/// Closed-form weight update mu_s = 1 / (1 + (r_s/lambda_s)^(1/(m-1))).
Eigen::VectorXd update_weights(const Eigen::VectorXd& residuals,
                               const Eigen::VectorXd& lambda_mu, double m);

/// Composite objective minimized by the alternation:
///   sum_s mu_s^m r_s(A)/2 + lambda*Psi(A) + sum_s (lambda_mu_s/2)(1-mu_s)^m.
/// Both alternating steps are exact minimizers of this quantity, so the
/// per-alternation trace is non-increasing.
double composite_objective(const CoefficientMatrix& A, const MultimodalDictionary& dict,
                           const MultimodalSample& sample, const SparsityPrior& prior,
                           const QualityWeights& weights);

/// Quality-based fusion by alternating minimization: an unweighted solve
/// fixes lambda_mu, then T alternations of the closed-form weight update
/// followed by a weighted solve warm-started from the previous
/// coefficients.
FusionResult solve_weighted(const MultimodalDictionary& dict, const MultimodalSample& sample,
                            const SparsityPrior& prior, const FusionSettings& settings);

}  // namespace mmsrc
