#pragma once

#include <Eigen/Dense>

#include "mmsrc/model.hpp"
#include "mmsrc/solver.hpp"

namespace mmsrc::oracle {

// Slow reference implementations used by tests and acceptance runs. They
// share no code with the production prox/solver paths: penalties,
// gradients, and objectives are evaluated locally, and minimization uses
// subgradient descent plus a smoothed-objective Newton refinement instead
// of closed-form thresholding.

/// Numerically minimizes  sum_g w_g ||u_g||_2 + (1/(2 beta)) ||u - v||_2^2
/// by restarted diminishing-step (c/sqrt(k)) subgradient descent from
/// u = v with best-iterate tracking, then refines the best iterate by
/// damped Newton on a smoothed surrogate (group norms replaced by
/// sqrt(||.||^2 + eps^2) - eps with eps driven to 1e-11). Deterministic;
/// desk-scale only (dimension <= 6).
Eigen::VectorXd prox_numeric(const Eigen::VectorXd& v, const TreeGroupStructure& tree,
                             double beta, long iterations = 200000);

/// Objective of the prox problem above, evaluated independently.
double prox_objective(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                      const TreeGroupStructure& tree, double beta);

struct SubgradientResult {
  CoefficientMatrix coefficients;
  double objective = 0.0;
};

/// Minimizes the full nonsmooth objective (reconstruction error plus
/// lambda times the prior's penalty) by the same restarted subgradient
/// plus smoothed-Newton scheme. Desk-scale only (N <= 30, S <= 4).
/// Throws DataError when the refinement exhausts its budget without
/// stabilizing.
SubgradientResult solve_subgradient(const MultimodalDictionary& dict,
                                    const MultimodalSample& sample,
                                    const SparsityPrior& prior, long iterations);

/// Grid search for the possibilistic weight subproblem: minimizes
/// (mu^m r + lambda |1 - mu|^m) / 2 over mu in [0, 1.5] with step 1e-4.
double weight_grid_search(double residual, double lambda_mu, double m);

}  // namespace mmsrc::oracle
