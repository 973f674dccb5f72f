#pragma once

#include <Eigen/Dense>

#include "mmsrc/model.hpp"

namespace mmsrc {

/// sign(x) * max(|x| - tau, 0)
double soft_threshold_scalar(double x, double tau);

/// v * max(0, 1 - tau/||v||); the zero vector when ||v|| <= tau, and v
/// unchanged when tau == 0.
Eigen::VectorXd group_soft_threshold(const Eigen::VectorXd& v, double tau);

/// One proximal step for the tree-structured penalty: minimize
///   sum_g w_g ||u_jg||_2 + (1/(2 beta)) ||u_j - v_j||_2^2
/// independently over every row j of the input matrix.
struct ProxProblem {
  Eigen::MatrixXd input;  // N x S
  TreeGroupStructure tree;
  double beta = 1.0;
};

/// Exact minimizer of the tree prox problem, one pass over the groups in
/// children-before-parents order per row (the dual one-pass scheme, which
/// coincides with sequential group soft-thresholding for laminar groups).
Eigen::MatrixXd prox_tree(const ProxProblem& problem);
Eigen::MatrixXd prox_tree(const Eigen::MatrixXd& input, const TreeGroupStructure& tree,
                          double beta);

/// Row-wise group soft-threshold: the prox of tau * sum_j ||row_j||_2.
/// Equals prox_tree with a single root group of weight 1 and beta = tau.
Eigen::MatrixXd prox_joint(const Eigen::MatrixXd& input, double tau);

/// Dual norm of the l1/l2 row penalty: max over rows of the row l2 norm.
/// Zero is the solution of the penalized problem iff this value of the
/// gradient at zero is at most lambda.
double dual_norm_joint(const Eigen::MatrixXd& gradient);

}  // namespace mmsrc
