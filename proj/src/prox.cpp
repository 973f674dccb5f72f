#include "mmsrc/prox.hpp"

#include <cmath>

namespace mmsrc {

double soft_threshold_scalar(double x, double tau) {
  if (tau < 0) throw ConfigError("threshold must be non-negative");
  if (x > tau) return x - tau;
  if (x < -tau) return x + tau;
  return 0.0;
}

Eigen::VectorXd group_soft_threshold(const Eigen::VectorXd& v, double tau) {
  if (tau < 0) throw ConfigError("threshold must be non-negative");
  if (tau == 0.0) return v;
  const double nrm = v.norm();
  if (nrm <= tau) return Eigen::VectorXd::Zero(v.size());
  return v * (1.0 - tau / nrm);
}

Eigen::MatrixXd prox_tree(const ProxProblem& problem) {
  return prox_tree(problem.input, problem.tree, problem.beta);
}

Eigen::MatrixXd prox_tree(const Eigen::MatrixXd& input, const TreeGroupStructure& tree,
                          double beta) {
  if (!(beta > 0.0)) throw ConfigError("prox scale must be positive");
  if (tree.modalities != input.cols())
    throw ConfigError("tree modality count does not match input columns");

  Eigen::MatrixXd out = input;
  Eigen::VectorXd buf;
  for (Eigen::Index j = 0; j < out.rows(); ++j) {
    // Each group projects the running residual restricted to its members
    // onto the ball of radius beta*w; subtracting the projections in
    // children-before-parents order leaves the exact row minimizer.
    for (const auto& g : tree.groups) {
      const int sz = static_cast<int>(g.members.size());
      buf.resize(sz);
      for (int i = 0; i < sz; ++i) buf[i] = out(j, g.members[i]);
      buf = group_soft_threshold(buf, beta * g.weight);
      for (int i = 0; i < sz; ++i) out(j, g.members[i]) = buf[i];
    }
  }
  return out;
}

Eigen::MatrixXd prox_joint(const Eigen::MatrixXd& input, double tau) {
  if (tau < 0) throw ConfigError("threshold must be non-negative");
  Eigen::MatrixXd out(input.rows(), input.cols());
  for (Eigen::Index j = 0; j < input.rows(); ++j)
    out.row(j) = group_soft_threshold(input.row(j).transpose(), tau).transpose();
  return out;
}

double dual_norm_joint(const Eigen::MatrixXd& gradient) {
  double best = 0.0;
  for (Eigen::Index j = 0; j < gradient.rows(); ++j)
    best = std::max(best, gradient.row(j).norm());
  return best;
}

}  // namespace mmsrc
