#include "mmsrc/oracle.hpp"

#include <cmath>
#include <vector>

namespace mmsrc::oracle {

namespace {

// local penalty bookkeeping, deliberately separate from the solver path
std::vector<TreeGroup> penalty_groups(const SparsityPrior& prior, int modalities) {
  std::vector<TreeGroup> groups;
  switch (prior.kind) {
    case SparsityPrior::Kind::L1PerModality:
      for (int s = 0; s < modalities; ++s) groups.push_back({{s}, 1.0});
      break;
    case SparsityPrior::Kind::Joint: {
      TreeGroup root;
      for (int s = 0; s < modalities; ++s) root.members.push_back(s);
      root.weight = 1.0;
      groups.push_back(root);
      break;
    }
    case SparsityPrior::Kind::Tree:
      groups = prior.tree->groups;
      break;
  }
  return groups;
}

double group_norm(const Eigen::VectorXd& u, const TreeGroup& g) {
  double sq = 0.0;
  for (int i : g.members) sq += u[i] * u[i];
  return std::sqrt(sq);
}

constexpr double kSmoothingLadder[] = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6,
                                       1e-7, 1e-8, 1e-9, 1e-10, 1e-11};

}  // namespace

double prox_objective(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                      const TreeGroupStructure& tree, double beta) {
  double total = (u - v).squaredNorm() / (2.0 * beta);
  for (const auto& g : tree.groups) total += g.weight * group_norm(u, g);
  return total;
}

Eigen::VectorXd prox_numeric(const Eigen::VectorXd& v, const TreeGroupStructure& tree,
                             double beta, long iterations) {
  if (v.size() > 6) throw ConfigError("dimension too large for the numeric prox oracle");
  if (!(beta > 0)) throw ConfigError("prox scale must be positive");
  const int S = static_cast<int>(v.size());

  Eigen::VectorXd u = v, best = v, grad(S);
  double best_f = prox_objective(v, v, tree, beta);

  const int stages = 10;
  const long per_stage = std::max<long>(1, iterations / stages);
  double c = beta;
  for (int stage = 0; stage < stages; ++stage) {
    u = best;
    for (long k = 1; k <= per_stage; ++k) {
      grad = (u - v) / beta;
      for (const auto& g : tree.groups) {
        const double n = group_norm(u, g);
        if (n > 0)
          for (int i : g.members) grad[i] += g.weight * u[i] / n;
      }
      u -= (c / std::sqrt(static_cast<double>(k))) * grad;
      const double f = prox_objective(u, v, tree, beta);
      if (f < best_f) {
        best_f = f;
        best = u;
      }
    }
    c /= 3.0;
  }

  // smoothed-Newton refinement
  Eigen::VectorXd w = best;
  for (double eps : kSmoothingLadder) {
    auto smooth_obj = [&](const Eigen::VectorXd& x) {
      double total = (x - v).squaredNorm() / (2.0 * beta);
      for (const auto& g : tree.groups) {
        const double n = group_norm(x, g);
        total += g.weight * (std::sqrt(n * n + eps * eps) - eps);
      }
      return total;
    };
    double fw = smooth_obj(w);
    for (int it = 0; it < 60; ++it) {
      Eigen::VectorXd gvec = (w - v) / beta;
      Eigen::MatrixXd H = Eigen::MatrixXd::Identity(S, S) / beta;
      for (const auto& g : tree.groups) {
        const double n = group_norm(w, g);
        const double r = std::sqrt(n * n + eps * eps);
        for (int i : g.members) {
          gvec[i] += g.weight * w[i] / r;
          H(i, i) += g.weight / r;
          for (int i2 : g.members) H(i, i2) -= g.weight * w[i] * w[i2] / (r * r * r);
        }
      }
      if (gvec.norm() < 1e-14 * std::max(1.0, fw)) break;
      H.diagonal().array() += 1e-13;
      const Eigen::VectorXd d = H.ldlt().solve(gvec);
      double t = 1.0, fn = fw;
      Eigen::VectorXd wn = w;
      bool accepted = false;
      for (int tries = 0; tries < 60; ++tries) {
        wn = w - t * d;
        fn = smooth_obj(wn);
        if (fn <= fw) {
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      if (!accepted) break;
      const double progress = (fw - fn) / std::max(1.0, std::abs(fw));
      w = wn;
      fw = fn;
      if (progress < 1e-17 && it > 2) break;
    }
  }
  if (prox_objective(w, v, tree, beta) < best_f) best = w;
  return best;
}

namespace {

double oracle_objective(const CoefficientMatrix& A, const MultimodalDictionary& dict,
                        const MultimodalSample& y, double lambda,
                        const std::vector<TreeGroup>& groups) {
  double total = 0.0;
  for (int s = 0; s < dict.modalities(); ++s)
    total += 0.5 * (y[s] - dict.features[s] * A.col(s)).squaredNorm();
  for (Eigen::Index j = 0; j < A.rows(); ++j)
    for (const auto& g : groups) {
      double sq = 0.0;
      for (int i : g.members) sq += A(j, i) * A(j, i);
      total += lambda * g.weight * std::sqrt(sq);
    }
  return total;
}

CoefficientMatrix oracle_subgradient(const CoefficientMatrix& A,
                                     const MultimodalDictionary& dict,
                                     const MultimodalSample& y, double lambda,
                                     const std::vector<TreeGroup>& groups) {
  CoefficientMatrix G(A.rows(), A.cols());
  for (int s = 0; s < dict.modalities(); ++s)
    G.col(s) = -dict.features[s].transpose() * (y[s] - dict.features[s] * A.col(s));
  for (Eigen::Index j = 0; j < A.rows(); ++j)
    for (const auto& g : groups) {
      double sq = 0.0;
      for (int i : g.members) sq += A(j, i) * A(j, i);
      const double n = std::sqrt(sq);
      if (n > 0)
        for (int i : g.members) G(j, i) += lambda * g.weight * A(j, i) / n;
    }
  return G;
}

// damped Newton on the eps-smoothed composite objective; returns false if
// the iteration cap was hit while still moving (caller treats that as a
// failure to stabilize)
bool smoothed_newton(CoefficientMatrix& W, const MultimodalDictionary& dict,
                     const MultimodalSample& y, double lambda,
                     const std::vector<TreeGroup>& groups) {
  const int N = static_cast<int>(W.rows());
  const int S = static_cast<int>(W.cols());
  const int D = N * S;
  std::vector<Eigen::MatrixXd> gram;
  for (int s = 0; s < S; ++s)
    gram.push_back(dict.features[s].transpose() * dict.features[s]);
  const auto flat = [N](Eigen::Index j, int s) { return s * N + j; };

  bool settled = true;
  for (double eps : kSmoothingLadder) {
    auto smooth_obj = [&](const CoefficientMatrix& A) {
      double total = 0.0;
      for (int s = 0; s < S; ++s)
        total += 0.5 * (y[s] - dict.features[s] * A.col(s)).squaredNorm();
      for (Eigen::Index j = 0; j < A.rows(); ++j)
        for (const auto& g : groups) {
          double sq = 0.0;
          for (int i : g.members) sq += A(j, i) * A(j, i);
          total += lambda * g.weight * (std::sqrt(sq + eps * eps) - eps);
        }
      return total;
    };
    double fw = smooth_obj(W);
    settled = false;
    for (int it = 0; it < 80; ++it) {
      CoefficientMatrix Gm(N, S);
      for (int s = 0; s < S; ++s)
        Gm.col(s) = -dict.features[s].transpose() * (y[s] - dict.features[s] * W.col(s));
      Eigen::MatrixXd H = Eigen::MatrixXd::Zero(D, D);
      for (int s = 0; s < S; ++s)
        for (int a = 0; a < N; ++a)
          for (int b = 0; b < N; ++b) H(flat(a, s), flat(b, s)) = gram[s](a, b);
      for (int j = 0; j < N; ++j)
        for (const auto& g : groups) {
          double sq = 0.0;
          for (int i : g.members) sq += W(j, i) * W(j, i);
          const double r = std::sqrt(sq + eps * eps);
          const double w = lambda * g.weight;
          for (int i : g.members) {
            Gm(j, i) += w * W(j, i) / r;
            H(flat(j, i), flat(j, i)) += w / r;
            for (int i2 : g.members)
              H(flat(j, i), flat(j, i2)) -= w * W(j, i) * W(j, i2) / (r * r * r);
          }
        }
      Eigen::VectorXd gv(D);
      for (int j = 0; j < N; ++j)
        for (int s = 0; s < S; ++s) gv[flat(j, s)] = Gm(j, s);
      if (gv.norm() < 1e-12 * std::max(1.0, fw)) {
        settled = true;
        break;
      }
      H.diagonal().array() += 1e-12;
      const Eigen::VectorXd d = H.ldlt().solve(gv);
      double t = 1.0, fn = fw;
      CoefficientMatrix Wn = W;
      bool accepted = false;
      for (int tries = 0; tries < 60; ++tries) {
        for (int j = 0; j < N; ++j)
          for (int s = 0; s < S; ++s) Wn(j, s) = W(j, s) - t * d[flat(j, s)];
        fn = smooth_obj(Wn);
        if (fn <= fw) {
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      if (!accepted) {
        settled = true;  // stationary up to line-search resolution
        break;
      }
      const double progress = (fw - fn) / std::max(1.0, std::abs(fw));
      W = Wn;
      fw = fn;
      if (progress < 1e-16 && it > 2) {
        settled = true;
        break;
      }
    }
  }
  return settled;
}

}  // namespace

SubgradientResult solve_subgradient(const MultimodalDictionary& dict,
                                    const MultimodalSample& sample,
                                    const SparsityPrior& prior, long iterations) {
  if (dict.atoms() > 30 || dict.modalities() > 4)
    throw ConfigError("dimension too large for the subgradient oracle");
  check_sample(dict, sample);
  const int N = dict.atoms();
  const int S = dict.modalities();
  const auto groups = penalty_groups(prior, S);
  const double lambda = prior.lambda;

  double frob = 0.0;
  for (const auto& X : dict.features) frob = std::max(frob, X.squaredNorm());
  double c = 1.0 / std::max(frob, 1e-12);

  CoefficientMatrix A = CoefficientMatrix::Zero(N, S), best = A;
  double best_f = oracle_objective(A, dict, sample, lambda, groups);
  const int stages = 8;
  const long per_stage = std::max<long>(1, iterations / stages);
  for (int stage = 0; stage < stages; ++stage) {
    A = best;
    for (long k = 1; k <= per_stage; ++k) {
      const CoefficientMatrix G = oracle_subgradient(A, dict, sample, lambda, groups);
      A -= (c / std::sqrt(static_cast<double>(k))) * G;
      const double f = oracle_objective(A, dict, sample, lambda, groups);
      if (f < best_f) {
        best_f = f;
        best = A;
      }
    }
    c /= 2.5;
  }

  CoefficientMatrix W = best;
  const bool settled = smoothed_newton(W, dict, sample, lambda, groups);
  const double fw = oracle_objective(W, dict, sample, lambda, groups);
  if (fw < best_f) {
    best_f = fw;
    best = W;
  }
  if (!settled)
    throw DataError("subgradient oracle exhausted its budget without stabilizing");

  return {best, best_f};
}

double weight_grid_search(double residual, double lambda_mu, double m) {
  if (residual < 0) throw ConfigError("residual must be non-negative");
  if (!(lambda_mu > 0)) throw ConfigError("weight regularizer must be positive");
  double best_mu = 0.0;
  double best_val = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 15000; ++i) {
    const double mu = i * 1e-4;
    const double val =
        0.5 * (std::pow(mu, m) * residual + lambda_mu * std::pow(std::abs(1.0 - mu), m));
    if (val < best_val) {
      best_val = val;
      best_mu = mu;
    }
  }
  return best_mu;
}

}  // namespace mmsrc::oracle
