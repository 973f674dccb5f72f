#include "mmsrc/solver.hpp"

#include <cmath>
#include <random>

#include "mmsrc/prox.hpp"

namespace mmsrc {

SparsityPrior SparsityPrior::l1_per_modality(double lambda) {
  if (!(lambda > 0)) throw ConfigError("lambda must be positive");
  SparsityPrior p;
  p.kind = Kind::L1PerModality;
  p.lambda = lambda;
  return p;
}

SparsityPrior SparsityPrior::joint(double lambda) {
  if (!(lambda > 0)) throw ConfigError("lambda must be positive");
  SparsityPrior p;
  p.kind = Kind::Joint;
  p.lambda = lambda;
  return p;
}

SparsityPrior SparsityPrior::tree_structured(double lambda, TreeGroupStructure tree) {
  if (!(lambda > 0)) throw ConfigError("lambda must be positive");
  if (tree.groups.empty()) throw ConfigError("tree prior needs at least one group");
  SparsityPrior p;
  p.kind = Kind::Tree;
  p.lambda = lambda;
  p.tree = std::move(tree);
  return p;
}

double SparsityPrior::penalty_value(const CoefficientMatrix& A) const {
  switch (kind) {
    case Kind::L1PerModality:
      return A.cwiseAbs().sum();
    case Kind::Joint:
      return A.rowwise().norm().sum();
    case Kind::Tree: {
      double total = 0.0;
      for (Eigen::Index j = 0; j < A.rows(); ++j)
        for (const auto& g : tree->groups) {
          double sq = 0.0;
          for (int i : g.members) sq += A(j, i) * A(j, i);
          total += g.weight * std::sqrt(sq);
        }
      return total;
    }
  }
  return 0.0;
}

CoefficientMatrix SparsityPrior::apply_prox(const CoefficientMatrix& V, double beta) const {
  switch (kind) {
    case Kind::L1PerModality: {
      CoefficientMatrix U(V.rows(), V.cols());
      for (Eigen::Index j = 0; j < V.rows(); ++j)
        for (Eigen::Index s = 0; s < V.cols(); ++s)
          U(j, s) = soft_threshold_scalar(V(j, s), beta);
      return U;
    }
    case Kind::Joint:
      return prox_joint(V, beta);
    case Kind::Tree:
      return prox_tree(V, *tree, beta);
  }
  return V;
}

namespace {

double weight_of(const Eigen::VectorXd* w, int s) { return w ? (*w)[s] : 1.0; }

double smooth_part(const CoefficientMatrix& A, const MultimodalDictionary& dict,
                   const MultimodalSample& sample, const Eigen::VectorXd* w) {
  double total = 0.0;
  for (int s = 0; s < dict.modalities(); ++s)
    total += 0.5 * weight_of(w, s) * (sample[s] - dict.features[s] * A.col(s)).squaredNorm();
  return total;
}

void check_shapes(const CoefficientMatrix& A, const MultimodalDictionary& dict,
                  const MultimodalSample& sample, const Eigen::VectorXd* w) {
  check_sample(dict, sample);
  if (A.rows() != dict.atoms() || A.cols() != dict.modalities())
    throw DataError("coefficient matrix shape does not match dictionary");
  if (w && w->size() != dict.modalities())
    throw DataError("modality weight count does not match dictionary");
}

}  // namespace

double objective(const CoefficientMatrix& A, const MultimodalDictionary& dict,
                 const MultimodalSample& sample, const SparsityPrior& prior,
                 const Eigen::VectorXd* modality_weights) {
  check_shapes(A, dict, sample, modality_weights);
  return smooth_part(A, dict, sample, modality_weights) +
         prior.lambda * prior.penalty_value(A);
}

CoefficientMatrix grad_f(const CoefficientMatrix& A, const MultimodalDictionary& dict,
                         const MultimodalSample& sample,
                         const Eigen::VectorXd* modality_weights) {
  check_shapes(A, dict, sample, modality_weights);
  CoefficientMatrix G(A.rows(), A.cols());
  for (int s = 0; s < dict.modalities(); ++s)
    G.col(s) = -weight_of(modality_weights, s) *
               (dict.features[s].transpose() * (sample[s] - dict.features[s] * A.col(s)));
  return G;
}

double lipschitz_step(const MultimodalDictionary& dict,
                      const Eigen::VectorXd* modality_weights) {
  if (dict.modalities() == 0) throw DataError("empty dictionary");
  double L = 0.0;
  std::mt19937_64 rng(0x6d6d737263ull);  // fixed: the estimate must be deterministic
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int s = 0; s < dict.modalities(); ++s) {
    const Eigen::MatrixXd& X = dict.features[s];
    // power iteration on the smaller Gram matrix
    const bool tall = X.rows() >= X.cols();
    const Eigen::MatrixXd M = tall ? Eigen::MatrixXd(X.transpose() * X)
                                   : Eigen::MatrixXd(X * X.transpose());
    Eigen::VectorXd v(M.rows());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = unif(rng);
    v.normalize();
    double eig = 0.0;
    // iterate until the Rayleigh quotient settles; near-equal leading
    // eigenvalues stall the per-step change only once the estimate is
    // already within the gap, so stagnation at 1e-10 is safe
    for (int it = 0; it < 20000; ++it) {
      Eigen::VectorXd w = M * v;
      double nw = w.norm();
      if (nw == 0.0) break;
      v = w / nw;
      double next = v.dot(M * v);
      if (std::abs(next - eig) <= 1e-10 * std::max(1.0, std::abs(next))) {
        eig = next;
        break;
      }
      eig = next;
    }
    L = std::max(L, weight_of(modality_weights, s) * eig);
  }
  if (!(L > 0.0)) throw DataError("could not estimate a positive Lipschitz constant");
  return 1.0 / L;
}

SolveResult solve(const MultimodalDictionary& dict, const MultimodalSample& sample,
                  const SparsityPrior& prior, const SolverSettings& settings,
                  const Eigen::VectorXd* modality_weights,
                  const CoefficientMatrix* initial) {
  if (!(settings.tolerance > 0)) throw ConfigError("tolerance must be positive");
  if (settings.max_iterations < 1) throw ConfigError("max iterations must be positive");
  if (!(settings.backtrack_shrink > 0.0 && settings.backtrack_shrink < 1.0))
    throw ConfigError("backtracking shrink factor must lie in (0,1)");
  if (prior.kind == SparsityPrior::Kind::Tree &&
      (!prior.tree || prior.tree->modalities != dict.modalities()))
    throw ConfigError("tree prior does not match dictionary modality count");

  const int N = dict.atoms();
  const int S = dict.modalities();
  CoefficientMatrix A = initial ? *initial : CoefficientMatrix::Zero(N, S);
  check_shapes(A, dict, sample, modality_weights);

  const bool backtracking = settings.step_rule == SolverSettings::StepRule::Backtracking;
  double t = settings.step;
  if (!(t > 0)) t = backtracking ? 1.0 : lipschitz_step(dict, modality_weights);

  CoefficientMatrix A_prev = A;
  CoefficientMatrix best = A;
  double best_obj = objective(A, dict, sample, prior, modality_weights);
  double f_prev = best_obj;

  SolveResult result;
  result.trace.reserve(settings.max_iterations);
  int calm = 0;
  for (int k = 0; k < settings.max_iterations; ++k) {
    const double rho = static_cast<double>(k) / (k + 3.0);
    CoefficientMatrix B = A + rho * (A - A_prev);
    CoefficientMatrix G = grad_f(B, dict, sample, modality_weights);
    CoefficientMatrix next;
    if (backtracking) {
      const double fB = smooth_part(B, dict, sample, modality_weights);
      for (int tries = 0;; ++tries) {
        next = prior.apply_prox(B - t * G, prior.lambda * t);
        CoefficientMatrix d = next - B;
        double quad = fB + (G.array() * d.array()).sum() + d.squaredNorm() / (2.0 * t);
        if (smooth_part(next, dict, sample, modality_weights) <= quad + 1e-15 * std::abs(quad))
          break;
        if (tries > 200) throw DataError("backtracking line search failed");
        t *= settings.backtrack_shrink;
      }
    } else {
      next = prior.apply_prox(B - t * G, prior.lambda * t);
    }
    A_prev = std::move(A);
    A = std::move(next);

    const double obj = objective(A, dict, sample, prior, modality_weights);
    if (!std::isfinite(obj)) throw DataError("non-finite objective: divergent step size");
    result.trace.push_back(obj);
    if (settings.observer) settings.observer(SolveIteration{k, t, B, A, obj});
    if (obj < best_obj) {
      best_obj = obj;
      best = A;
    }
    const double rel = std::abs(obj - f_prev) / std::max(std::abs(f_prev), 1e-12);
    calm = rel < settings.tolerance ? calm + 1 : 0;
    f_prev = obj;
    if (calm >= 5) break;
  }

  result.coefficients = std::move(best);
  result.objective = best_obj;
  result.iterations = static_cast<int>(result.trace.size());
  return result;
}

}  // namespace mmsrc
