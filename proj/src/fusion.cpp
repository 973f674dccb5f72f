#include "mmsrc/fusion.hpp"

#include <cmath>

namespace mmsrc {

Eigen::VectorXd QualityWeights::effective() const {
  return mu.array().pow(fuzzifier).matrix();
}

Eigen::VectorXd modality_residuals(const CoefficientMatrix& A,
                                   const MultimodalDictionary& dict,
                                   const MultimodalSample& sample) {
  check_sample(dict, sample);
  if (A.rows() != dict.atoms() || A.cols() != dict.modalities())
    throw DataError("coefficient matrix shape does not match dictionary");
  Eigen::VectorXd r(dict.modalities());
  for (int s = 0; s < dict.modalities(); ++s)
    r[s] = (sample[s] - dict.features[s] * A.col(s)).squaredNorm();
  return r;
}

Eigen::VectorXd init_regularizers(const Eigen::VectorXd& residuals) {
  return residuals.cwiseMax(1e-12);
}

Eigen::VectorXd update_weights(const Eigen::VectorXd& residuals,
                               const Eigen::VectorXd& lambda_mu, double m) {
  if (!(m > 1.0)) throw ConfigError("fuzzifier must exceed 1");
  if (residuals.size() != lambda_mu.size())
    throw DataError("residual and regularizer sizes differ");
  Eigen::VectorXd mu(residuals.size());
  for (Eigen::Index s = 0; s < mu.size(); ++s) {
    if (!(lambda_mu[s] > 0)) throw ConfigError("weight regularizer must be positive");
    mu[s] = 1.0 / (1.0 + std::pow(residuals[s] / lambda_mu[s], 1.0 / (m - 1.0)));
  }
  return mu;
}

double composite_objective(const CoefficientMatrix& A, const MultimodalDictionary& dict,
                           const MultimodalSample& sample, const SparsityPrior& prior,
                           const QualityWeights& weights) {
  const Eigen::VectorXd w = weights.effective();
  double total = objective(A, dict, sample, prior, &w);
  for (Eigen::Index s = 0; s < weights.mu.size(); ++s)
    total += 0.5 * weights.lambda_mu[s] * std::pow(1.0 - weights.mu[s], weights.fuzzifier);
  return total;
}

FusionResult solve_weighted(const MultimodalDictionary& dict, const MultimodalSample& sample,
                            const SparsityPrior& prior, const FusionSettings& settings) {
  if (settings.alternations < 1) throw ConfigError("alternation count must be positive");
  if (!(settings.fuzzifier > 1.0)) throw ConfigError("fuzzifier must exceed 1");

  // initial estimate without weighting
  SolveResult base = solve(dict, sample, prior, settings.inner);
  CoefficientMatrix A = std::move(base.coefficients);
  Eigen::VectorXd r = modality_residuals(A, dict, sample);

  QualityWeights qw;
  qw.fuzzifier = settings.fuzzifier;
  qw.lambda_mu = settings.lambda_mu_override ? *settings.lambda_mu_override
                                             : init_regularizers(r);
  if (qw.lambda_mu.size() != dict.modalities())
    throw ConfigError("regularizer override size does not match modality count");

  FusionResult result;
  result.trace.reserve(settings.alternations + 1);
  for (int k = 1; k <= settings.alternations; ++k) {
    if (k == 1 && settings.initial_mu_override) {
      qw.mu = *settings.initial_mu_override;
      if (qw.mu.size() != dict.modalities())
        throw ConfigError("weight override size does not match modality count");
    } else {
      qw.mu = update_weights(r, qw.lambda_mu, settings.fuzzifier);
    }
    if (k == 1)
      result.trace.push_back(composite_objective(A, dict, sample, prior, qw));

    const Eigen::VectorXd w = qw.effective();
    SolveResult step = solve(dict, sample, prior, settings.inner, &w, &A);
    A = std::move(step.coefficients);
    r = modality_residuals(A, dict, sample);
    result.trace.push_back(composite_objective(A, dict, sample, prior, qw));
  }

  result.coefficients = std::move(A);
  result.weights = std::move(qw);
  return result;
}

}  // namespace mmsrc
