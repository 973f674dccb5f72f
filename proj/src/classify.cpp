#include "mmsrc/classify.hpp"

namespace mmsrc {

Method parse_method(std::string_view tag) {
  if (tag == "SRC_PER_MODALITY") return Method::SrcPerModality;
  if (tag == "HSRC") return Method::Hsrc;
  if (tag == "JSRC") return Method::Jsrc;
  if (tag == "MTSRC") return Method::Mtsrc;
  if (tag == "JSRC_W") return Method::JsrcWeighted;
  if (tag == "MTSRC_W") return Method::MtsrcWeighted;
  throw ConfigError("unknown method tag: " + std::string(tag));
}

std::string method_name(Method method) {
  switch (method) {
    case Method::SrcPerModality: return "SRC_PER_MODALITY";
    case Method::Hsrc: return "HSRC";
    case Method::Jsrc: return "JSRC";
    case Method::Mtsrc: return "MTSRC";
    case Method::JsrcWeighted: return "JSRC_W";
    case Method::MtsrcWeighted: return "MTSRC_W";
  }
  return "?";
}

bool method_is_weighted(Method method) {
  return method == Method::JsrcWeighted || method == Method::MtsrcWeighted;
}

bool method_needs_tree(Method method) {
  return method == Method::Mtsrc || method == Method::MtsrcWeighted;
}

ClassificationResult classify_residual(const CoefficientMatrix& A,
                                       const MultimodalDictionary& dict,
                                       const MultimodalSample& sample,
                                       const QualityWeights* weights) {
  check_sample(dict, sample);
  if (A.rows() != dict.atoms() || A.cols() != dict.modalities())
    throw DataError("coefficient matrix shape does not match dictionary");

  const int C = dict.classes();
  const int S = dict.modalities();
  Eigen::VectorXd w = weights ? weights->effective() : Eigen::VectorXd::Ones(S);

  ClassificationResult result;
  result.modality_residuals.resize(C, S);
  result.class_residuals.resize(C);
  for (int c = 0; c < C; ++c) {
    double total = 0.0;
    for (int s = 0; s < S; ++s) {
      const Eigen::VectorXd masked = class_select(A.col(s), c, dict);
      const double r = (sample[s] - dict.features[s] * masked).squaredNorm();
      result.modality_residuals(c, s) = r;
      total += w[s] * r;
    }
    result.class_residuals[c] = total;
  }
  // argmin; ties resolved toward the lowest class index
  int best = 0;
  for (int c = 1; c < C; ++c)
    if (result.class_residuals[c] < result.class_residuals[best]) best = c;
  result.predicted = best;
  if (weights) result.weights = *weights;
  return result;
}

MultimodalDictionary concatenate_dictionary(const MultimodalDictionary& dict) {
  const int C = dict.classes();
  std::vector<std::vector<Eigen::MatrixXd>> stacked(1);
  stacked[0].reserve(C);
  Eigen::Index dim_total = 0;
  for (int s = 0; s < dict.modalities(); ++s) dim_total += dict.feature_dim(s);
  for (int c = 0; c < C; ++c) {
    const int off = dict.class_offset(c);
    const int count = dict.class_counts[c];
    Eigen::MatrixXd block(dim_total, count);
    Eigen::Index row = 0;
    for (int s = 0; s < dict.modalities(); ++s) {
      block.middleRows(row, dict.feature_dim(s)) =
          dict.features[s].middleCols(off, count);
      row += dict.feature_dim(s);
    }
    stacked[0].push_back(std::move(block));
  }
  return build_dictionary(stacked);  // re-normalizes the long columns
}

MultimodalSample concatenate_sample(const MultimodalDictionary& dict,
                                    const MultimodalSample& sample) {
  check_sample(dict, sample);
  Eigen::Index dim_total = 0;
  for (int s = 0; s < dict.modalities(); ++s) dim_total += dict.feature_dim(s);
  Eigen::VectorXd y(dim_total);
  Eigen::Index row = 0;
  for (int s = 0; s < dict.modalities(); ++s) {
    y.segment(row, sample[s].size()) = sample[s];
    row += sample[s].size();
  }
  return {y};
}

ClassificationResult classify_pipeline(const MultimodalDictionary& dict,
                                       const MultimodalSample& sample, Method method,
                                       const PipelineSettings& settings) {
  if (method_needs_tree(method) && !settings.tree) throw ConfigError("tree required");

  switch (method) {
    case Method::SrcPerModality: {
      // the objective decouples across modalities, so one solve covers all S
      SolveResult r = solve(dict, sample, SparsityPrior::l1_per_modality(settings.lambda),
                            settings.solver);
      return classify_residual(r.coefficients, dict, sample);
    }
    case Method::Hsrc: {
      const MultimodalDictionary longdict = concatenate_dictionary(dict);
      const MultimodalSample longsample = concatenate_sample(dict, sample);
      SolveResult r = solve(longdict, longsample,
                            SparsityPrior::l1_per_modality(settings.lambda), settings.solver);
      return classify_residual(r.coefficients, longdict, longsample);
    }
    case Method::Jsrc: {
      SolveResult r = solve(dict, sample, SparsityPrior::joint(settings.lambda),
                            settings.solver);
      return classify_residual(r.coefficients, dict, sample);
    }
    case Method::Mtsrc: {
      SolveResult r = solve(dict, sample,
                            SparsityPrior::tree_structured(settings.lambda, *settings.tree),
                            settings.solver);
      return classify_residual(r.coefficients, dict, sample);
    }
    case Method::JsrcWeighted:
    case Method::MtsrcWeighted: {
      SparsityPrior prior = method == Method::JsrcWeighted
                                ? SparsityPrior::joint(settings.lambda)
                                : SparsityPrior::tree_structured(settings.lambda,
                                                                 *settings.tree);
      FusionSettings fs;
      fs.alternations = settings.alternations;
      fs.fuzzifier = settings.fuzzifier;
      fs.inner = settings.solver;
      FusionResult r = solve_weighted(dict, sample, prior, fs);
      return classify_residual(r.coefficients, dict, sample, &r.weights);
    }
  }
  throw ConfigError("unknown method");
}

}  // namespace mmsrc
