#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <string_view>

#include "mmsrc/fusion.hpp"
#include "mmsrc/model.hpp"
#include "mmsrc/solver.hpp"

namespace mmsrc {

enum class Method {
  SrcPerModality,  // S independent l1 problems, residuals summed
  Hsrc,            // concatenated features, single l1 problem
  Jsrc,            // joint l1/l2 prior
  Mtsrc,           // tree-structured prior
  JsrcWeighted,    // joint prior with possibilistic weights
  MtsrcWeighted,   // tree prior with possibilistic weights
};

Method parse_method(std::string_view tag);  // throws ConfigError on unknown tags
std::string method_name(Method method);
bool method_is_weighted(Method method);
bool method_needs_tree(Method method);

struct ClassificationResult {
  int predicted = 0;                       // 0-based class index
  Eigen::VectorXd class_residuals;         // aggregate residual per class
  Eigen::MatrixXd modality_residuals;      // per class x per modality
  std::optional<QualityWeights> weights;   // present for weighted methods
};

/// Classifies by class-specific reconstruction error: the aggregate
/// residual of class c is sum_s w_s ||y^s - X^s delta_c(a^s)||^2, with
/// w_s = mu_s^m when weights are given and 1 otherwise. Ties go to the
/// lowest class index.
ClassificationResult classify_residual(const CoefficientMatrix& A,
                                       const MultimodalDictionary& dict,
                                       const MultimodalSample& sample,
                                       const QualityWeights* weights = nullptr);

struct PipelineSettings {
  double lambda = 0.1;
  std::optional<TreeGroupStructure> tree;  // required by the tree methods
  SolverSettings solver;
  int alternations = 10;
  double fuzzifier = 2.0;
};

/// Solves the sparse coding problem the given method dictates and applies
/// the residual rule. Test vectors are used as provided; only dictionary
/// columns are normalized.
ClassificationResult classify_pipeline(const MultimodalDictionary& dict,
                                       const MultimodalSample& sample, Method method,
                                       const PipelineSettings& settings);

/// The concatenated single-modality dictionary and sample used by HSRC.
MultimodalDictionary concatenate_dictionary(const MultimodalDictionary& dict);
MultimodalSample concatenate_sample(const MultimodalDictionary& dict,
                                    const MultimodalSample& sample);

}  // namespace mmsrc
