#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "mmsrc/classify.hpp"
#include "mmsrc/data.hpp"
#include "mmsrc/model.hpp"

namespace mmsrc {

/// Declarative description of a synthetic multimodal dataset: every class
/// gets a random latent-dim subspace per modality; modalities listed in
/// the same correlated group share latent factors per sample, which gives
/// tree priors a real structure to exploit.
struct SyntheticSpec {
  int classes = 2;
  int modalities = 2;
  std::vector<int> feature_dims;            // per modality
  int latent_dim = 2;                       // d
  int train_per_class = 5;
  int test_per_class = 5;
  std::vector<std::vector<int>> correlated_groups;  // 0-based, disjoint
  std::vector<double> noise;                // sigma per modality
  // test-split override: real sensors drift between enrollment and use, so
  // test samples may carry more noise than the training atoms absorbed
  std::vector<double> test_noise;           // empty -> same as noise
  std::uint64_t seed = 0;
};

/// Deterministic generator; identical specs produce identical datasets.
SplitDataset synth_generate(const SyntheticSpec& spec);

enum class PerturbKind { Gaussian, ZeroBlock };

struct Perturbation {
  int modality = 0;  // 0-based
  PerturbKind kind = PerturbKind::Gaussian;
  double sigma = 0.0;     // Gaussian
  double fraction = 0.0;  // ZeroBlock
};

/// Corrupts the test vectors of one modality: Gaussian adds i.i.d. noise,
/// ZeroBlock zeroes a contiguous coordinate block of the given fraction at
/// a seeded random offset per sample. Training data stays untouched.
SplitDataset perturb(const SplitDataset& dataset, const Perturbation& p,
                     std::uint64_t seed);

struct SamplePrediction {
  int predicted = 0;
  Eigen::VectorXd class_residuals;
};

struct MetricsReport {
  double ccr = 0.0;
  Eigen::MatrixXi confusion;  // truth x predicted
  std::vector<double> cmc;    // rank 1..budget
  std::optional<double> hdr, hfar, mr;       // binary tasks only
  std::optional<Eigen::VectorXd> mean_mu;    // weighted methods only
};

/// CCR, confusion matrix, and the cumulative match curve; when a positive
/// class is given, also the detection rate, false alarm rate, and the
/// misclassification percentage. rank_budget 0 means "all classes".
MetricsReport compute_metrics(const std::vector<SamplePrediction>& predictions,
                              const std::vector<int>& truth,
                              std::optional<int> positive_class = {},
                              int rank_budget = 0);

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::optional<SyntheticSpec> synthetic;
  std::optional<std::filesystem::path> manifest;
  std::vector<Method> methods;
  double lambda = 0.1;
  std::optional<TreeGroupStructure> tree;
  SolverSettings solver;
  int alternations = 10;
  double fuzzifier = 2.0;
  std::vector<std::optional<Perturbation>> perturbations;  // empty -> one clean point
  enum class SplitMode { Holdout, KFold, TwoWay };
  SplitMode split = SplitMode::Holdout;
  int folds = 2;
  std::optional<int> positive_class;  // 0-based
  int cmc_rank_budget = 0;
};

struct ExperimentPointReport {
  std::string method;
  int point = 0;
  std::optional<Perturbation> perturbation;
  int fold = 0;
  MetricsReport metrics;
};

struct ExperimentAggregate {
  std::string method;
  int point = 0;
  std::optional<Perturbation> perturbation;
  double mean_ccr = 0.0;
  std::optional<Eigen::VectorXd> mean_mu;
};

struct ExperimentResult {
  std::vector<ExperimentPointReport> reports;      // per (point, fold, method)
  std::vector<ExperimentAggregate> aggregates;     // fold means per (point, method)
};

/// Runs the declared methods over the perturbation sweep and split mode.
/// Deterministic given the config seed; samples within a point may be
/// classified concurrently, reports are assembled in canonical order.
ExperimentResult run_experiment(const ExperimentConfig& config);

// JSON bindings for the documented interchange formats (schema 1).
// Modality and class indices are 1-based on the wire, 0-based in memory.
std::vector<TreeGroup> tree_groups_from_json(const nlohmann::json& j);
SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j,
                                             const std::filesystem::path& base_dir);
nlohmann::json metrics_to_json(const MetricsReport& m);
nlohmann::json perturbation_to_json(const std::optional<Perturbation>& p);
nlohmann::json report_to_json(const ExperimentPointReport& r);
nlohmann::json summary_to_json(const ExperimentResult& result);

}  // namespace mmsrc
