#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mmsrc/errors.hpp"

namespace mmsrc {

/// Coefficient matrix A, one column of representation coefficients per
/// modality (N atoms x S modalities).
using CoefficientMatrix = Eigen::MatrixXd;

/// One multimodal observation: S feature vectors, one per modality.
using MultimodalSample = std::vector<Eigen::VectorXd>;

/// A subset of modality indices (0-based) with a positive penalty weight.
struct TreeGroup {
  std::vector<int> members;
  double weight = 1.0;
};

/// Laminar family of modality groups: any two groups are nested or
/// disjoint, the union covers all modalities, and storage order places
/// every group before its strict supersets (children before parents).
/// Produced by validate_tree; prox and solver code relies on the order.
struct TreeGroupStructure {
  std::vector<TreeGroup> groups;
  int modalities = 0;
};

/// Per-modality dictionaries built from training samples. Columns are
/// unit-normalized and class-contiguous; column-to-class assignment is
/// shared across modalities.
struct MultimodalDictionary {
  std::vector<Eigen::MatrixXd> features;  // per modality: n^s x N
  std::vector<int> labels;                // N, 0-based class per column
  std::vector<int> class_counts;          // C entries summing to N

  int modalities() const { return static_cast<int>(features.size()); }
  int classes() const { return static_cast<int>(class_counts.size()); }
  int atoms() const { return static_cast<int>(labels.size()); }
  int feature_dim(int s) const { return static_cast<int>(features.at(s).rows()); }

  /// First column of the class-c block.
  int class_offset(int c) const;

  /// Checks all structural invariants; throws DataError when broken.
  void validate() const;
};

/// Builds normalized dictionaries from raw samples. samples[s][c] holds
/// the class-c training samples of modality s as matrix columns. Throws
/// DataError on empty classes, zero-norm samples, or inconsistent
/// dimensions.
MultimodalDictionary build_dictionary(
    const std::vector<std::vector<Eigen::MatrixXd>>& samples);

/// Validates a user-supplied group collection over S modalities and
/// returns it re-sorted into children-before-parents order. Idempotent
/// on already-valid input. Throws ConfigError when the union does not
/// cover all modalities, two groups overlap without nesting, a group is
/// empty, or a weight is non-positive.
TreeGroupStructure validate_tree(std::vector<TreeGroup> groups, int modalities);

/// Keeps the coefficients of atoms labeled with class c and zeroes the
/// rest. Throws ConfigError when c is out of range.
Eigen::VectorXd class_select(const Eigen::VectorXd& coefficients, int c,
                             const MultimodalDictionary& dict);

/// Throws DataError unless the sample's per-modality dimensions match
/// the dictionary.
void check_sample(const MultimodalDictionary& dict, const MultimodalSample& sample);

}  // namespace mmsrc
