#include "mmsrc/model.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace mmsrc {

namespace {

bool is_subset(const std::vector<int>& a, const std::vector<int>& b) {
  // both sorted
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

bool intersects(const std::vector<int>& a, const std::vector<int>& b) {
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia == *ib) return true;
    if (*ia < *ib) ++ia;
    else ++ib;
  }
  return false;
}

}  // namespace

int MultimodalDictionary::class_offset(int c) const {
  int off = 0;
  for (int i = 0; i < c; ++i) off += class_counts[i];
  return off;
}

void MultimodalDictionary::validate() const {
  if (features.empty()) throw DataError("dictionary has no modalities");
  const int n_atoms = atoms();
  if (n_atoms == 0) throw DataError("dictionary has no atoms");
  int total = 0;
  for (int c = 0; c < classes(); ++c) {
    if (class_counts[c] < 1) throw DataError("empty class " + std::to_string(c));
    total += class_counts[c];
  }
  if (total != n_atoms) throw DataError("class counts do not sum to atom count");
  for (int j = 0; j < n_atoms; ++j) {
    int c = labels[j];
    if (c < 0 || c >= classes()) throw DataError("column label out of range");
    int off = class_offset(c);
    if (j < off || j >= off + class_counts[c])
      throw DataError("columns are not class-contiguous");
  }
  for (int s = 0; s < modalities(); ++s) {
    if (features[s].cols() != n_atoms)
      throw DataError("modality " + std::to_string(s) + " has wrong atom count");
    for (int j = 0; j < n_atoms; ++j) {
      double nrm = features[s].col(j).norm();
      if (std::abs(nrm - 1.0) > 1e-10)
        throw DataError("column " + std::to_string(j) + " of modality " +
                        std::to_string(s) + " is not unit-normalized");
    }
  }
}

MultimodalDictionary build_dictionary(
    const std::vector<std::vector<Eigen::MatrixXd>>& samples) {
  if (samples.empty()) throw DataError("no modalities given");
  const int S = static_cast<int>(samples.size());
  const int C = static_cast<int>(samples[0].size());
  if (C == 0) throw DataError("no classes given");
  for (int s = 1; s < S; ++s)
    if (static_cast<int>(samples[s].size()) != C)
      throw DataError("modalities disagree on class count");

  MultimodalDictionary dict;
  dict.class_counts.resize(C);
  for (int c = 0; c < C; ++c) {
    const int count = static_cast<int>(samples[0][c].cols());
    if (count < 1) throw DataError("empty class " + std::to_string(c));
    for (int s = 1; s < S; ++s)
      if (samples[s][c].cols() != count)
        throw DataError("class " + std::to_string(c) +
                        " sample count differs across modalities");
    dict.class_counts[c] = count;
    for (int j = 0; j < count; ++j) dict.labels.push_back(c);
  }
  const int N = dict.atoms();

  dict.features.reserve(S);
  for (int s = 0; s < S; ++s) {
    const Eigen::Index dim = samples[s][0].rows();
    Eigen::MatrixXd X(dim, N);
    int col = 0;
    for (int c = 0; c < C; ++c) {
      const Eigen::MatrixXd& block = samples[s][c];
      if (block.rows() != dim)
        throw DataError("inconsistent sample dimension in modality " +
                        std::to_string(s));
      for (Eigen::Index j = 0; j < block.cols(); ++j) {
        double nrm = block.col(j).norm();
        if (!(nrm > 0.0) || !std::isfinite(nrm))
          throw DataError("zero-norm column (class " + std::to_string(c) +
                          ", sample " + std::to_string(j) + ", modality " +
                          std::to_string(s) + ")");
        X.col(col++) = block.col(j) / nrm;
      }
    }
    dict.features.push_back(std::move(X));
  }
  return dict;
}

TreeGroupStructure validate_tree(std::vector<TreeGroup> groups, int modalities) {
  if (modalities < 1) throw ConfigError("modality count must be positive");
  std::vector<bool> covered(modalities, false);
  for (auto& g : groups) {
    if (g.members.empty()) throw ConfigError("empty group");
    std::sort(g.members.begin(), g.members.end());
    g.members.erase(std::unique(g.members.begin(), g.members.end()), g.members.end());
    for (int m : g.members) {
      if (m < 0 || m >= modalities)
        throw ConfigError("group member " + std::to_string(m) + " out of range");
      covered[m] = true;
    }
    if (!(g.weight > 0.0) || !std::isfinite(g.weight))
      throw ConfigError("non-positive group weight");
  }
  for (int m = 0; m < modalities; ++m)
    if (!covered[m])
      throw ConfigError("groups do not cover modality " + std::to_string(m));

  for (size_t a = 0; a < groups.size(); ++a)
    for (size_t b = a + 1; b < groups.size(); ++b) {
      const auto& ga = groups[a].members;
      const auto& gb = groups[b].members;
      if (intersects(ga, gb) && !is_subset(ga, gb) && !is_subset(gb, ga))
        throw ConfigError("not laminar: overlapping non-nested groups");
    }

  // children before parents; deterministic tie order for disjoint groups
  std::sort(groups.begin(), groups.end(), [](const TreeGroup& x, const TreeGroup& y) {
    if (x.members.size() != y.members.size()) return x.members.size() < y.members.size();
    return x.members < y.members;
  });

  TreeGroupStructure tree;
  tree.groups = std::move(groups);
  tree.modalities = modalities;
  return tree;
}

Eigen::VectorXd class_select(const Eigen::VectorXd& coefficients, int c,
                             const MultimodalDictionary& dict) {
  if (c < 0 || c >= dict.classes()) throw ConfigError("class index out of range");
  if (coefficients.size() != dict.atoms())
    throw DataError("coefficient length does not match atom count");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(coefficients.size());
  const int off = dict.class_offset(c);
  out.segment(off, dict.class_counts[c]) = coefficients.segment(off, dict.class_counts[c]);
  return out;
}

void check_sample(const MultimodalDictionary& dict, const MultimodalSample& sample) {
  if (static_cast<int>(sample.size()) != dict.modalities())
    throw DataError("sample modality count does not match dictionary");
  for (int s = 0; s < dict.modalities(); ++s)
    if (sample[s].size() != dict.feature_dim(s))
      throw DataError("sample dimension mismatch in modality " + std::to_string(s));
}

}  // namespace mmsrc
