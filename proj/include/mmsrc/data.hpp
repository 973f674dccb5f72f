#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "mmsrc/model.hpp"

namespace mmsrc {

/// One split of a dataset: per-modality feature matrices (columns are
/// samples, row order of the source tables defines cross-modality
/// alignment) and 0-based labels.
struct Dataset {
  std::vector<Eigen::MatrixXd> features;
  std::vector<int> labels;

  int modalities() const { return static_cast<int>(features.size()); }
  int count() const { return static_cast<int>(labels.size()); }
  int classes() const;
};

struct SplitDataset {
  Dataset train;
  Dataset test;
  std::vector<std::string> modality_names;  // defaults to m1, m2, ...
};

/// Reads a JSON manifest ({"modalities": [{name, train_csv, test_csv}...],
/// "train_labels_csv", "test_labels_csv"}) with CSV feature tables (one
/// row per sample, headerless) and one 1-based integer label per line.
/// Paths are resolved relative to the manifest. Throws DataError on
/// missing files, label/sample count mismatches, or non-numeric cells.
SplitDataset load_dataset(const std::filesystem::path& manifest_path);

/// Writes manifest.json plus the CSV tables into out_dir in the format
/// load_dataset reads. Floats use 17 significant digits so values
/// round-trip exactly.
void save_dataset(const SplitDataset& dataset, const std::filesystem::path& out_dir);

/// Groups training samples by class and builds normalized dictionaries.
MultimodalDictionary dictionary_from(const Dataset& train);

/// Extracts test sample `index` as a MultimodalSample.
MultimodalSample sample_at(const Dataset& data, int index);

}  // namespace mmsrc
