#include "mmsrc/data.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace mmsrc {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// headerless CSV, one sample per row; returns dim x count (columns = samples)
Eigen::MatrixXd read_feature_csv(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::vector<std::vector<double>> rows;
  std::istringstream lines(text);
  std::string line;
  int lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    int col = 0;
    while (std::getline(cells, cell, ',')) {
      ++col;
      const char* begin = cell.c_str();
      char* end = nullptr;
      double value = std::strtod(begin, &end);
      while (end && *end == ' ') ++end;
      if (end == begin || (end && *end != '\0'))
        throw DataError("non-numeric value '" + cell + "' at row " +
                        std::to_string(lineno) + ", column " + std::to_string(col) +
                        " of " + path.string());
      row.push_back(value);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw DataError("row " + std::to_string(lineno) + " of " + path.string() +
                      " has " + std::to_string(row.size()) + " columns, expected " +
                      std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("empty feature table: " + path.string());
  Eigen::MatrixXd out(rows.front().size(), rows.size());
  for (size_t j = 0; j < rows.size(); ++j)
    for (size_t i = 0; i < rows[j].size(); ++i) out(i, j) = rows[j][i];
  return out;
}

std::vector<int> read_labels_csv(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::istringstream lines(text);
  std::string line;
  std::vector<int> labels;
  int lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      size_t pos = 0;
      int value = std::stoi(line, &pos);
      if (pos != line.size()) throw std::invalid_argument(line);
      if (value < 1)
        throw DataError("label " + std::to_string(value) + " at line " +
                        std::to_string(lineno) + " of " + path.string() +
                        " is not a 1-based class index");
      labels.push_back(value - 1);
    } catch (const std::invalid_argument&) {
      throw DataError("non-numeric label '" + line + "' at line " +
                      std::to_string(lineno) + " of " + path.string());
    }
  }
  if (labels.empty()) throw DataError("empty label file: " + path.string());
  return labels;
}

void check_counts(const Dataset& d, const std::string& which) {
  for (int s = 0; s < d.modalities(); ++s)
    if (d.features[s].cols() != d.count())
      throw DataError("sample count mismatch in " + which + " split: modality " +
                      std::to_string(s + 1) + " has " +
                      std::to_string(d.features[s].cols()) + " samples, labels have " +
                      std::to_string(d.count()));
}

void write_feature_csv(const Eigen::MatrixXd& features,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path.string());
  char buf[64];
  for (Eigen::Index j = 0; j < features.cols(); ++j) {
    for (Eigen::Index i = 0; i < features.rows(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", features(i, j));
      if (i) out << ',';
      out << buf;
    }
    out << '\n';
  }
}

void write_labels_csv(const std::vector<int>& labels,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path.string());
  for (int label : labels) out << (label + 1) << '\n';
}

}  // namespace

int Dataset::classes() const {
  int c = 0;
  for (int label : labels) c = std::max(c, label + 1);
  return c;
}

SplitDataset load_dataset(const std::filesystem::path& manifest_path) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(manifest_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("malformed manifest " + manifest_path.string() + ": " + e.what());
  }
  const auto base = manifest_path.parent_path();
  SplitDataset ds;
  try {
    for (const auto& m : manifest.at("modalities")) {
      ds.modality_names.push_back(m.at("name").get<std::string>());
      ds.train.features.push_back(
          read_feature_csv(base / m.at("train_csv").get<std::string>()));
      ds.test.features.push_back(
          read_feature_csv(base / m.at("test_csv").get<std::string>()));
    }
    ds.train.labels = read_labels_csv(base / manifest.at("train_labels_csv").get<std::string>());
    ds.test.labels = read_labels_csv(base / manifest.at("test_labels_csv").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError("invalid manifest " + manifest_path.string() + ": " + e.what());
  }
  if (ds.train.modalities() == 0) throw DataError("manifest lists no modalities");
  check_counts(ds.train, "train");
  check_counts(ds.test, "test");
  for (int s = 0; s < ds.train.modalities(); ++s)
    if (ds.train.features[s].rows() != ds.test.features[s].rows())
      throw DataError("train/test dimension mismatch in modality " + std::to_string(s + 1));
  return ds;
}

void save_dataset(const SplitDataset& dataset, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (!std::filesystem::is_directory(out_dir))
    throw DataError("cannot create output directory: " + out_dir.string());

  std::vector<std::string> names = dataset.modality_names;
  for (int s = static_cast<int>(names.size()); s < dataset.train.modalities(); ++s)
    names.push_back("m" + std::to_string(s + 1));

  nlohmann::json manifest;
  manifest["modalities"] = nlohmann::json::array();
  for (int s = 0; s < dataset.train.modalities(); ++s) {
    const std::string train_csv = "train_" + names[s] + ".csv";
    const std::string test_csv = "test_" + names[s] + ".csv";
    write_feature_csv(dataset.train.features[s], out_dir / train_csv);
    write_feature_csv(dataset.test.features[s], out_dir / test_csv);
    manifest["modalities"].push_back(
        {{"name", names[s]}, {"train_csv", train_csv}, {"test_csv", test_csv}});
  }
  write_labels_csv(dataset.train.labels, out_dir / "train_labels.csv");
  write_labels_csv(dataset.test.labels, out_dir / "test_labels.csv");
  manifest["train_labels_csv"] = "train_labels.csv";
  manifest["test_labels_csv"] = "test_labels.csv";

  std::ofstream out(out_dir / "manifest.json", std::ios::binary);
  if (!out) throw DataError("cannot write manifest in " + out_dir.string());
  out << manifest.dump(2) << '\n';
}

MultimodalDictionary dictionary_from(const Dataset& train) {
  const int C = train.classes();
  if (C == 0) throw DataError("training split has no labels");
  std::vector<std::vector<Eigen::MatrixXd>> grouped(train.modalities());
  for (int s = 0; s < train.modalities(); ++s) {
    grouped[s].resize(C);
    for (int c = 0; c < C; ++c) {
      int count = 0;
      for (int label : train.labels) count += (label == c);
      if (count == 0) throw DataError("empty class " + std::to_string(c + 1));
      Eigen::MatrixXd block(train.features[s].rows(), count);
      int k = 0;
      for (int j = 0; j < train.count(); ++j)
        if (train.labels[j] == c) block.col(k++) = train.features[s].col(j);
      grouped[s][c] = std::move(block);
    }
  }
  return build_dictionary(grouped);
}

MultimodalSample sample_at(const Dataset& data, int index) {
  if (index < 0 || index >= data.count()) throw DataError("sample index out of range");
  MultimodalSample y;
  y.reserve(data.modalities());
  for (int s = 0; s < data.modalities(); ++s) y.push_back(data.features[s].col(index));
  return y;
}

}  // namespace mmsrc
