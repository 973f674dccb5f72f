#include <CLI11.hpp>
#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "mmsrc/bench.hpp"
#include "mmsrc/classify.hpp"
#include "mmsrc/data.hpp"
#include "mmsrc/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

json parse_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw mmsrc::DataError("cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::parse_error& e) {
    // parse_error messages carry the byte offset of the failure
    throw mmsrc::ConfigError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw mmsrc::DataError("cannot write file: " + path.string());
  out << text;
  if (!out) throw mmsrc::DataError("write failed: " + path.string());
}

struct ClassifyArgs {
  std::string manifest;
  std::string method_tag;
  double lambda = 0.1;
  std::string tree_path;
  double weight_scale = 1.0;
  int alternations = 10;
  double fuzzifier = 2.0;
  std::uint64_t seed = 0;  // reserved; classification itself is deterministic
  std::string out_path;
  int max_iterations = 500;
  double tolerance = 1e-8;
};

int cmd_classify(const ClassifyArgs& args) {
  const mmsrc::Method method = mmsrc::parse_method(args.method_tag);
  if (mmsrc::method_needs_tree(method) && args.tree_path.empty())
    throw mmsrc::ConfigError("tree required");

  const mmsrc::SplitDataset ds = mmsrc::load_dataset(args.manifest);
  const mmsrc::MultimodalDictionary dict = mmsrc::dictionary_from(ds.train);

  mmsrc::PipelineSettings settings;
  settings.lambda = args.lambda;
  settings.alternations = args.alternations;
  settings.fuzzifier = args.fuzzifier;
  settings.solver.max_iterations = args.max_iterations;
  settings.solver.tolerance = args.tolerance;
  if (!args.tree_path.empty()) {
    auto groups = mmsrc::tree_groups_from_json(parse_json_file(args.tree_path));
    if (args.weight_scale != 1.0)
      for (auto& g : groups)
        if (g.members.size() > 1) g.weight *= args.weight_scale;
    settings.tree = mmsrc::validate_tree(std::move(groups), dict.modalities());
  }

  json out;
  out["schema"] = 1;
  out["method"] = mmsrc::method_name(method);
  out["lambda"] = args.lambda;
  out["test_count"] = ds.test.count();
  auto predictions = json::array();
  int correct = 0;
  for (int i = 0; i < ds.test.count(); ++i) {
    const mmsrc::MultimodalSample y = mmsrc::sample_at(ds.test, i);
    const mmsrc::ClassificationResult r = mmsrc::classify_pipeline(dict, y, method, settings);
    json p;
    p["index"] = i;
    p["predicted"] = r.predicted + 1;
    p["truth"] = ds.test.labels[i] + 1;
    p["residuals"] = std::vector<double>(r.class_residuals.data(),
                                         r.class_residuals.data() + r.class_residuals.size());
    if (r.weights)
      p["mu"] = std::vector<double>(r.weights->mu.data(),
                                    r.weights->mu.data() + r.weights->mu.size());
    correct += (r.predicted == ds.test.labels[i]);
    predictions.push_back(std::move(p));
  }
  out["predictions"] = std::move(predictions);
  out["ccr"] = ds.test.count() > 0 ? static_cast<double>(correct) / ds.test.count() : 0.0;

  const std::string text = out.dump(2) + "\n";
  std::cout << text;
  if (!args.out_path.empty()) write_text(args.out_path, text);
  return kExitOk;
}

int cmd_experiment(const std::string& config_path, const std::string& out_dir) {
  const fs::path config_file(config_path);
  const mmsrc::ExperimentConfig config =
      mmsrc::experiment_config_from_json(parse_json_file(config_file),
                                         config_file.parent_path());
  const mmsrc::ExperimentResult result = mmsrc::run_experiment(config);

  const fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir))
    throw mmsrc::DataError("cannot create output directory: " + dir.string());

  char name[128];
  for (const auto& report : result.reports) {
    std::snprintf(name, sizeof name, "report_p%02d_f%02d_%s.json", report.point,
                  report.fold, report.method.c_str());
    write_text(dir / name, mmsrc::report_to_json(report).dump(2) + "\n");
  }
  const std::string summary = mmsrc::summary_to_json(result).dump(2) + "\n";
  write_text(dir / "summary.json", summary);
  std::cout << summary;
  return kExitOk;
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir) {
  const mmsrc::SyntheticSpec spec =
      mmsrc::synthetic_spec_from_json(parse_json_file(spec_path));
  const mmsrc::SplitDataset ds = mmsrc::synth_generate(spec);
  mmsrc::save_dataset(ds, out_dir);
  std::cout << "wrote dataset (" << ds.train.count() << " train, " << ds.test.count()
            << " test) to " << out_dir << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multimodal sparse representation classification"};
  app.require_subcommand(1);

  ClassifyArgs cargs;
  CLI::App* classify = app.add_subcommand("classify", "classify every test sample of a dataset");
  classify->add_option("--manifest", cargs.manifest, "dataset manifest JSON")->required();
  classify->add_option("--method", cargs.method_tag,
                       "SRC_PER_MODALITY | HSRC | JSRC | MTSRC | JSRC_W | MTSRC_W")
      ->required();
  classify->add_option("--lambda", cargs.lambda, "sparsity regularization");
  classify->add_option("--tree", cargs.tree_path, "tree JSON (required for MTSRC*)");
  classify->add_option("--weight-scale", cargs.weight_scale,
                       "multiplies non-singleton group weights");
  classify->add_option("--weighted-alternations", cargs.alternations,
                       "alternations for the weighted methods");
  classify->add_option("--fuzzifier", cargs.fuzzifier, "weight fuzzifier m");
  classify->add_option("--seed", cargs.seed, "reserved");
  classify->add_option("--out", cargs.out_path, "also write the JSON result here");
  classify->add_option("--max-iterations", cargs.max_iterations, "solver iteration cap");
  classify->add_option("--tolerance", cargs.tolerance, "solver relative tolerance");

  std::string config_path, out_dir;
  CLI::App* experiment = app.add_subcommand("experiment", "run a declarative experiment");
  experiment->add_option("--config", config_path, "experiment config JSON")->required();
  experiment->add_option("--out-dir", out_dir, "report output directory")->required();

  std::string spec_path, synth_dir;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--spec", spec_path, "synthetic spec JSON")->required();
  synth->add_option("--out-dir", synth_dir, "dataset output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*classify) return cmd_classify(cargs);
    if (*experiment) return cmd_experiment(config_path, out_dir);
    if (*synth) return cmd_synth(spec_path, synth_dir);
  } catch (const mmsrc::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const mmsrc::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitConfig;
}
