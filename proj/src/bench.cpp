#include "mmsrc/bench.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numbers>
#include <random>
#include <thread>

namespace mmsrc {

namespace {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Portable deterministic normals: Box-Muller over mt19937_64 words, so a
// seed pins the byte stream independent of the standard library.
class Randn {
 public:
  explicit Randn(std::uint64_t seed) : eng_(seed) {}

  double uniform() {  // (0, 1]
    return static_cast<double>((eng_() >> 11) + 1) * 0x1.0p-53;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  std::uint64_t integer(std::uint64_t bound) { return eng_() % bound; }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

template <typename F>
void parallel_for(int count, F&& body) {
  const int workers = std::max(1u, std::min(std::thread::hardware_concurrency(), 8u));
  if (workers == 1 || count < 4) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::future<void>> futures;
  for (int w = 0; w < workers; ++w)
    futures.push_back(std::async(std::launch::async, [&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) body(i);
    }));
  for (auto& f : futures) f.get();
}

std::vector<int> resolve_per_modality(std::vector<int> values, int S, const char* what) {
  if (values.empty()) throw ConfigError(std::string(what) + " missing");
  if (values.size() == 1) values.resize(S, values[0]);
  if (static_cast<int>(values.size()) != S)
    throw ConfigError(std::string(what) + " must list one value or one per modality");
  return values;
}

}  // namespace

SplitDataset synth_generate(const SyntheticSpec& spec) {
  if (spec.classes < 1 || spec.modalities < 1)
    throw ConfigError("class and modality counts must be positive");
  if (spec.train_per_class < 1 || spec.test_per_class < 1)
    throw ConfigError("per-class sample counts must be positive");
  const int S = spec.modalities;
  std::vector<int> dims = resolve_per_modality(spec.feature_dims, S, "feature_dims");
  std::vector<double> noise = spec.noise;
  if (noise.empty()) noise.assign(S, 0.0);
  if (noise.size() == 1) noise.resize(S, noise[0]);
  if (static_cast<int>(noise.size()) != S)
    throw ConfigError("noise must list one value or one per modality");
  std::vector<double> test_noise = spec.test_noise;
  if (test_noise.empty()) test_noise = noise;
  if (test_noise.size() == 1) test_noise.resize(S, test_noise[0]);
  if (static_cast<int>(test_noise.size()) != S)
    throw ConfigError("test_noise must list one value or one per modality");
  for (double s : noise)
    if (s < 0) throw ConfigError("noise level must be non-negative");
  for (double s : test_noise)
    if (s < 0) throw ConfigError("noise level must be non-negative");
  for (int d : dims)
    if (spec.latent_dim < 1 || spec.latent_dim > d)
      throw ConfigError("infeasible dimensions: latent_dim must lie in [1, feature_dim]");

  // correlation groups: a partition; unlisted modalities form singletons
  std::vector<int> group_of(S, -1);
  int group_count = 0;
  for (const auto& g : spec.correlated_groups) {
    if (g.empty()) throw ConfigError("empty correlated group");
    for (int m : g) {
      if (m < 0 || m >= S) throw ConfigError("correlated group member out of range");
      if (group_of[m] != -1) throw ConfigError("correlated groups must be disjoint");
      group_of[m] = group_count;
    }
    ++group_count;
  }
  for (int m = 0; m < S; ++m)
    if (group_of[m] == -1) group_of[m] = group_count++;

  const int per_class = spec.train_per_class + spec.test_per_class;
  SplitDataset ds;
  for (int s = 0; s < S; ++s) {
    ds.train.features.emplace_back(dims[s], spec.classes * spec.train_per_class);
    ds.test.features.emplace_back(dims[s], spec.classes * spec.test_per_class);
    ds.modality_names.push_back("m" + std::to_string(s + 1));
  }

  Randn rng(mix64(spec.seed ^ 0x73796e7468ull));
  int train_col = 0, test_col = 0;
  for (int c = 0; c < spec.classes; ++c) {
    // per-modality class subspace bases (orthonormal columns)
    std::vector<Eigen::MatrixXd> basis;
    for (int s = 0; s < S; ++s) {
      Eigen::MatrixXd B(dims[s], spec.latent_dim);
      for (Eigen::Index i = 0; i < B.rows(); ++i)
        for (Eigen::Index j = 0; j < B.cols(); ++j) B(i, j) = rng.normal();
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(B);
      basis.push_back(qr.householderQ() * Eigen::MatrixXd::Identity(dims[s], spec.latent_dim));
    }
    for (int j = 0; j < per_class; ++j) {
      Eigen::MatrixXd latents(spec.latent_dim, group_count);
      for (int g = 0; g < group_count; ++g)
        for (int i = 0; i < spec.latent_dim; ++i) latents(i, g) = rng.normal();
      const bool is_train = j < spec.train_per_class;
      for (int s = 0; s < S; ++s) {
        const double sigma = is_train ? noise[s] : test_noise[s];
        Eigen::VectorXd x = basis[s] * latents.col(group_of[s]);
        for (Eigen::Index i = 0; i < x.size(); ++i) x[i] += sigma * rng.normal();
        if (is_train) ds.train.features[s].col(train_col) = x;
        else ds.test.features[s].col(test_col) = x;
      }
      if (is_train) {
        ds.train.labels.push_back(c);
        ++train_col;
      } else {
        ds.test.labels.push_back(c);
        ++test_col;
      }
    }
  }
  return ds;
}

SplitDataset perturb(const SplitDataset& dataset, const Perturbation& p,
                     std::uint64_t seed) {
  if (p.modality < 0 || p.modality >= dataset.test.modalities())
    throw ConfigError("perturbation modality out of range");
  SplitDataset out = dataset;
  Eigen::MatrixXd& X = out.test.features[p.modality];
  Randn rng(mix64(seed ^ 0x70657274ull));
  switch (p.kind) {
    case PerturbKind::Gaussian: {
      if (p.sigma < 0) throw ConfigError("noise level must be non-negative");
      for (Eigen::Index j = 0; j < X.cols(); ++j)
        for (Eigen::Index i = 0; i < X.rows(); ++i) X(i, j) += p.sigma * rng.normal();
      break;
    }
    case PerturbKind::ZeroBlock: {
      if (p.fraction < 0 || p.fraction > 1)
        throw ConfigError("occlusion fraction must lie in [0, 1]");
      const auto n = X.rows();
      const auto len = static_cast<Eigen::Index>(std::llround(p.fraction * n));
      if (len == 0) break;
      for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const auto offset =
            static_cast<Eigen::Index>(rng.integer(static_cast<std::uint64_t>(n - len + 1)));
        X.col(j).segment(offset, len).setZero();
      }
      break;
    }
  }
  return out;
}

MetricsReport compute_metrics(const std::vector<SamplePrediction>& predictions,
                              const std::vector<int>& truth,
                              std::optional<int> positive_class, int rank_budget) {
  if (predictions.empty()) throw DataError("empty input");
  if (predictions.size() != truth.size())
    throw DataError("prediction and truth counts differ");
  const int C = static_cast<int>(predictions[0].class_residuals.size());
  if (C < 1) throw DataError("predictions carry no class scores");
  const int budget = rank_budget > 0 ? std::min(rank_budget, C) : C;

  MetricsReport report;
  report.confusion = Eigen::MatrixXi::Zero(C, C);
  std::vector<int> rank_hits(budget, 0);
  int correct = 0;
  for (size_t i = 0; i < predictions.size(); ++i) {
    const int t = truth[i];
    if (t < 0 || t >= C) throw DataError("truth label out of range");
    const auto& r = predictions[i].class_residuals;
    const int p = predictions[i].predicted;
    report.confusion(t, p) += 1;
    correct += (p == t);
    int rank = 1;
    for (int c = 0; c < C; ++c) {
      if (c == t) continue;
      if (r[c] < r[t] || (r[c] == r[t] && c < t)) ++rank;
    }
    if (rank <= budget) rank_hits[rank - 1] += 1;
  }
  const double total = static_cast<double>(predictions.size());
  report.ccr = correct / total;
  report.cmc.resize(budget);
  int cumulative = 0;
  for (int r = 0; r < budget; ++r) {
    cumulative += rank_hits[r];
    report.cmc[r] = cumulative / total;
  }

  if (positive_class) {
    const int pos = *positive_class;
    if (pos < 0 || pos >= C) throw DataError("positive class out of range");
    int tp = 0, fn = 0, fp = 0, tn = 0;
    for (size_t i = 0; i < predictions.size(); ++i) {
      const bool truth_pos = truth[i] == pos;
      const bool pred_pos = predictions[i].predicted == pos;
      tp += (truth_pos && pred_pos);
      fn += (truth_pos && !pred_pos);
      fp += (!truth_pos && pred_pos);
      tn += (!truth_pos && !pred_pos);
    }
    report.hdr = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    report.hfar = fp + tn > 0 ? static_cast<double>(fp) / (fp + tn) : 0.0;
    report.mr = 100.0 * (1.0 - report.ccr);
  }
  return report;
}

namespace {

struct Fold {
  Dataset train;
  Dataset test;
};

std::vector<Fold> make_folds(const SplitDataset& ds, const ExperimentConfig& config) {
  std::vector<Fold> folds;
  switch (config.split) {
    case ExperimentConfig::SplitMode::Holdout:
      folds.push_back({ds.train, ds.test});
      break;
    case ExperimentConfig::SplitMode::TwoWay:
      folds.push_back({ds.train, ds.test});
      folds.push_back({ds.test, ds.train});
      break;
    case ExperimentConfig::SplitMode::KFold: {
      const int k = config.folds;
      if (k < 2) throw ConfigError("k-fold split needs at least 2 folds");
      // pool both splits, assign per class round-robin in stable order
      const int S = ds.train.modalities();
      const int total = ds.train.count() + ds.test.count();
      std::vector<int> labels(total);
      std::vector<int> fold_of(total);
      std::vector<int> per_class_counter(std::max(ds.train.classes(), ds.test.classes()), 0);
      auto label_at = [&](int i) {
        return i < ds.train.count() ? ds.train.labels[i]
                                    : ds.test.labels[i - ds.train.count()];
      };
      auto column_at = [&](int s, int i) {
        return i < ds.train.count() ? ds.train.features[s].col(i)
                                    : ds.test.features[s].col(i - ds.train.count());
      };
      for (int i = 0; i < total; ++i) {
        labels[i] = label_at(i);
        fold_of[i] = per_class_counter[labels[i]]++ % k;
      }
      for (int f = 0; f < k; ++f) {
        Fold fold;
        fold.train.features.resize(S);
        fold.test.features.resize(S);
        int n_test = static_cast<int>(std::count(fold_of.begin(), fold_of.end(), f));
        for (int s = 0; s < S; ++s) {
          fold.train.features[s].resize(ds.train.features[s].rows(), total - n_test);
          fold.test.features[s].resize(ds.train.features[s].rows(), n_test);
        }
        int a = 0, b = 0;
        for (int i = 0; i < total; ++i) {
          if (fold_of[i] == f) {
            for (int s = 0; s < S; ++s) fold.test.features[s].col(b) = column_at(s, i);
            fold.test.labels.push_back(labels[i]);
            ++b;
          } else {
            for (int s = 0; s < S; ++s) fold.train.features[s].col(a) = column_at(s, i);
            fold.train.labels.push_back(labels[i]);
            ++a;
          }
        }
        folds.push_back(std::move(fold));
      }
      break;
    }
  }
  return folds;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  if (config.methods.empty()) throw ConfigError("empty method list");
  for (Method m : config.methods)
    if (method_needs_tree(m) && !config.tree) throw ConfigError("tree required");

  SplitDataset dataset;
  if (config.synthetic) dataset = synth_generate(*config.synthetic);
  else if (config.manifest) dataset = load_dataset(*config.manifest);
  else throw ConfigError("config names neither a synthetic spec nor a manifest");

  std::vector<std::optional<Perturbation>> points = config.perturbations;
  if (points.empty()) points.push_back(std::nullopt);

  PipelineSettings pipeline;
  pipeline.lambda = config.lambda;
  pipeline.tree = config.tree;
  pipeline.solver = config.solver;
  pipeline.alternations = config.alternations;
  pipeline.fuzzifier = config.fuzzifier;

  const SplitDataset base = dataset;
  ExperimentResult result;
  for (size_t pt = 0; pt < points.size(); ++pt) {
    const auto folds = make_folds(base, config);
    for (size_t f = 0; f < folds.size(); ++f) {
      SplitDataset fold_ds;
      fold_ds.train = folds[f].train;
      fold_ds.test = folds[f].test;
      if (points[pt]) {
        const std::uint64_t seed =
            mix64(config.seed ^ mix64((pt + 1) * 1000003ull + f));
        fold_ds = perturb(fold_ds, *points[pt], seed);
      }
      const MultimodalDictionary dict = dictionary_from(fold_ds.train);
      const int n_test = fold_ds.test.count();
      for (Method method : config.methods) {
        std::vector<SamplePrediction> preds(n_test);
        std::vector<Eigen::VectorXd> mus(n_test);
        const bool weighted = method_is_weighted(method);
        parallel_for(n_test, [&](int i) {
          const MultimodalSample y = sample_at(fold_ds.test, i);
          const ClassificationResult r = classify_pipeline(dict, y, method, pipeline);
          preds[i] = {r.predicted, r.class_residuals};
          if (weighted && r.weights) mus[i] = r.weights->mu;
        });
        MetricsReport metrics = compute_metrics(preds, fold_ds.test.labels,
                                                config.positive_class,
                                                config.cmc_rank_budget);
        if (weighted && n_test > 0) {
          Eigen::VectorXd mean = Eigen::VectorXd::Zero(dict.modalities());
          for (const auto& mu : mus) mean += mu;
          metrics.mean_mu = mean / n_test;
        }
        result.reports.push_back({method_name(method), static_cast<int>(pt), points[pt],
                                  static_cast<int>(f), std::move(metrics)});
      }
    }
  }

  // fold means per (point, method), in report order
  for (size_t pt = 0; pt < points.size(); ++pt)
    for (Method method : config.methods) {
      ExperimentAggregate agg;
      agg.method = method_name(method);
      agg.point = static_cast<int>(pt);
      agg.perturbation = points[pt];
      int count = 0;
      Eigen::VectorXd mu_sum;
      int mu_count = 0;
      for (const auto& rep : result.reports) {
        if (rep.point != static_cast<int>(pt) || rep.method != agg.method) continue;
        agg.mean_ccr += rep.metrics.ccr;
        ++count;
        if (rep.metrics.mean_mu) {
          if (mu_count == 0) mu_sum = Eigen::VectorXd::Zero(rep.metrics.mean_mu->size());
          mu_sum += *rep.metrics.mean_mu;
          ++mu_count;
        }
      }
      if (count > 0) agg.mean_ccr /= count;
      if (mu_count > 0) agg.mean_mu = mu_sum / mu_count;
      result.aggregates.push_back(std::move(agg));
    }
  return result;
}

std::vector<TreeGroup> tree_groups_from_json(const nlohmann::json& j) {
  std::vector<TreeGroup> groups;
  try {
    for (const auto& g : j.at("groups")) {
      TreeGroup group;
      for (int m : g.at("members")) group.members.push_back(m - 1);
      group.weight = g.value("weight", 1.0);
      groups.push_back(std::move(group));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid tree description: ") + e.what());
  }
  return groups;
}

SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j) {
  SyntheticSpec spec;
  try {
    spec.classes = j.at("classes").get<int>();
    spec.modalities = j.at("modalities").get<int>();
    if (j.at("feature_dims").is_array())
      spec.feature_dims = j.at("feature_dims").get<std::vector<int>>();
    else
      spec.feature_dims = {j.at("feature_dims").get<int>()};
    spec.latent_dim = j.at("latent_dim").get<int>();
    spec.train_per_class = j.at("train_per_class").get<int>();
    spec.test_per_class = j.at("test_per_class").get<int>();
    if (j.contains("noise")) {
      if (j["noise"].is_array()) spec.noise = j["noise"].get<std::vector<double>>();
      else spec.noise = {j["noise"].get<double>()};
    }
    if (j.contains("test_noise")) {
      if (j["test_noise"].is_array())
        spec.test_noise = j["test_noise"].get<std::vector<double>>();
      else
        spec.test_noise = {j["test_noise"].get<double>()};
    }
    if (j.contains("correlated_groups"))
      for (const auto& g : j["correlated_groups"]) {
        std::vector<int> members;
        for (int m : g) members.push_back(m - 1);
        spec.correlated_groups.push_back(std::move(members));
      }
    spec.seed = j.value("seed", 0ull);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid synthetic spec: ") + e.what());
  }
  return spec;
}

namespace {

std::optional<Perturbation> perturbation_from_json(const nlohmann::json& j) {
  try {
    const std::string kind = j.value("kind", "none");
    if (kind == "none") return std::nullopt;
    Perturbation p;
    p.modality = j.at("modality").get<int>() - 1;
    if (kind == "gaussian") {
      p.kind = PerturbKind::Gaussian;
      p.sigma = j.at("sigma").get<double>();
    } else if (kind == "zero_block") {
      p.kind = PerturbKind::ZeroBlock;
      p.fraction = j.at("fraction").get<double>();
    } else {
      throw ConfigError("unknown perturbation kind: " + kind);
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid perturbation: ") + e.what());
  }
}

}  // namespace

ExperimentConfig experiment_config_from_json(const nlohmann::json& j,
                                             const std::filesystem::path& base_dir) {
  ExperimentConfig config;
  try {
    if (j.contains("schema") && j["schema"].get<int>() != 1)
      throw ConfigError("unsupported config schema");
    config.seed = j.value("seed", 0ull);
    if (j.contains("dataset")) {
      const auto& d = j["dataset"];
      if (d.contains("synthetic"))
        config.synthetic = synthetic_spec_from_json(d["synthetic"]);
      else if (d.contains("manifest"))
        config.manifest = base_dir / d["manifest"].get<std::string>();
    }
    for (const auto& tag : j.at("methods"))
      config.methods.push_back(parse_method(tag.get<std::string>()));
    config.lambda = j.value("lambda", 0.1);
    if (j.contains("tree")) {
      auto groups = tree_groups_from_json(j["tree"]);
      const double scale = j.value("weight_scale", 1.0);
      if (scale != 1.0)
        for (auto& g : groups)
          if (g.members.size() > 1) g.weight *= scale;
      int S = config.synthetic ? config.synthetic->modalities : 0;
      if (S == 0)
        for (const auto& g : groups)
          for (int m : g.members) S = std::max(S, m + 1);
      config.tree = validate_tree(std::move(groups), S);
    }
    if (j.contains("solver")) {
      const auto& s = j["solver"];
      config.solver.max_iterations = s.value("max_iterations", 500);
      config.solver.tolerance = s.value("tolerance", 1e-8);
      config.solver.step = s.value("step", 0.0);
      const std::string rule = s.value("step_rule", "fixed");
      if (rule == "fixed") config.solver.step_rule = SolverSettings::StepRule::Fixed;
      else if (rule == "backtracking")
        config.solver.step_rule = SolverSettings::StepRule::Backtracking;
      else throw ConfigError("unknown step rule: " + rule);
    }
    if (j.contains("fusion")) {
      config.alternations = j["fusion"].value("alternations", 10);
      config.fuzzifier = j["fusion"].value("fuzzifier", 2.0);
    }
    if (j.contains("perturbations"))
      for (const auto& p : j["perturbations"])
        config.perturbations.push_back(perturbation_from_json(p));
    if (j.contains("split")) {
      const std::string mode = j["split"].value("mode", "holdout");
      if (mode == "holdout") config.split = ExperimentConfig::SplitMode::Holdout;
      else if (mode == "kfold") config.split = ExperimentConfig::SplitMode::KFold;
      else if (mode == "two_way") config.split = ExperimentConfig::SplitMode::TwoWay;
      else throw ConfigError("unknown split mode: " + mode);
      config.folds = j["split"].value("folds", 2);
    }
    if (j.contains("positive_class"))
      config.positive_class = j["positive_class"].get<int>() - 1;
    config.cmc_rank_budget = j.value("cmc_rank_budget", 0);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid experiment config: ") + e.what());
  }
  return config;
}

nlohmann::json metrics_to_json(const MetricsReport& m) {
  nlohmann::json j;
  j["ccr"] = m.ccr;
  auto confusion = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.confusion.rows(); ++r) {
    auto row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.confusion.cols(); ++c) row.push_back(m.confusion(r, c));
    confusion.push_back(std::move(row));
  }
  j["confusion"] = std::move(confusion);
  j["cmc"] = m.cmc;
  if (m.hdr) j["hdr"] = *m.hdr;
  if (m.hfar) j["hfar"] = *m.hfar;
  if (m.mr) j["mr"] = *m.mr;
  if (m.mean_mu)
    j["mean_mu"] = std::vector<double>(m.mean_mu->data(), m.mean_mu->data() + m.mean_mu->size());
  return j;
}

nlohmann::json perturbation_to_json(const std::optional<Perturbation>& p) {
  if (!p) return nullptr;
  nlohmann::json j;
  j["modality"] = p->modality + 1;
  if (p->kind == PerturbKind::Gaussian) {
    j["kind"] = "gaussian";
    j["sigma"] = p->sigma;
  } else {
    j["kind"] = "zero_block";
    j["fraction"] = p->fraction;
  }
  return j;
}

nlohmann::json report_to_json(const ExperimentPointReport& r) {
  nlohmann::json j;
  j["schema"] = 1;
  j["method"] = r.method;
  j["point"] = r.point;
  j["perturbation"] = perturbation_to_json(r.perturbation);
  j["fold"] = r.fold;
  j["metrics"] = metrics_to_json(r.metrics);
  return j;
}

nlohmann::json summary_to_json(const ExperimentResult& result) {
  nlohmann::json j;
  j["schema"] = 1;
  auto aggregates = nlohmann::json::array();
  for (const auto& a : result.aggregates) {
    nlohmann::json e;
    e["method"] = a.method;
    e["point"] = a.point;
    e["perturbation"] = perturbation_to_json(a.perturbation);
    e["mean_ccr"] = a.mean_ccr;
    if (a.mean_mu)
      e["mean_mu"] = std::vector<double>(a.mean_mu->data(), a.mean_mu->data() + a.mean_mu->size());
    aggregates.push_back(std::move(e));
  }
  j["aggregates"] = std::move(aggregates);
  return j;
}

}  // namespace mmsrc
