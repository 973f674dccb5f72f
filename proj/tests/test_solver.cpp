#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "mmsrc/prox.hpp"
#include "mmsrc/solver.hpp"
#include "test_util.hpp"

using namespace mmsrc;

namespace {

MultimodalDictionary orthonormal_dictionary(int n, int S) {
  // identity columns: one class per atom keeps build_dictionary happy
  std::vector<std::vector<Eigen::MatrixXd>> samples(S);
  for (int s = 0; s < S; ++s)
    for (int c = 0; c < n; ++c)
      samples[s].push_back(Eigen::MatrixXd::Identity(n, n).col(c));
  return build_dictionary(samples);
}

}  // namespace

TEST_CASE("objective of zero coefficients is the sample energy") {
  std::mt19937_64 rng(21);
  MultimodalDictionary dict = testutil::random_dictionary(6, 4, 2, 3, rng);
  MultimodalSample y = testutil::random_sample(dict, rng);
  CoefficientMatrix A = CoefficientMatrix::Zero(dict.atoms(), dict.modalities());

  double expected = 0.0;
  for (int s = 0; s < 3; ++s) expected += 0.5 * y[s].squaredNorm();
  CHECK(objective(A, dict, y, SparsityPrior::joint(1.0)) ==
        doctest::Approx(expected).epsilon(1e-14));

  Eigen::VectorXd w(3);
  w << 0.25, 1.0, 4.0;
  double weighted = 0.0;
  for (int s = 0; s < 3; ++s) weighted += 0.5 * w[s] * y[s].squaredNorm();
  CHECK(objective(A, dict, y, SparsityPrior::joint(1.0), &w) ==
        doctest::Approx(weighted).epsilon(1e-14));
}

TEST_CASE("objective with one dense row and zero residual is the row norm") {
  std::mt19937_64 rng(22);
  MultimodalDictionary dict = testutil::random_dictionary(6, 3, 2, 2, rng);
  CoefficientMatrix A = CoefficientMatrix::Zero(dict.atoms(), 2);
  A(2, 0) = 3.0;
  A(2, 1) = 4.0;
  MultimodalSample y;
  for (int s = 0; s < 2; ++s) y.push_back(dict.features[s] * A.col(s));
  CHECK(objective(A, dict, y, SparsityPrior::joint(1.0)) ==
        doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("tree penalty with a root-only tree equals the joint penalty") {
  std::mt19937_64 rng(23);
  const int S = 3;
  std::vector<int> all = {0, 1, 2};
  auto root_only = validate_tree({{all, 1.0}}, S);
  auto joint = SparsityPrior::joint(1.0);
  auto tree = SparsityPrior::tree_structured(1.0, root_only);
  for (int trial = 0; trial < 20; ++trial) {
    CoefficientMatrix A = testutil::random_matrix(7, S, rng);
    CHECK(tree.penalty_value(A) == doctest::Approx(joint.penalty_value(A)).epsilon(1e-14));
  }
}

TEST_CASE("grad_f closed forms") {
  std::mt19937_64 rng(24);
  MultimodalDictionary dict = testutil::random_dictionary(5, 4, 2, 2, rng);
  MultimodalSample y = testutil::random_sample(dict, rng);

  CoefficientMatrix zero = CoefficientMatrix::Zero(dict.atoms(), 2);
  CoefficientMatrix G = grad_f(zero, dict, y);
  for (int s = 0; s < 2; ++s)
    CHECK((G.col(s) + dict.features[s].transpose() * y[s]).cwiseAbs().maxCoeff() <= 1e-14);

  // exact representation kills the gradient
  CoefficientMatrix A = testutil::random_matrix(dict.atoms(), 2, rng);
  MultimodalSample exact;
  for (int s = 0; s < 2; ++s) exact.push_back(dict.features[s] * A.col(s));
  CHECK(grad_f(A, dict, exact).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("grad_f matches central finite differences") {
  std::mt19937_64 rng(25);
  for (int trial = 0; trial < 6; ++trial) {
    MultimodalDictionary dict = testutil::random_dictionary(5, 3, 2, 2, rng);
    MultimodalSample y = testutil::random_sample(dict, rng);
    CoefficientMatrix A = testutil::random_matrix(dict.atoms(), 2, rng);
    Eigen::VectorXd w(2);
    w << 0.3 + (trial % 3), 1.7;
    const Eigen::VectorXd* weights = trial % 2 ? &w : nullptr;

    CoefficientMatrix G = grad_f(A, dict, y, weights);
    const SparsityPrior prior = SparsityPrior::joint(1.0);  // penalty cancels in f
    const double h = 1e-6;
    CoefficientMatrix fd(A.rows(), A.cols());
    for (Eigen::Index j = 0; j < A.rows(); ++j)
      for (Eigen::Index s = 0; s < A.cols(); ++s) {
        CoefficientMatrix up = A, dn = A;
        up(j, s) += h;
        dn(j, s) -= h;
        const double fu = objective(up, dict, y, prior, weights) -
                          prior.lambda * prior.penalty_value(up);
        const double fdn = objective(dn, dict, y, prior, weights) -
                           prior.lambda * prior.penalty_value(dn);
        fd(j, s) = (fu - fdn) / (2 * h);
      }
    CHECK((fd - G).norm() / std::max(G.norm(), 1e-12) < 1e-5);
  }
}

TEST_CASE("lipschitz_step closed forms") {
  CHECK(lipschitz_step(orthonormal_dictionary(4, 2)) == doctest::Approx(1.0).epsilon(1e-9));

  // 2*I columns normalize to I under build_dictionary; assemble directly
  MultimodalDictionary dict;
  dict.features = {2.0 * Eigen::MatrixXd::Identity(3, 3)};
  dict.labels = {0, 1, 2};
  dict.class_counts = {1, 1, 1};
  CHECK(lipschitz_step(dict) == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("lipschitz_step matches a dense spectral decomposition") {
  std::mt19937_64 rng(26);
  for (int trial = 0; trial < 8; ++trial) {
    MultimodalDictionary dict = testutil::random_dictionary(6, 5, 2, 2, rng);
    double L_dense = 0.0;
    for (const auto& X : dict.features) {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(X);
      const double smax = svd.singularValues()[0];
      L_dense = std::max(L_dense, smax * smax);
    }
    CHECK(std::abs(1.0 / lipschitz_step(dict) - L_dense) <= 1e-6 * L_dense);
  }
}

TEST_CASE("solve returns the exact zero solution above the dual norm") {
  std::mt19937_64 rng(27);
  for (int trial = 0; trial < 5; ++trial) {
    MultimodalDictionary dict = testutil::random_dictionary(6, 4, 2, 3, rng);
    MultimodalSample y = testutil::random_sample(dict, rng);
    CoefficientMatrix zero = CoefficientMatrix::Zero(dict.atoms(), 3);
    const double bound = dual_norm_joint(grad_f(zero, dict, y));
    SolveResult r = solve(dict, y, SparsityPrior::joint(bound * 1.0000001), {});
    CHECK(r.coefficients.cwiseAbs().maxCoeff() == 0.0);
    CHECK(r.objective == objective(zero, dict, y, SparsityPrior::joint(bound * 1.0000001)));
  }
}

TEST_CASE("solve approaches least squares for vanishing lambda") {
  const int n = 5;
  MultimodalDictionary dict = orthonormal_dictionary(n, 2);
  std::mt19937_64 rng(28);
  MultimodalSample y = testutil::random_sample(dict, rng);
  SolverSettings settings;
  settings.max_iterations = 5000;
  settings.tolerance = 1e-14;
  SolveResult r = solve(dict, y, SparsityPrior::joint(1e-12), settings);
  for (int s = 0; s < 2; ++s)
    CHECK((r.coefficients.col(s) - dict.features[s].transpose() * y[s]).cwiseAbs().maxCoeff() <=
          1e-6);
}

TEST_CASE("solve is deterministic bitwise") {
  std::mt19937_64 rng(29);
  MultimodalDictionary dict = testutil::random_dictionary(6, 4, 2, 3, rng);
  MultimodalSample y = testutil::random_sample(dict, rng);
  auto tree = testutil::random_tree(3, rng);
  SolveResult a = solve(dict, y, SparsityPrior::tree_structured(0.1, tree), {});
  SolveResult b = solve(dict, y, SparsityPrior::tree_structured(0.1, tree), {});
  REQUIRE(a.trace.size() == b.trace.size());
  for (size_t i = 0; i < a.trace.size(); ++i) CHECK(a.trace[i] == b.trace[i]);
  CHECK((a.coefficients - b.coefficients).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.iterations == static_cast<int>(a.trace.size()));
}

TEST_CASE("final objective never exceeds the initial objective") {
  std::mt19937_64 rng(30);
  for (int trial = 0; trial < 6; ++trial) {
    MultimodalDictionary dict = testutil::random_dictionary(5, 3, 2, 2, rng);
    MultimodalSample y = testutil::random_sample(dict, rng);
    CoefficientMatrix init = testutil::random_matrix(dict.atoms(), 2, rng, 2.0);
    const SparsityPrior prior = SparsityPrior::joint(0.05 + 0.2 * trial);
    SolveResult r = solve(dict, y, prior, {}, nullptr, &init);
    CHECK(r.objective <= objective(init, dict, y, prior) + 1e-12);
    CHECK(r.objective == doctest::Approx(objective(r.coefficients, dict, y, prior))
                             .epsilon(1e-12));
  }
}

TEST_CASE("backtracking accepts only sufficient-decrease steps") {
  std::mt19937_64 rng(31);
  MultimodalDictionary dict = testutil::random_dictionary(6, 4, 2, 2, rng);
  MultimodalSample y = testutil::random_sample(dict, rng);
  const SparsityPrior prior = SparsityPrior::joint(0.1);

  auto smooth = [&](const CoefficientMatrix& A) {
    return objective(A, dict, y, prior) - prior.lambda * prior.penalty_value(A);
  };

  SolverSettings settings;
  settings.step_rule = SolverSettings::StepRule::Backtracking;
  settings.step = 64.0;  // deliberately too large; the line search must shrink it
  int checked = 0;
  settings.observer = [&](const SolveIteration& it) {
    const CoefficientMatrix d = it.iterate - it.extrapolated;
    const CoefficientMatrix g = grad_f(it.extrapolated, dict, y);
    const double quad = smooth(it.extrapolated) + (g.array() * d.array()).sum() +
                        d.squaredNorm() / (2.0 * it.step);
    CHECK(smooth(it.iterate) <= quad + 1e-10 * std::max(1.0, std::abs(quad)));
    ++checked;
  };
  SolveResult r = solve(dict, y, prior, settings);
  CHECK(checked == r.iterations);

  // fixed-step run from the same data agrees on the minimum
  SolverSettings fixed;
  fixed.max_iterations = 3000;
  fixed.tolerance = 1e-12;
  SolveResult rf = solve(dict, y, prior, fixed);
  CHECK(r.objective == doctest::Approx(rf.objective).epsilon(1e-6));
}

TEST_CASE("joint solutions have row-dense support") {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 5; ++trial) {
    MultimodalDictionary dict = testutil::random_dictionary(6, 5, 2, 3, rng);
    MultimodalSample y = testutil::random_sample(dict, rng);
    SolveResult r = solve(dict, y, SparsityPrior::joint(0.3), {});
    for (Eigen::Index j = 0; j < r.coefficients.rows(); ++j) {
      const auto row = r.coefficients.row(j);
      const bool any_zero = (row.cwiseAbs().array() <= 1e-10).any();
      const bool all_zero = (row.cwiseAbs().array() <= 1e-10).all();
      CHECK((all_zero || !any_zero));
    }
  }
}

TEST_CASE("tree solutions keep hierarchical zero patterns") {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 5; ++trial) {
    const int S = 3;
    auto tree = testutil::random_tree(S, rng);
    MultimodalDictionary dict = testutil::random_dictionary(6, 5, 2, S, rng);
    MultimodalSample y = testutil::random_sample(dict, rng);
    SolveResult r = solve(dict, y, SparsityPrior::tree_structured(0.3, tree), {});
    for (Eigen::Index j = 0; j < r.coefficients.rows(); ++j) {
      std::vector<bool> zero(S), covered(S, false);
      for (int s = 0; s < S; ++s) zero[s] = std::abs(r.coefficients(j, s)) <= 1e-10;
      for (const auto& g : tree.groups) {
        bool all_zero = true;
        for (int m : g.members) all_zero = all_zero && zero[m];
        if (all_zero)
          for (int m : g.members) covered[m] = true;
      }
      for (int s = 0; s < S; ++s) CHECK(zero[s] == covered[s]);
    }
  }
}

TEST_CASE("settings are validated") {
  std::mt19937_64 rng(34);
  MultimodalDictionary dict = testutil::random_dictionary(4, 2, 2, 2, rng);
  MultimodalSample y = testutil::random_sample(dict, rng);
  SolverSettings bad;
  bad.tolerance = 0.0;
  CHECK_THROWS_AS(solve(dict, y, SparsityPrior::joint(0.1), bad), ConfigError);
  CHECK_THROWS_AS(SparsityPrior::joint(0.0), ConfigError);
  CHECK_THROWS_AS(SparsityPrior::l1_per_modality(-1.0), ConfigError);
}

TEST_CASE("a divergent fixed step is reported, not returned") {
  std::mt19937_64 rng(35);
  MultimodalDictionary dict = testutil::random_dictionary(6, 4, 2, 2, rng);
  MultimodalSample y = testutil::random_sample(dict, rng);
  SolverSettings wild;
  wild.step = 1e6;  // far beyond 2/L
  wild.max_iterations = 2000;
  CHECK_THROWS_WITH_AS(solve(dict, y, SparsityPrior::joint(1e-6), wild),
                       doctest::Contains("non-finite"), DataError);
}
