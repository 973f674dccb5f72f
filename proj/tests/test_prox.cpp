#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "mmsrc/oracle.hpp"
#include "mmsrc/prox.hpp"
#include "test_util.hpp"

using namespace mmsrc;

TEST_CASE("scalar soft threshold") {
  CHECK(soft_threshold_scalar(0.5, 1.0) == 0.0);
  CHECK(soft_threshold_scalar(-2.0, 1.0) == -1.0);
  CHECK(soft_threshold_scalar(3.0, 0.0) == 3.0);
  CHECK_THROWS_AS(soft_threshold_scalar(1.0, -0.1), ConfigError);
}

TEST_CASE("group soft threshold") {
  Eigen::VectorXd v(2);
  v << 3, 4;
  CHECK(group_soft_threshold(v, 5.0).norm() == 0.0);
  Eigen::VectorXd shrunk = group_soft_threshold(v, 2.5);
  CHECK(shrunk[0] == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(shrunk[1] == doctest::Approx(2.0).epsilon(1e-12));
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
  CHECK(group_soft_threshold(zero, 1.0).norm() == 0.0);
  CHECK((group_soft_threshold(v, 0.0) - v).norm() == 0.0);
}

TEST_CASE("prox_tree worked example matches the sequential characterization") {
  auto tree = validate_tree({{{0}, 1.0}, {{1}, 1.0}, {{0, 1}, 1.0}}, 2);
  Eigen::MatrixXd v(1, 2);
  v << 3, 4;
  Eigen::MatrixXd u = prox_tree(v, tree, 1.0);
  // singleton pass gives (2,3); the root pass scales by 1 - 1/sqrt(13)
  const double scale = 1.0 - 1.0 / std::sqrt(13.0);
  CHECK(u(0, 0) == doctest::Approx(2.0 * scale).epsilon(1e-14));
  CHECK(u(0, 1) == doctest::Approx(3.0 * scale).epsilon(1e-14));
  CHECK(u(0, 0) == doctest::Approx(1.44529).epsilon(1e-5));
  CHECK(u(0, 1) == doctest::Approx(2.16795).epsilon(1e-5));

  // cross-check against the numeric oracle
  Eigen::VectorXd row = oracle::prox_numeric(v.row(0).transpose(), tree, 1.0);
  CHECK(std::abs(row[0] - u(0, 0)) <= 1e-6);
  CHECK(std::abs(row[1] - u(0, 1)) <= 1e-6);
}

TEST_CASE("prox_tree trivial cases") {
  std::mt19937_64 rng(5);
  auto tree = testutil::random_tree(3, rng);
  Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(4, 3);
  CHECK(prox_tree(zero, tree, 0.7).cwiseAbs().maxCoeff() == 0.0);

  // single root group must reproduce group soft thresholding
  auto root_only = validate_tree({{{0, 1}, 1.0}}, 2);
  Eigen::MatrixXd v(1, 2);
  v << 3, 4;
  Eigen::MatrixXd u = prox_tree(v, root_only, 2.5);
  CHECK(u(0, 0) == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(u(0, 1) == doctest::Approx(2.0).epsilon(1e-14));

  // singleton-only groups reduce to the elementwise threshold
  auto singletons = validate_tree({{{0}, 1.0}, {{1}, 1.0}}, 2);
  Eigen::MatrixXd w(1, 2);
  w << 0.5, -2.0;
  Eigen::MatrixXd t = prox_tree(w, singletons, 1.0);
  CHECK(t(0, 0) == 0.0);
  CHECK(t(0, 1) == doctest::Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("prox_joint examples and reduction identity") {
  Eigen::MatrixXd v(2, 2);
  v << 3, 4, 0.3, 0.4;
  Eigen::MatrixXd u = prox_joint(v, 2.5);
  CHECK(u(0, 0) == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(u(0, 1) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(u(1, 0) == 0.0);
  CHECK(u(1, 1) == 0.0);
  CHECK((prox_joint(v, 0.0) - v).cwiseAbs().maxCoeff() == 0.0);

  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const int S = 2 + static_cast<int>(rng() % 3);
    Eigen::MatrixXd m = testutil::random_matrix(5, S, rng);
    const double tau = 0.1 + 0.5 * (trial % 5);
    std::vector<int> all(S);
    for (int i = 0; i < S; ++i) all[i] = i;
    auto root_only = validate_tree({{all, 1.0}}, S);
    CHECK((prox_joint(m, tau) - prox_tree(m, root_only, tau)).cwiseAbs().maxCoeff() <=
          1e-12);
  }
}

TEST_CASE("dual_norm_joint") {
  Eigen::MatrixXd g(2, 2);
  g << 3, 4, 1, 0;
  CHECK(dual_norm_joint(g) == doctest::Approx(5.0));
  CHECK(dual_norm_joint(Eigen::MatrixXd::Zero(3, 2)) == 0.0);
  Eigen::MatrixXd single(1, 2);
  single << -2, 3;
  CHECK(dual_norm_joint(single) == doctest::Approx(std::sqrt(13.0)));
}

TEST_CASE("prox_tree is nonexpansive") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const int S = 1 + static_cast<int>(rng() % 4);
    auto tree = testutil::random_tree(S, rng);
    Eigen::MatrixXd v = testutil::random_matrix(4, S, rng, 2.0);
    Eigen::MatrixXd w = testutil::random_matrix(4, S, rng, 2.0);
    const double beta = 0.1 + (trial % 7) * 0.3;
    const double lhs = (prox_tree(v, tree, beta) - prox_tree(w, tree, beta)).norm();
    CHECK(lhs <= (v - w).norm() + 1e-9);
  }
}

TEST_CASE("prox_tree output minimizes the prox objective") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> gauss(0.0, 0.3);
  for (int trial = 0; trial < 5; ++trial) {
    const int S = 2 + static_cast<int>(rng() % 3);
    auto tree = testutil::random_tree(S, rng);
    const double beta = 0.5 + 0.2 * trial;
    Eigen::VectorXd v = testutil::random_matrix(S, 1, rng, 1.5);
    Eigen::MatrixXd asrow = v.transpose();
    Eigen::VectorXd u = prox_tree(asrow, tree, beta).row(0).transpose();
    const double fu = oracle::prox_objective(u, v, tree, beta);
    for (int k = 0; k < 100; ++k) {
      Eigen::VectorXd noisy = u;
      for (Eigen::Index i = 0; i < noisy.size(); ++i) noisy[i] += gauss(rng);
      CHECK(fu <= oracle::prox_objective(noisy, v, tree, beta) + 1e-12);
    }
  }
}

TEST_CASE("zero pattern of each row is a union of groups") {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 40; ++trial) {
    const int S = 2 + static_cast<int>(rng() % 3);
    auto tree = testutil::random_tree(S, rng);
    Eigen::MatrixXd v = testutil::random_matrix(6, S, rng);
    Eigen::MatrixXd u = prox_tree(v, tree, 0.2 + 0.4 * (trial % 4));
    for (Eigen::Index j = 0; j < u.rows(); ++j) {
      std::vector<bool> zero(S), covered(S, false);
      for (int s = 0; s < S; ++s) zero[s] = std::abs(u(j, s)) <= 1e-10;
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

TEST_CASE("row independence: permuting rows permutes the output") {
  std::mt19937_64 rng(12);
  const int S = 3;
  auto tree = testutil::random_tree(S, rng);
  Eigen::MatrixXd v = testutil::random_matrix(5, S, rng);
  Eigen::MatrixXd u = prox_tree(v, tree, 0.8);
  std::vector<int> perm = {4, 2, 0, 3, 1};
  Eigen::MatrixXd vp(5, S), up_expected(5, S);
  for (int j = 0; j < 5; ++j) {
    vp.row(j) = v.row(perm[j]);
    up_expected.row(j) = u.row(perm[j]);
  }
  CHECK((prox_tree(vp, tree, 0.8) - up_expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("disjoint groups may be processed in either order") {
  // both storage orders of the two singletons are valid
  TreeGroupStructure a, b;
  a.modalities = b.modalities = 2;
  a.groups = {{{0}, 1.0}, {{1}, 2.0}, {{0, 1}, 0.5}};
  b.groups = {{{1}, 2.0}, {{0}, 1.0}, {{0, 1}, 0.5}};
  std::mt19937_64 rng(13);
  Eigen::MatrixXd v = testutil::random_matrix(6, 2, rng, 2.0);
  CHECK((prox_tree(v, a, 0.9) - prox_tree(v, b, 0.9)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("prox problem validation") {
  auto tree = validate_tree({{{0}, 1.0}}, 1);
  Eigen::MatrixXd v(1, 1);
  v << 1;
  CHECK_THROWS_AS(prox_tree(v, tree, 0.0), ConfigError);
  CHECK_THROWS_AS(prox_tree(v, tree, -1.0), ConfigError);
  Eigen::MatrixXd wide(1, 2);
  wide << 1, 2;
  CHECK_THROWS_AS(prox_tree(wide, tree, 1.0), ConfigError);

  ProxProblem problem{v, tree, 2.0};
  CHECK((prox_tree(problem) - prox_tree(v, tree, 2.0)).cwiseAbs().maxCoeff() == 0.0);
}
