#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "medlearn/learners.hpp"
#include "medlearn/rng.hpp"
#include "support/oracles.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

using namespace medlearn;

namespace {

Matrix random_matrix(Index n, Index d, std::uint64_t seed) {
  Rng rng(seed);
  Matrix X(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) X(i, j) = rng.normal();
  }
  return X;
}

}  // namespace

TEST_CASE("constant target yields a single leaf") {
  Matrix X = random_matrix(10, 3, 1);
  Vector y = Vector::Constant(10, 5.0);
  auto tree = fit_cart(X, y, {});
  CHECK(tree->is_leaf());
  CHECK(tree->value == 5.0);
  CHECK(predict(*tree, random_matrix(4, 3, 2)) == Vector::Constant(4, 5.0));
}

TEST_CASE("step function splits at the straddling midpoint") {
  Matrix X(8, 1);
  X << -4, -3, -2, -1, 0.5, 1, 2, 3;
  Vector y(8);
  y << 1, 1, 1, 1, 3, 3, 3, 3;
  auto tree = fit_cart(X, y, {});
  REQUIRE_FALSE(tree->is_leaf());
  CHECK(tree->split_column == 0);
  CHECK(tree->threshold == doctest::Approx(-0.25));  // midpoint of -1 and 0.5

  const auto oracle = test::brute_force_split(X, y);
  CHECK(tree->split_column == oracle.column);
  CHECK(tree->threshold == doctest::Approx(oracle.threshold));

  Eigen::RowVectorXd left(1), right(1);
  left << -1.0;
  right << 1.0;
  CHECK(predict_row(*tree, left) == 1.0);
  CHECK(predict_row(*tree, right) == 3.0);
}

TEST_CASE("root split matches exhaustive search on random instances") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    Rng rng(seed + 100);
    const Index n = 12 + static_cast<Index>(rng.uniform_int(18));
    Matrix X = random_matrix(n, 3, seed * 7 + 1);
    Vector y(n);
    for (Index i = 0; i < n; ++i) y[i] = rng.normal() + (X(i, 0) > 0 ? 1.0 : 0.0);

    auto tree = fit_cart(X, y, {});
    const auto oracle = test::brute_force_split(X, y);
    REQUIRE_FALSE(tree->is_leaf());
    CHECK(tree->split_column == oracle.column);
    CHECK(tree->threshold == doctest::Approx(oracle.threshold).epsilon(1e-12));
  }
}

TEST_CASE("permuting training rows leaves predictions unchanged") {
  Matrix X = random_matrix(40, 4, 5);
  Rng rng(6);
  Vector y(40);
  for (Index i = 0; i < 40; ++i) y[i] = X(i, 1) * 2.0 + rng.normal();

  std::vector<Index> perm(40);
  std::iota(perm.begin(), perm.end(), Index{0});
  for (Index i = 39; i > 0; --i) std::swap(perm[i], perm[rng.uniform_int(i + 1)]);
  Matrix Xp(40, 4);
  Vector yp(40);
  for (Index i = 0; i < 40; ++i) {
    Xp.row(i) = X.row(perm[i]);
    yp[i] = y[perm[i]];
  }

  CartParams params{-1, 4, 2};
  auto a = fit_cart(X, y, params);
  auto b = fit_cart(Xp, yp, params);
  Matrix probe = random_matrix(64, 4, 7);
  CHECK(predict(*a, probe) == predict(*b, probe));
}

TEST_CASE("tree predictions stay inside the training range") {
  Matrix X = random_matrix(60, 3, 8);
  Rng rng(9);
  Vector y(60);
  for (Index i = 0; i < 60; ++i) y[i] = rng.normal() * 3.0;
  auto tree = fit_cart(X, y, {});
  const Vector pred = predict(*tree, random_matrix(100, 3, 10));
  CHECK(pred.minCoeff() >= y.minCoeff());
  CHECK(pred.maxCoeff() <= y.maxCoeff());
}

TEST_CASE("forest predicts a constant target exactly") {
  Matrix X = random_matrix(30, 3, 11);
  Vector y = Vector::Constant(30, 2.25);
  ForestParams params;
  params.n_trees = 25;
  auto model = fit_random_forest(X, y, params, 3);
  CHECK(predict(model, random_matrix(10, 3, 12)) == Vector::Constant(10, 2.25));
}

TEST_CASE("forest recovers a linear signal out of sample") {
  const Index n = 200;
  Matrix X = random_matrix(n, 3, 13);
  Rng rng(14);
  Vector y(n);
  for (Index i = 0; i < n; ++i) y[i] = 2.0 * X(i, 0) + 0.1 * rng.normal();

  auto model = fit_random_forest(X, y, {}, 15);

  Matrix Xt = random_matrix(n, 3, 16);
  Vector yt(n);
  for (Index i = 0; i < n; ++i) yt[i] = 2.0 * Xt(i, 0) + 0.1 * rng.normal();
  const Vector pred = predict(model, Xt);
  const double ss_res = (yt - pred).squaredNorm();
  const double ss_tot = (yt.array() - yt.mean()).matrix().squaredNorm();
  CHECK(1.0 - ss_res / ss_tot >= 0.8);
}

TEST_CASE("forest fits are seed-deterministic and scheduling-independent") {
  Matrix X = random_matrix(80, 4, 17);
  Rng rng(18);
  Vector y(80);
  for (Index i = 0; i < 80; ++i) y[i] = X(i, 2) + rng.normal();
  ForestParams params;
  params.n_trees = 40;
  auto a = fit_random_forest(X, y, params, 99);
  auto b = fit_random_forest(X, y, params, 99);
  ForestParams parallel = params;
  parallel.jobs = 4;
  auto c = fit_random_forest(X, y, parallel, 99);
  Matrix probe = random_matrix(50, 4, 19);
  CHECK(predict(a, probe) == predict(b, probe));
  CHECK(predict(a, probe) == predict(c, probe));

  auto d = fit_random_forest(X, y, params, 100);
  CHECK(predict(a, probe) != predict(d, probe));
}

TEST_CASE("single full-depth boosting round interpolates distinct points") {
  Matrix X(4, 1);
  X << 1, 2, 3, 4;
  Vector y(4);
  y << 5, -1, 0.5, 2;
  BoostParams params;
  params.n_rounds = 1;
  params.learning_rate = 1.0;
  params.max_depth = -1;
  auto model = fit_gradient_boost(X, y, params, 0);
  CHECK(predict(model, X).isApprox(y, 1e-12));
}

TEST_CASE("boosting a constant target keeps every residual tree at zero") {
  Matrix X = random_matrix(20, 2, 20);
  Vector y = Vector::Constant(20, -3.5);
  BoostParams params;
  params.n_rounds = 5;
  auto model = fit_gradient_boost(X, y, params, 0);
  CHECK(model.base_score == -3.5);
  CHECK(predict(model, X) == Vector::Constant(20, -3.5));
}

TEST_CASE("boosting beats a single tree of the same depth on train RMSE") {
  const Index n = 500;
  Matrix X = random_matrix(n, 4, 21);
  Rng rng(22);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    double kappa = 0.0;
    for (int j = 0; j < 2; ++j) kappa += X(i, j) > 0 ? X(i, j) : 0.0;
    y[i] = 0.5 * (X(i, 0) + X(i, 1)) + X(i, 2) + X(i, 3) + 0.5 * kappa + 0.1 * rng.normal();
  }
  BoostParams bp;
  bp.max_depth = 4;
  bp.n_rounds = 50;
  auto boost = fit_gradient_boost(X, y, bp, 0);
  auto cart = fit_cart(X, y, {4, 2, 1});
  const double boost_rmse = std::sqrt((y - predict(boost, X)).squaredNorm() / n);
  const double cart_rmse = std::sqrt((y - predict(*cart, X)).squaredNorm() / n);
  CHECK(boost_rmse < cart_rmse);
}

TEST_CASE("forest prediction is the mean over trees") {
  // Three stumps that each predict a different constant on the same input.
  Matrix X(2, 1);
  X << 0.0, 1.0;
  ForestModel model;
  model.params.n_trees = 3;
  for (double v : {1.0, 2.0, 3.0}) {
    auto leaf = std::make_unique<TreeNode>();
    leaf->value = v;
    leaf->n_samples = 2;
    model.trees.push_back(std::move(leaf));
  }
  CHECK(predict(model, X) == Vector::Constant(2, 2.0));
}

TEST_CASE("column-count mismatch is rejected at prediction time") {
  Matrix X = random_matrix(30, 3, 23);
  Rng rng(24);
  Vector y(30);
  for (Index i = 0; i < 30; ++i) y[i] = rng.normal();
  LearnerSpec spec;
  spec.kind = LearnerKind::cart;
  auto model = fit_model(X, y, spec, ModelRole::outcome_control);
  CHECK_THROWS_AS(model->predict(random_matrix(5, 4, 25)), ValidationError);
}

TEST_CASE("empty input and bad parameters error out") {
  CHECK_THROWS_AS(fit_cart(Matrix(0, 0), Vector(0), {}), ValidationError);
  Matrix X = random_matrix(5, 2, 26);
  Vector y = Vector::Zero(5);
  ForestParams fp;
  fp.n_trees = 0;
  CHECK_THROWS_AS(fit_random_forest(X, y, fp, 0), ConfigError);
  BoostParams bp;
  bp.learning_rate = 0.0;
  CHECK_THROWS_AS(fit_gradient_boost(X, y, bp, 0), ConfigError);
}

TEST_CASE("model dump lists one node per line with parent links") {
  Matrix X(8, 1);
  X << -4, -3, -2, -1, 1, 2, 3, 4;
  Vector y(8);
  y << 1, 1, 1, 1, 3, 3, 3, 3;
  auto tree = fit_cart(X, y, {});
  std::ostringstream out;
  dump_tree(*tree, out);
  std::istringstream lines(out.str());
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    CHECK(std::count(line.begin(), line.end(), '\t') == 7);
    ++count;
  }
  CHECK(count == 3);  // root + two leaves
  CHECK(out.str().find("split") != std::string::npos);
  CHECK(out.str().find("leaf") != std::string::npos);
}
