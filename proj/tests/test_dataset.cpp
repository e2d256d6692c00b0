#include <random>

#include <doctest.h>

#include "gpsel/dataset.hpp"
#include "gpsel/errors.hpp"
#include "test_util.hpp"

using namespace gpsel;

TEST_SUITE("dataset") {

TEST_CASE("from_raw standardizes columns and centers the target") {
  std::mt19937_64 rng(1);
  Eigen::MatrixXd x = test::random_matrix(rng, 50, 3);
  x.col(1) = 5.0 * x.col(1).array() + 100.0;
  Eigen::VectorXd y = 3.0 * test::random_vector(rng, 50).array() + 7.0;

  const Dataset d = Dataset::from_raw(x, y);
  d.validate();
  for (int j = 0; j < 3; ++j) {
    CHECK(std::abs(d.x.col(j).mean()) < 1e-12);
    const double var = (d.x.col(j).array() - d.x.col(j).mean()).square().sum() / 49.0;
    CHECK(var == doctest::Approx(1.0).epsilon(1e-10));
  }
  CHECK(std::abs(d.y.mean()) < 1e-12);
  CHECK((d.raw_x() - x).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((d.raw_y() - y).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("constant columns are rejected by name") {
  Eigen::MatrixXd x(5, 2);
  x.setRandom();
  x.col(1).setConstant(2.0);
  Eigen::VectorXd y(5);
  y << 1, 2, 3, 4, 5;
  try {
    Dataset::from_raw(x, y, {"a", "b"});
    FAIL("expected InvalidArgument");
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).find("'b'") != std::string::npos);
  }
}

TEST_CASE("non-finite entries are rejected") {
  Eigen::MatrixXd x(3, 1);
  x << 1.0, 2.0, std::numeric_limits<double>::quiet_NaN();
  Eigen::VectorXd y(3);
  y << 1, 2, 3;
  CHECK_THROWS_AS(Dataset::from_raw(x, y), InvalidArgument);
}

TEST_CASE("split partitions the rows and reuses training statistics") {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd x = test::random_matrix(rng, 40, 2);
  const Eigen::VectorXd y = test::random_vector(rng, 40);
  const Dataset d = Dataset::from_raw(x, y);

  auto [train, test] = split(d, 25, 99);
  CHECK(train.n() == 25);
  CHECK(test.n() == 15);
  CHECK(train.self_standardized);
  CHECK_FALSE(test.self_standardized);

  // Same seed gives the same split; a different seed does not.
  auto [train2, test2] = split(d, 25, 99);
  CHECK((train.x - train2.x).cwiseAbs().maxCoeff() == 0.0);
  CHECK((test.y - test2.y).cwiseAbs().maxCoeff() == 0.0);
  auto [train3, test3] = split(d, 25, 100);
  CHECK((train.x - train3.x).cwiseAbs().maxCoeff() > 0.0);

  // Raw rows of train and test together recover the raw table.
  Eigen::MatrixXd all_raw(40, 2);
  all_raw << train.raw_x(), test.raw_x();
  std::vector<double> original(x.data(), x.data() + x.size());
  std::vector<double> recovered(all_raw.data(), all_raw.data() + all_raw.size());
  std::sort(original.begin(), original.end());
  std::sort(recovered.begin(), recovered.end());
  for (std::size_t i = 0; i < original.size(); ++i) {
    CHECK(original[i] == doctest::Approx(recovered[i]).epsilon(1e-10));
  }
}

TEST_CASE("split validates n_train") {
  std::mt19937_64 rng(3);
  const Dataset d = Dataset::from_raw(test::random_matrix(rng, 10, 1), test::random_vector(rng, 10));
  CHECK_THROWS_AS(split(d, 10, 0), InvalidArgument);
  CHECK_THROWS_AS(split(d, 1, 0), InvalidArgument);
}

}  // TEST_SUITE
