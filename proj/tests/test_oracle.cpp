#include <random>

#include "doctest.h"
#include "support/fixtures.hpp"
#include "support/oracle.hpp"

// The reference solver is itself checked against hand-computable cases.

TEST_CASE("reference solver: identity and diagonal designs") {
  const std::vector<double> id = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  const std::vector<double> y = {4, -2, 7};
  CHECK(diplo::oracle::pseudo_inverse(id, 3, 3, y, 0.0) == std::vector<double>{4, -2, 7});
  const auto r = diplo::oracle::pseudo_inverse(id, 3, 3, y, 1.0 / 3.0);  // n*lambda = 1
  CHECK(r[0] == doctest::Approx(2.0));
  CHECK(r[2] == doctest::Approx(3.5));
  const std::vector<double> diag = {2, 0, 0, 0.5};
  const auto d = diplo::oracle::pseudo_inverse(diag, 2, 2, std::vector<double>{6, 1}, 0.0);
  CHECK(d[0] == doctest::Approx(3.0));
  CHECK(d[1] == doctest::Approx(2.0));
}

TEST_CASE("reference solver: minimum norm on duplicated columns") {
  // x1 == x2: every theta with t1 + t2 = 2 fits; the minimum-norm one is (1, 1).
  const std::vector<double> rows = {1, 1, 2, 2, -1, -1};
  const auto t = diplo::oracle::pseudo_inverse(rows, 3, 2, std::vector<double>{2, 4, -2}, 0.0);
  CHECK(t[0] == doctest::Approx(1.0));
  CHECK(t[1] == doctest::Approx(1.0));
}

TEST_CASE("reference solver: least-squares residual is orthogonal to the columns") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = diplo::testing::pick(rng, 6, 30), d = diplo::testing::pick(rng, 1, 5);
    std::vector<double> rows(n * d), y(n);
    for (auto& v : rows) v = diplo::testing::uniform(rng, -1, 1);
    for (auto& v : y) v = diplo::testing::uniform(rng, -1, 1);
    const auto t = diplo::oracle::pseudo_inverse(rows, n, d, y, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
      double g = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double fit = 0.0;
        for (std::size_t k = 0; k < d; ++k) fit += rows[i * d + k] * t[k];
        g += rows[i * d + j] * (y[i] - fit);
      }
      CHECK(std::abs(g) <= 1e-10);
    }
  }
}

TEST_CASE("reference solver: bad arguments") {
  CHECK_THROWS_AS(diplo::oracle::pseudo_inverse(std::vector<double>{1, 2}, 2, 2, std::vector<double>{1, 2}, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(diplo::oracle::pseudo_inverse(std::vector<double>{1}, 1, 1, std::vector<double>{1}, -1.0),
                  std::invalid_argument);
}
