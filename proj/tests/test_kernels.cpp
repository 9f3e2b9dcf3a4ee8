#include <random>

#include "doctest.h"
#include "diplo/kernels.hpp"
#include "support/fixtures.hpp"

using namespace diplo;
using namespace diplo::kernels;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = diplo::testing::uniform(rng, -3, 3);
  return v;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("normal equations by hand") {
  const std::vector<double> x = {1, 2, 3, 4};
  const std::vector<double> y = {1, -1};
  const auto ne = serial::normal_equations({x, 2, 2}, y);
  CHECK(ne.gram == std::vector<double>{10, 14, 14, 20});
  CHECK(ne.rhs == std::vector<double>{-2, -2});
}

TEST_CASE("discounted sums and row dots by hand") {
  const std::vector<double> states = {1, 10, 2, 20, 3, 30, 5, 50};
  const std::vector<std::size_t> offsets = {0, 3, 3, 4};  // lengths 3, 0, 1
  const auto s = serial::discounted_sums({{states, 4, 2}, offsets}, 0.5);
  CHECK(s == std::vector<double>{2.75, 27.5, 0, 0, 5, 50});
  const std::vector<double> theta = {1, -0.1};
  CHECK(serial::row_dots({states, 4, 2}, theta) == std::vector<double>{0, 0, 0, 0});
}

TEST_CASE("parallel kernels agree with the serial reference") {
  std::mt19937_64 rng(13);
  for (std::size_t n : {0ul, 1ul, 255ul, 256ul, 257ul, 5000ul}) {
    const std::size_t d = 7;
    const auto x = random_vec(rng, n * d), y = random_vec(rng, n), theta = random_vec(rng, d);
    const RowsView view{x, n, d};
    const auto a = serial::normal_equations(view, y), b = parallel::normal_equations(view, y);
    CHECK(max_diff(a.gram, b.gram) <= 1e-9);
    CHECK(max_diff(a.rhs, b.rhs) <= 1e-9);
    CHECK(serial::row_dots(view, theta) == parallel::row_dots(view, theta));

    std::vector<std::size_t> offsets = {0};
    while (offsets.back() < n) offsets.push_back(std::min(n, offsets.back() + diplo::testing::pick(rng, 0, 20)));
    const Sequences seqs{view, offsets};
    CHECK(max_diff(serial::discounted_sums(seqs, 0.9), parallel::discounted_sums(seqs, 0.9)) <= 1e-12);
  }
}

TEST_CASE("parallel normal equations do not depend on the run") {
  std::mt19937_64 rng(14);
  const std::size_t n = 20000, d = 5;
  const auto x = random_vec(rng, n * d), y = random_vec(rng, n);
  const auto a = parallel::normal_equations({x, n, d}, y), b = parallel::normal_equations({x, n, d}, y);
  CHECK(a.gram == b.gram);
  CHECK(a.rhs == b.rhs);
}
