#include <doctest.h>

#include <cmath>
#include <random>

#include "dialeval/error.hpp"
#include "dialeval/stats.hpp"
#include "oracles.hpp"

using namespace dialeval;
using V = std::vector<double>;

TEST_CASE("pearson examples") {
  const V x = {1, 2, 3, 4};
  const auto same = pearson(x, x);
  CHECK(same.r == doctest::Approx(1.0));
  CHECK(same.p == 0.0);
  CHECK(pearson(V{1, 2, 3}, V{6, 4, 2}).r == doctest::Approx(-1.0));
  CHECK(pearson(V{1, 2, 3}, V{1, 3, 2}).r == doctest::Approx(0.5));
  CHECK(pearson(V{1, 2, 3}, V{1, 3, 2}).n == 3);
}

TEST_CASE("spearman examples") {
  CHECK(spearman(V{1, 2, 3, 4}, V{10, 20, 25, 100}).r == doctest::Approx(1.0));
  CHECK(spearman(V{1, 2, 3}, V{3, 1, 2}).r == doctest::Approx(-0.5));
  CHECK(spearman(V{1, 2, 3, 4, 5}, V{1, 2, 3, 5, 4}).r == doctest::Approx(0.9));
}

TEST_CASE("correlation errors") {
  try {
    pearson(V{1, 1, 1}, V{1, 2, 3});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::degenerate);
  }
  CHECK_THROWS_AS(pearson(V{1, 2}, V{1, 2}), Error);
  CHECK_THROWS_AS(spearman(V{1, 2, 3}, V{1, 2}), Error);
}

TEST_CASE("fractional ranks") {
  CHECK(fractional_ranks(V{10, 20, 20, 5}) == V{2, 3.5, 3.5, 1});
  CHECK(fractional_ranks(V{7, 7, 7}) == V{2, 2, 2});
}

TEST_CASE("correlation properties") {
  std::mt19937 gen(3);
  std::uniform_real_distribution<double> u(0.1, 10.0);
  for (int t = 0; t < 50; ++t) {
    V x(8), y(8);
    for (auto& v : x) v = u(gen);
    for (auto& v : y) v = u(gen);
    V cubed = x;
    for (auto& v : cubed) v = v * v * v;
    CHECK(spearman(cubed, y).r == doctest::Approx(spearman(x, y).r).epsilon(1e-12));
    CHECK(pearson(x, y).r == doctest::Approx(pearson(y, x).r).epsilon(1e-12));
    CHECK(spearman(x, y).r == doctest::Approx(spearman(y, x).r).epsilon(1e-12));
    V scaled = y;
    for (auto& v : scaled) v = -2.5 * v + 4.0;
    CHECK(pearson(x, scaled).r == doctest::Approx(-pearson(x, y).r).epsilon(1e-12));
    CHECK(std::abs(pearson(x, y).r - oracle::pearson_r(x, y)) < 1e-12);
    CHECK(std::abs(spearman(x, y).r - oracle::spearman_r(x, y)) < 1e-12);
  }
}

TEST_CASE("p-values") {
  // Hand check against the t distribution: r = 0.5, n = 10 -> t = 1.633, df = 8, two-sided p = 0.1411
  CHECK(correlation_pvalue(0.5, 10) == doctest::Approx(0.1411).epsilon(1e-3));
  CHECK(correlation_pvalue(0.0, 10) == doctest::Approx(1.0));
  CHECK(correlation_pvalue(-1.0, 5) == 0.0);
}

TEST_CASE("correlate_cells") {
  std::mt19937 gen(5);
  std::vector<CorrelationCell> cells;
  for (int c = 0; c < 64; ++c) {
    CorrelationCell cell;
    const int n = 3 + c % 10;
    for (int i = 0; i < n; ++i) {
      cell.x.push_back(static_cast<double>(gen() % 7));
      cell.y.push_back(static_cast<double>(gen() % 7));
    }
    cells.push_back(cell);
  }
  cells.push_back({{1, 1, 1}, {1, 2, 3}});
  cells.push_back({{1, 2}, {1, 2}});
  for (auto kind : {CorrelationKind::spearman, CorrelationKind::pearson}) {
    const auto par = correlate_cells(cells, kind, Exec::parallel);
    const auto ser = correlate_cells(cells, kind, Exec::serial);
    REQUIRE(par.size() == cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      REQUIRE(par[i].has_value() == ser[i].has_value());
      if (par[i]) {
        CHECK(par[i]->r == ser[i]->r);
        CHECK(par[i]->p == ser[i]->p);
      }
    }
    CHECK_FALSE(par[cells.size() - 1].has_value());
    CHECK_FALSE(par[cells.size() - 2].has_value());
  }
}
