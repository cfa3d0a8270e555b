#include <doctest.h>

#include <random>

#include "quadbp/quadbp.hpp"
#include "test_support.hpp"

using namespace quadbp;

TEST_CASE("symmetrize averages off-diagonal pairs") {
  Matrix a(2, 2);
  a << 1, 2, 0, 1;
  Matrix s = symmetrize(a);
  CHECK(s(0, 0) == 1.0);
  CHECK(s(0, 1) == 1.0);
  CHECK(s(1, 0) == 1.0);
  CHECK(s(1, 1) == 1.0);

  Matrix b(2, 2);
  b << 0, 4, -2, 0;
  Matrix sb = symmetrize(b);
  CHECK(sb(0, 1) == 1.0);
  CHECK(sb(1, 0) == 1.0);
  CHECK(sb(0, 0) == 0.0);
}

TEST_CASE("symmetrize is bit-identical on symmetric input") {
  std::mt19937_64 rng(11);
  auto model = testsupport::random_positive_diagonal(rng, 5);
  Matrix s = symmetrize(model.gamma);
  CHECK((s.array() == model.gamma.array()).all());
}

TEST_CASE("symmetrize rejects non-square input") {
  CHECK_THROWS_AS(symmetrize(Matrix::Zero(2, 3)), std::invalid_argument);
}

TEST_CASE("symmetrization preserves the quadratic form") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    Matrix raw(5, 5);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) raw(i, j) = u(rng);
    Matrix s = symmetrize(raw);
    for (int k = 0; k < 100; ++k) {
      Vector x = testsupport::random_vector(rng, 5);
      CHECK(x.dot(s * x) == doctest::Approx(x.dot(raw * x)).epsilon(1e-12));
    }
  }
}

TEST_CASE("edge_set matches the off-diagonal nonzero pattern") {
  auto model = gallery::chord4_model(0.4);
  auto idx = edge_set(model);
  CHECK(idx.size() == 10);
  CHECK(idx.undirected_count == 5);
  // node 1 couples to 0 and 2 only: gamma(1,3) == 0
  CHECK(idx.neighbors[1] == std::vector<int>{0, 2});
  CHECK(idx.edge_id(1, 3) == -1);
  CHECK(idx.edge_id(3, 1) == -1);
}

TEST_CASE("edge_set of a diagonal matrix is empty") {
  auto model = make_model(Matrix::Identity(3, 3) * 2.0);
  auto idx = edge_set(model);
  CHECK(idx.size() == 0);
  CHECK(idx.max_degree() == 0);
}

TEST_CASE("edge_set of the complete 3-node graph has 6 directed edges") {
  auto model = gallery::triangle06_model();
  auto idx = edge_set(model);
  CHECK(idx.size() == 6);
  for (int i = 0; i < 3; ++i) CHECK(idx.degree(i) == 2);
}

TEST_CASE("reverse lookup is an involution") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    auto model = testsupport::random_positive_diagonal(rng, 6, 1.0, 0.5);
    auto idx = edge_set(model);
    for (int e = 0; e < idx.size(); ++e) {
      const int r = idx.reverse_edge[e];
      CHECK(idx.reverse_edge[r] == e);
      CHECK(idx.edges[r].src == idx.edges[e].dst);
      CHECK(idx.edges[r].dst == idx.edges[e].src);
      CHECK(idx.undirected_id[r] == idx.undirected_id[e]);
    }
  }
}

TEST_CASE("make_parameters uniform and per-edge") {
  auto model = gallery::chord4_model(0.4);
  auto idx = edge_set(model);

  auto ones = make_parameters(idx, 1.0);
  auto twos = make_parameters(idx, 2.0);
  auto negs = make_parameters(idx, -1.0);
  for (int e = 0; e < idx.size(); ++e) {
    CHECK(ones.at(idx, e) == 1.0);
    CHECK(twos.at(idx, e) == 2.0);
    CHECK(negs.at(idx, e) == -1.0);
  }

  std::map<std::pair<int, int>, double> per_edge;
  for (int e = 0; e < idx.size(); ++e) {
    auto [i, j] = idx.edges[e];
    if (i < j) per_edge[{i, j}] = 1.0 + i + 10.0 * j;
  }
  auto p = make_parameters(idx, per_edge);
  for (int e = 0; e < idx.size(); ++e) {
    auto [i, j] = idx.edges[e];
    CHECK(p.at(idx, e) == p.at_pair(idx, j, i));  // symmetric storage
  }

  CHECK_THROWS_AS(make_parameters(idx, 0.0), std::invalid_argument);
  per_edge.erase(per_edge.begin());
  CHECK_THROWS_AS(make_parameters(idx, per_edge), std::invalid_argument);
}

TEST_CASE("validate_model reports violations") {
  auto ok = gallery::chord4_model(0.3);
  CHECK(validate_model(ok).empty());

  Matrix g = Matrix::Identity(3, 3);
  g(1, 1) = 0.0;
  auto bad_diag = validate_model(g, Vector::Ones(3));
  REQUIRE(bad_diag.size() == 1);
  CHECK(bad_diag[0] == "nonpositive diagonal at 1");

  Matrix raw(2, 2);
  raw << 1, 2, 0, 1;
  auto asym = validate_model(raw, Vector::Ones(2));
  REQUIRE(asym.size() == 1);
  CHECK(asym[0].find("asymmetric") == 0);
}

TEST_CASE("make_model defaults h to all ones and symmetrizes") {
  Matrix raw(2, 2);
  raw << 2, 1, 0, 2;
  auto model = make_model(raw);
  CHECK(model.h == Vector::Ones(2));
  CHECK(model.gamma(0, 1) == 0.5);
  CHECK(model.gamma(1, 0) == 0.5);
  CHECK_THROWS_AS(make_model(raw, Vector::Ones(3)), std::invalid_argument);
}
