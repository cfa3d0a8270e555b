#include <doctest.h>

#include <cmath>
#include <random>

#include "quadbp/quadbp.hpp"
#include "test_support.hpp"

using namespace quadbp;

TEST_CASE("spectral_radius_nonneg basics") {
  CHECK(spectral_radius_nonneg(Matrix::Zero(3, 3)).value == 0.0);

  Matrix a = Matrix::Constant(3, 3, 0.6);
  a.diagonal().setZero();
  auto r = spectral_radius_nonneg(a);
  CHECK(r.converged);
  CHECK(r.value == doctest::Approx(1.2).epsilon(1e-9));

  Matrix g(2, 2);
  g << 1, 0.5, 0.5, 1;
  auto ws = walk_matrix(make_model(g));
  CHECK(spectral_radius_nonneg(ws).value == doctest::Approx(0.5).epsilon(1e-9));

  Matrix neg(1, 1);
  neg << -1.0;
  CHECK_THROWS_AS(spectral_radius_nonneg(neg), std::invalid_argument);
}

TEST_CASE("spectral_radius_nonneg agrees with a dense eigensolve on random matrices") {
  std::mt19937_64 rng(401);
  std::uniform_real_distribution<double> d01(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix a(6, 6);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) a(i, j) = d01(rng) < 0.4 ? 0.0 : d01(rng);
    a = symmetrize(a);
    auto r = spectral_radius_nonneg(a, 1e-11);
    Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
    const double expected = std::max(std::abs(es.eigenvalues()[0]), es.eigenvalues()[5]);
    CHECK(r.value == doctest::Approx(expected).epsilon(1e-8));
  }
}

TEST_CASE("spectral_radius_nonneg reports a best estimate when the budget runs out") {
  std::mt19937_64 rng(402);
  std::uniform_real_distribution<double> d01(0.0, 1.0);
  Matrix a(5, 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) a(i, j) = d01(rng);
  a = symmetrize(a);
  auto tight = spectral_radius_nonneg(a, 1e-12);
  auto starved = spectral_radius_nonneg(a, 1e-12, 1);
  CHECK_FALSE(starved.converged);
  CHECK(std::isfinite(starved.value));
  CHECK(std::abs(starved.value - tight.value) < 1.0);  // a usable estimate, not garbage
  CHECK_THROWS_AS(spectral_radius_nonneg(a, 1e-12, 0), std::invalid_argument);
}

TEST_CASE("spectral_radius_nonneg handles bipartite supports") {
  // plain power iteration stalls on period-2 supports; the shifted iteration
  // must not
  Matrix swap(2, 2);
  swap << 0, 1, 1, 0;
  CHECK(spectral_radius_nonneg(swap).value == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("walk_summability") {
  auto tri = gallery::triangle06_model();
  auto ws = walk_summability(tri);
  CHECK_FALSE(ws.walk_summable);
  CHECK(ws.rho == doctest::Approx(1.2).epsilon(1e-9));

  Matrix g(2, 2);
  g << 1, 0.5, 0.5, 1;
  auto ws2 = walk_summability(make_model(g));
  CHECK(ws2.walk_summable);
  CHECK(ws2.rho == doctest::Approx(0.5).epsilon(1e-9));

  auto ws3 = walk_summability(gallery::chord4_model(0.2));
  CHECK(ws3.walk_summable);

  Matrix bad = Matrix::Zero(2, 2);
  CHECK_THROWS_AS(walk_summability(make_model(bad, Vector::Ones(2))), std::invalid_argument);
}

TEST_CASE("walk_summability flags the boundary as indeterminate") {
  // a 2x2 with off-diagonal exactly 1 sits on the strict boundary rho = 1
  Matrix g(2, 2);
  g << 1, 1, 1, 1;
  auto ws = walk_summability(make_model(g));
  CHECK(ws.indeterminate);
  CHECK_FALSE(ws.walk_summable);
}

TEST_CASE("sdd_witness") {
  Matrix dd(2, 2);
  dd << 2, 1, 1, 2;
  auto w = sdd_witness(make_model(dd));
  REQUIRE(w.has_value());
  // plain diagonal dominance: the all-ones vector works, and so must ours
  for (int i = 0; i < 2; ++i) CHECK((*w)[i] > 0.0);

  CHECK_FALSE(sdd_witness(gallery::triangle06_model()).has_value());

  auto chord = gallery::chord4_model(0.3);
  auto wc = sdd_witness(chord);
  REQUIRE(wc.has_value());
  for (int i = 0; i < 4; ++i) {
    double s = 0.0;
    for (int j = 0; j < 4; ++j)
      if (j != i) s += std::abs(chord.gamma(i, j)) * (*wc)[j];
    CHECK(std::abs(chord.gamma(i, i)) * (*wc)[i] > s);
  }
}

TEST_CASE("positive_definite_check") {
  auto tri = gallery::triangle06_model();
  auto pd = positive_definite_check(tri);
  CHECK(pd.positive_definite);
  CHECK(pd.lambda_min == doctest::Approx(0.4).epsilon(1e-10));

  auto cover = gallery::triangle06_two_cover();
  auto cpd = positive_definite_check(cover.model.gamma);
  CHECK_FALSE(cpd.positive_definite);
  CHECK(cpd.lambda_min == doctest::Approx(-0.2).epsilon(1e-10));

  auto id = positive_definite_check(Matrix::Identity(4, 4));
  CHECK(id.positive_definite);
  CHECK(id.lambda_min == doctest::Approx(1.0));
}

TEST_CASE("depth-0 computation trees are a single node") {
  auto model = gallery::chord4_model(0.3);
  auto idx = edge_set(model);
  auto c = make_parameters(idx, 2.0);
  auto tree = build_computation_tree(model, idx, c, 2, 0);
  CHECK(tree.size() == 1);
  auto el = exact_tree_elimination(tree, model);
  CHECK(el.curvature == model.gamma(2, 2));
  CHECK(el.linear == model.h[2]);
}

TEST_CASE("triangle computation tree at depth 2") {
  auto model = gallery::triangle06_model();
  auto idx = edge_set(model);

  // c = 1: the non-backtracking tree rooted at node 0 is
  // 0; 1, 2; 2', 1'  (five nodes)
  auto c1 = make_parameters(idx, 1.0);
  auto t1 = build_computation_tree(model, idx, c1, 0, 2);
  CHECK(t1.size() == 5);
  std::vector<int> origins;
  for (const auto& nd : t1.nodes) origins.push_back(nd.origin);
  CHECK(origins == std::vector<int>{0, 1, 2, 2, 1});
  for (const auto& nd : t1.nodes) CHECK(nd.weight == 1.0);

  // general c: two backtracking copies of the root appear with node weight
  // c^2 - c
  auto c2 = make_parameters(idx, 2.0);
  auto t2 = build_computation_tree(model, idx, c2, 0, 2);
  CHECK(t2.size() == 7);
  int backtracking = 0;
  for (const auto& nd : t2.nodes)
    if (nd.depth == 2 && nd.origin == 0) {
      ++backtracking;
      CHECK(nd.weight == doctest::Approx(2.0 * 2.0 - 2.0));
    }
  CHECK(backtracking == 2);
}

TEST_CASE("tree elimination on the 2-node model at depth 1") {
  Matrix g(2, 2);
  g << 1, 0.5, 0.5, 1;
  auto model = make_model(g);
  auto idx = edge_set(model);
  auto c = make_parameters(idx, 1.0);
  auto tree = build_computation_tree(model, idx, c, 0, 1);
  auto el = exact_tree_elimination(tree, model);
  CHECK(el.curvature == doctest::Approx(0.75).epsilon(1e-14));
}

TEST_CASE("tree lambda_min matches a dense eigensolve") {
  auto model = gallery::chord4_model(0.3);
  auto idx = edge_set(model);
  for (double cv : {1.0, 2.0, -1.0}) {
    auto c = make_parameters(idx, cv);
    for (int d = 0; d <= 4; ++d) {
      auto tree = build_computation_tree(model, idx, c, 0, d);
      auto el = exact_tree_elimination(tree, model);
      Eigen::SelfAdjointEigenSolver<Matrix> es(tree.as_model(model).gamma,
                                               Eigen::EigenvaluesOnly);
      CHECK(el.lambda_min == doctest::Approx(es.eigenvalues().minCoeff()).epsilon(1e-8));
      CHECK(tree_positive_definite(tree, model) == (es.eigenvalues().minCoeff() > 0.0));
    }
  }
}

TEST_CASE("tree elimination goes unbounded exactly when the engine does") {
  auto model = gallery::triangle06_model();
  auto idx = edge_set(model);
  auto c = make_parameters(idx, 1.0);
  MessageState st = initial_state(idx);
  int t_unbounded = -1;
  for (int t = 1; t <= 50; ++t) {
    st = sync_step(st, model, idx, c);
    if (!st.valid) {
      t_unbounded = t;
      break;
    }
  }
  REQUIRE(t_unbounded > 0);
  auto bad = exact_tree_elimination(build_computation_tree(model, idx, c, 0, t_unbounded), model);
  CHECK(bad.unbounded);
  auto good =
      exact_tree_elimination(build_computation_tree(model, idx, c, 0, t_unbounded - 1), model);
  CHECK_FALSE(good.unbounded);
}

TEST_CASE("gershgorin certificate families") {
  Matrix dd(2, 2);
  dd << 2, 1, 1, 2;
  auto ddm = make_model(dd);
  auto idx = edge_set(ddm);
  // r = s = 1 reduces the families to strict diagonal dominance
  auto cert = gershgorin_certificate(ddm, idx, 1.0, 1.0);
  REQUIRE(cert.has_value());
  CHECK(cert->slack == doctest::Approx(1.0));

  auto tri = gallery::triangle06_model();
  auto tidx = edge_set(tri);
  CHECK_FALSE(gershgorin_certificate(tri, tidx, 1.0, 1.0).has_value());

  auto good = gershgorin_certificate(tri, tidx, 5.0, 0.8);
  REQUIRE(good.has_value());
  // internal family margin at (r=5, s=0.8): 1 - 0.75 - 0.1728
  CHECK(good->slack == doctest::Approx(1.0 - 0.75 - 0.1728).epsilon(1e-12));

  CHECK_THROWS_AS(gershgorin_certificate(tri, tidx, 0.5, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(gershgorin_certificate(tri, tidx, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("find_uniform_r") {
  Matrix dd(2, 2);
  dd << 2, 1, 1, 2;
  auto ddm = make_model(dd);
  auto idx = edge_set(ddm);
  auto cert = find_uniform_r(ddm, idx);
  REQUIRE(cert.has_value());
  CHECK(cert->r == 1.0);  // strictly diagonally dominant models pass at r = 1

  auto tri = gallery::triangle06_model();
  auto tidx = edge_set(tri);
  auto tcert = find_uniform_r(tri, tidx);
  REQUIRE(tcert.has_value());
  CHECK(tcert->r <= 8.0);
  CHECK(tcert->s == doctest::Approx(0.6 + 0.5));

  // r_max exhaustion returns nothing
  CHECK_FALSE(find_uniform_r(tri, tidx, 1.0).has_value());
}

TEST_CASE("certificate soundness: certified trees stay positive definite") {
  struct Case {
    QuadraticModel model;
  };
  Case cases[] = {{gallery::triangle06_model()}, {gallery::rnd4_model()}};
  for (auto& cs : cases) {
    auto idx = edge_set(cs.model);
    auto cert = find_uniform_r(cs.model, idx);
    REQUIRE(cert.has_value());
    auto c = make_parameters(idx, cert->r);
    for (int root = 0; root < cs.model.n; ++root)
      for (int d = 0; d <= 5; ++d) {
        auto tree = build_computation_tree(cs.model, idx, c, root, d);
        CHECK(tree_positive_definite(tree, cs.model));
        CHECK(exact_tree_elimination(tree, cs.model).lambda_min > 0.0);
      }
  }
}

TEST_CASE("certified uniform parameters give monotone convergent variance runs") {
  auto model = gallery::rnd4_model();
  auto idx = edge_set(model);
  auto cert = find_uniform_r(model, idx);
  REQUIRE(cert.has_value());
  auto c = make_parameters(idx, cert->r);
  auto rep = run(model, idx, c, Schedule::synchronous(), 1e-9, 20000);
  CHECK(rep.trees_positive);
  CHECK(rep.a_monotone);
  // the a-coefficients converge even when the means do not
  MessageState st = rep.final_state;
  auto next = sync_step(st, model, idx, c);
  double a_change = 0.0;
  for (int e = 0; e < idx.size(); ++e)
    a_change = std::max(a_change, std::abs(next.msg[e].a - st.msg[e].a));
  CHECK(a_change <= 1e-9);
}

TEST_CASE("walk-summability, sdd witnesses and 2-cover positivity agree on a random corpus") {
  std::mt19937_64 rng(777);
  std::uniform_real_distribution<double> u(-1.0, 1.0), d01(0.0, 1.0);
  int walk_summable_count = 0;
  for (int m = 0; m < 30; ++m) {
    const double scale = 0.1 + 0.9 * d01(rng);
    Matrix g = Matrix::Identity(5, 5);
    for (int i = 0; i < 5; ++i)
      for (int j = i + 1; j < 5; ++j)
        if (d01(rng) < 0.8) {
          g(i, j) = scale * u(rng);
          g(j, i) = g(i, j);
        }
    auto model = make_model(g);
    auto ws = walk_summability(model);
    auto witness = sdd_witness(model);
    CHECK(ws.walk_summable == witness.has_value());

    auto adv = positive_definite_check(adversarial_two_cover(model).model.gamma);
    bool all_random_pd = true;
    for (int s = 0; s < 50; ++s) {
      auto cover = random_two_cover(model, 1000 * m + s);
      all_random_pd =
          all_random_pd && positive_definite_check(cover.model.gamma).positive_definite;
    }
    if (ws.walk_summable) {
      ++walk_summable_count;
      CHECK(adv.positive_definite);
      CHECK(all_random_pd);
    } else if (ws.rho > 1.0) {
      // unit diagonal: the adversarial cover has an eigenvalue at most 1 - rho
      CHECK_FALSE(adv.positive_definite);
      CHECK(adv.lambda_min <= 1.0 - ws.rho + 1e-8);
    }
  }
  CHECK(walk_summable_count > 5);
  CHECK(walk_summable_count < 30);
}

TEST_CASE("the alternating-sign scaled perron lift witnesses 1 - rho on the adversarial cover") {
  std::mt19937_64 rng(778);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int tested = 0;
  for (int m = 0; m < 40 && tested < 6; ++m) {
    Matrix g = Matrix::Identity(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) {
        g(i, j) = 0.8 * u(rng);  // dense: keeps the support connected
        g(j, i) = g(i, j);
      }
    auto model = make_model(g);
    auto ws = walk_summability(model);
    if (ws.rho <= 1.0) continue;
    ++tested;
    Matrix r = walk_matrix(model);
    Vector x = Vector::Ones(4);
    for (int it = 0; it < 2000; ++it) {
      x = r * x + x;  // shifted iteration, converges on bipartite supports too
      x /= x.maxCoeff();
    }
    auto cover = adversarial_two_cover(model);
    Vector z(8);
    for (int i = 0; i < 4; ++i) {
      z[2 * i] = x[i];
      z[2 * i + 1] = -x[i];
    }
    z.normalize();
    CHECK(std::abs(z.dot(cover.model.gamma * z) - (1.0 - ws.rho)) <= 1e-8);
  }
  CHECK(tested >= 6);
}
