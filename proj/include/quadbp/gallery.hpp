#pragma once

#include "quadbp/covers.hpp"
#include "quadbp/model.hpp"

// Small reference instances used by the CLI and the test suites.

namespace quadbp::gallery {

// 4-node chorded cycle, a one-parameter family with mixed-sign couplings:
//   [  1   p  -p  -p ]
//   [  p   1  -p   0 ]
//   [ -p  -p   1  -p ]
//   [ -p   0  -p   1 ]
// Positive definite for |p| < 0.5; standard min-sum converges on it only for
// p below roughly 0.39865.
inline Matrix chord4_matrix(double p) {
  Matrix g(4, 4);
  g << 1, p, -p, -p,
       p, 1, -p, 0,
      -p, -p, 1, -p,
      -p, 0, -p, 1;
  return g;
}

inline QuadraticModel chord4_model(double p) { return make_model(chord4_matrix(p)); }

// Fixed 4x4 positive definite matrix with strongly unbalanced diagonal; the
// synchronous and asynchronous schedules behave very differently on it.
inline Matrix rnd4_matrix() {
  Matrix g(4, 4);
  g << 45, 21, 23, -42,
       21, 83, 8, -32,
       23, 8, 14, -29,
      -42, -32, -29, 134;
  return g;
}

inline QuadraticModel rnd4_model() { return make_model(rnd4_matrix()); }

// Unit-diagonal triangle with 0.6 couplings: positive definite but not
// walk-summable (rho = 1.2), so it owns a 2-cover with a negative eigenvalue.
inline Matrix triangle06_matrix() {
  Matrix g(3, 3);
  g << 1, 0.6, 0.6,
       0.6, 1, 0.6,
       0.6, 0.6, 1;
  return g;
}

inline QuadraticModel triangle06_model() { return make_model(triangle06_matrix()); }

// The specific 6x6 2-cover of triangle06 with minimum eigenvalue -0.2:
// identity permutations on edges (0,1) and (1,2), a swap on (0,2).
inline CoverSpec triangle06_cover_spec() {
  CoverSpec spec;
  spec.fold = 2;
  spec.perm[{0, 1}] = {0, 1};
  spec.perm[{0, 2}] = {1, 0};
  spec.perm[{1, 2}] = {0, 1};
  return spec;
}

inline CoveredModel triangle06_two_cover() {
  return build_cover(triangle06_model(), triangle06_cover_spec());
}

}  // namespace quadbp::gallery
